//! Primal/dual staggered meshes, orthonormal Legendre bases and DG fields.

use serde::{Deserialize, Serialize};

use crate::error::{CldgError, Result};
use crate::frac_kernels::{gauss_legendre, legendre_derivatives, legendre_values, CellPolynomial};
use crate::scalar::{from_usize, lit, Scalar};

/// Identifies one of the two overlapping meshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshTag {
    Primal,
    Dual,
}

impl MeshTag {
    pub fn other(self) -> Self {
        match self {
            MeshTag::Primal => MeshTag::Dual,
            MeshTag::Dual => MeshTag::Primal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<S> {
    pub left: S,
    pub right: S,
}

impl<S: Scalar> Cell<S> {
    pub fn width(&self) -> S {
        self.right - self.left
    }

    pub fn midpoint(&self) -> S {
        (self.left + self.right) * lit(0.5)
    }

    /// Maps x to the reference coordinate in [-1, 1].
    pub fn to_reference(&self, x: S) -> S {
        lit::<S>(2.0) * (x - self.left) / self.width() - S::one()
    }

    pub fn from_reference(&self, xi: S) -> S {
        self.left + (xi + S::one()) * self.width() * lit(0.5)
    }
}

/// One direction of one mesh: the primal partition into N cells, or the dual
/// partition into N+1 cells with half-width cells at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Axis {
    pub n: usize,
    pub tag: MeshTag,
}

impl Axis {
    pub fn num_cells(&self) -> usize {
        match self.tag {
            MeshTag::Primal => self.n,
            MeshTag::Dual => self.n + 1,
        }
    }

    pub fn cell<S: Scalar>(&self, i: usize) -> Cell<S> {
        let h = S::one() / from_usize::<S>(self.n);
        match self.tag {
            MeshTag::Primal => Cell { left: from_usize::<S>(i) * h, right: from_usize::<S>(i + 1) * h },
            MeshTag::Dual => {
                let left = if i == 0 { S::zero() } else { (from_usize::<S>(i) - lit(0.5)) * h };
                let right = if i == self.n { S::one() } else { (from_usize::<S>(i) + lit(0.5)) * h };
                Cell { left, right }
            }
        }
    }

    pub fn cells<S: Scalar>(&self) -> Vec<Cell<S>> {
        (0..self.num_cells()).map(|i| self.cell(i)).collect()
    }

    /// Index of the cell containing x under the half-open convention; the
    /// right end of the domain belongs to the last cell.
    pub fn locate<S: Scalar>(&self, x: S) -> Result<usize> {
        if x.is_nan() || x < S::zero() || x > S::one() {
            return Err(CldgError::Domain(format!("point {x} outside [0, 1]")));
        }
        let scaled = x * from_usize::<S>(self.n);
        let i = match self.tag {
            MeshTag::Primal => scaled.floor().to_usize().unwrap_or(0),
            MeshTag::Dual => (scaled + lit(0.5)).floor().to_usize().unwrap_or(0),
        };
        let mut i = i.min(self.num_cells() - 1);
        // guard against rounding at interfaces
        let c: Cell<S> = self.cell(i);
        if x < c.left && i > 0 {
            i -= 1;
        } else if x >= c.right && i + 1 < self.num_cells() {
            i += 1;
        }
        Ok(i)
    }
}

/// The primal/dual mesh pair on [0,1] or [0,1]^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlappingMesh {
    pub dimension: usize,
    pub n: usize,
}

impl OverlappingMesh {
    pub fn build(dimension: usize, n: usize) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(CldgError::InvalidMesh(format!("dimension must be 1 or 2, got {dimension}")));
        }
        if n < 2 {
            return Err(CldgError::InvalidMesh(format!("need at least 2 cells per direction, got {n}")));
        }
        Ok(Self { dimension, n })
    }

    pub fn h<S: Scalar>(&self) -> S {
        S::one() / from_usize::<S>(self.n)
    }

    pub fn axis(&self, tag: MeshTag) -> Axis {
        Axis { n: self.n, tag }
    }

    /// Total cell count of one mesh.
    pub fn num_cells(&self, tag: MeshTag) -> usize {
        self.axis(tag).num_cells().pow(self.dimension as u32)
    }
}

/// Orthonormal Legendre modes of degree at most k on each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendreBasis {
    pub k: usize,
}

impl LegendreBasis {
    pub fn new(k: usize) -> Self {
        Self { k }
    }

    pub fn modes(&self) -> usize {
        self.k + 1
    }

    /// All modes at x (x may lie outside the cell; the formula is extended).
    pub fn values<S: Scalar>(&self, cell: &Cell<S>, x: S) -> Vec<S> {
        let p = legendre_values(self.k, cell.to_reference(x));
        let w = cell.width();
        p.into_iter()
            .enumerate()
            .map(|(m, v)| v * ((lit::<S>(2.0) * from_usize::<S>(m) + S::one()) / w).sqrt())
            .collect()
    }

    pub fn derivatives<S: Scalar>(&self, cell: &Cell<S>, x: S) -> Vec<S> {
        let d = legendre_derivatives(self.k, cell.to_reference(x));
        let w = cell.width();
        d.into_iter()
            .enumerate()
            .map(|(m, v)| v * ((lit::<S>(2.0) * from_usize::<S>(m) + S::one()) / w).sqrt() * lit::<S>(2.0) / w)
            .collect()
    }

    pub fn cell_polynomial<S: Scalar>(&self, cell: &Cell<S>, m: usize) -> CellPolynomial<S> {
        CellPolynomial::basis_mode(cell.left, cell.right, m).expect("mesh cells have positive width")
    }
}

/// Modal coefficients of a piecewise polynomial on one of the two meshes.
///
/// In 1D the index is `cell * (k+1) + mode`. In 2D the coefficients form a
/// row-major matrix whose row is `cx * (k+1) + mx` and column `cy * (k+1) + my`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DGField<S> {
    pub mesh_tag: MeshTag,
    pub mesh: OverlappingMesh,
    pub basis: LegendreBasis,
    pub coefficients: Vec<S>,
    pub time_stamp: S,
}

impl<S: Scalar> DGField<S> {
    pub fn zeros(mesh: OverlappingMesh, basis: LegendreBasis, mesh_tag: MeshTag) -> Self {
        let len = field_len(&mesh, &basis, mesh_tag);
        Self { mesh_tag, mesh, basis, coefficients: vec![S::zero(); len], time_stamp: S::zero() }
    }

    pub fn from_coefficients(
        mesh: OverlappingMesh,
        basis: LegendreBasis,
        mesh_tag: MeshTag,
        coefficients: Vec<S>,
    ) -> Result<Self> {
        let len = field_len(&mesh, &basis, mesh_tag);
        if coefficients.len() != len {
            return Err(CldgError::DimensionMismatch(format!(
                "expected {len} coefficients, got {}",
                coefficients.len()
            )));
        }
        Ok(Self { mesh_tag, mesh, basis, coefficients, time_stamp: S::zero() })
    }

    /// Unknowns per direction (cells times modes).
    pub fn line_len(&self) -> usize {
        self.mesh.axis(self.mesh_tag).num_cells() * self.basis.modes()
    }

    /// Squared L2 norm, which is the coefficient sum of squares.
    pub fn norm_squared(&self) -> S {
        self.coefficients.iter().map(|&c| c * c).sum()
    }
}

pub fn field_len(mesh: &OverlappingMesh, basis: &LegendreBasis, tag: MeshTag) -> usize {
    (mesh.axis(tag).num_cells() * basis.modes()).pow(mesh.dimension as u32)
}

fn quadrature_points<S: Scalar>(n: usize) -> Vec<(S, S)> {
    let rule = gauss_legendre::<S>(n).expect("positive rule size");
    rule.nodes.into_iter().zip(rule.weights).collect()
}

/// Cellwise L2 projection of f onto the chosen mesh. Points are passed as
/// slices of length `mesh.dimension`.
pub fn l2_project<S: Scalar>(
    f: impl Fn(&[S]) -> S,
    mesh_tag: MeshTag,
    mesh: &OverlappingMesh,
    basis: &LegendreBasis,
) -> DGField<S> {
    let nq = basis.k + 3;
    project_with(f, mesh_tag, mesh, basis, nq)
}

/// L2 projection with an explicit number of Gauss points per direction.
pub fn project_with<S: Scalar>(
    f: impl Fn(&[S]) -> S,
    mesh_tag: MeshTag,
    mesh: &OverlappingMesh,
    basis: &LegendreBasis,
    points: usize,
) -> DGField<S> {
    let rule = quadrature_points::<S>(points);
    let axis = mesh.axis(mesh_tag);
    let modes = basis.modes();
    let mut field = DGField::zeros(*mesh, *basis, mesh_tag);
    let half = lit::<S>(0.5);
    match mesh.dimension {
        1 => {
            for (ci, cell) in axis.cells::<S>().iter().enumerate() {
                for &(t, w) in &rule {
                    let x = cell.from_reference(t);
                    let v = f(&[x]) * w * cell.width() * half;
                    for (m, b) in basis.values(cell, x).into_iter().enumerate() {
                        field.coefficients[ci * modes + m] += v * b;
                    }
                }
            }
        }
        _ => {
            let line = axis.num_cells() * modes;
            let cells = axis.cells::<S>();
            for (cx, cellx) in cells.iter().enumerate() {
                for (cy, celly) in cells.iter().enumerate() {
                    for &(tx, wx) in &rule {
                        let x = cellx.from_reference(tx);
                        let bx = basis.values(cellx, x);
                        for &(ty, wy) in &rule {
                            let y = celly.from_reference(ty);
                            let by = basis.values(celly, y);
                            let v = f(&[x, y]) * wx * wy * cellx.width() * celly.width() * half * half;
                            for mx in 0..modes {
                                for my in 0..modes {
                                    field.coefficients[(cx * modes + mx) * line + cy * modes + my] +=
                                        v * bx[mx] * by[my];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    field
}

/// Value of the field at a point of the unit interval or square.
pub fn evaluate_field<S: Scalar>(field: &DGField<S>, point: &[S]) -> Result<S> {
    if point.len() != field.mesh.dimension {
        return Err(CldgError::DimensionMismatch(format!(
            "point has {} coordinates, mesh has dimension {}",
            point.len(),
            field.mesh.dimension
        )));
    }
    let axis = field.mesh.axis(field.mesh_tag);
    let modes = field.basis.modes();
    let c = &field.coefficients;
    if field.mesh.dimension == 1 {
        let i = axis.locate(point[0])?;
        let b = field.basis.values(&axis.cell(i), point[0]);
        return Ok((0..modes).map(|m| c[i * modes + m] * b[m]).sum());
    }
    let line = axis.num_cells() * modes;
    let ix = axis.locate(point[0])?;
    let iy = axis.locate(point[1])?;
    let bx = field.basis.values(&axis.cell(ix), point[0]);
    let by = field.basis.values(&axis.cell(iy), point[1]);
    let mut acc = S::zero();
    for mx in 0..modes {
        for my in 0..modes {
            acc += c[(ix * modes + mx) * line + iy * modes + my] * bx[mx] * by[my];
        }
    }
    Ok(acc)
}

/// L2 distance between the field and a function, with k+3 Gauss points per
/// direction on every cell.
pub fn l2_error<S: Scalar>(field: &DGField<S>, exact: impl Fn(&[S]) -> S) -> S {
    let basis = field.basis;
    let rule = quadrature_points::<S>(basis.k + 3);
    let axis = field.mesh.axis(field.mesh_tag);
    let modes = basis.modes();
    let c = &field.coefficients;
    let half = lit::<S>(0.5);
    let mut sum = S::zero();
    if field.mesh.dimension == 1 {
        for (ci, cell) in axis.cells::<S>().iter().enumerate() {
            for &(t, w) in &rule {
                let x = cell.from_reference(t);
                let b = basis.values(cell, x);
                let uh: S = (0..modes).map(|m| c[ci * modes + m] * b[m]).sum();
                let e = exact(&[x]) - uh;
                sum += w * cell.width() * half * e * e;
            }
        }
        return sum.sqrt();
    }
    let line = axis.num_cells() * modes;
    let cells = axis.cells::<S>();
    for (cx, cellx) in cells.iter().enumerate() {
        for (cy, celly) in cells.iter().enumerate() {
            for &(tx, wx) in &rule {
                let x = cellx.from_reference(tx);
                let bx = basis.values(cellx, x);
                for &(ty, wy) in &rule {
                    let y = celly.from_reference(ty);
                    let by = basis.values(celly, y);
                    let mut uh = S::zero();
                    for mx in 0..modes {
                        for my in 0..modes {
                            uh += c[(cx * modes + mx) * line + cy * modes + my] * bx[mx] * by[my];
                        }
                    }
                    let e = exact(&[x, y]) - uh;
                    sum += wx * wy * cellx.width() * celly.width() * half * half * e * e;
                }
            }
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_widths() {
        let mesh = OverlappingMesh::build(1, 4).unwrap();
        let widths: Vec<f64> = mesh.axis(MeshTag::Dual).cells::<f64>().iter().map(|c| c.width()).collect();
        assert_eq!(widths, vec![0.125, 0.25, 0.25, 0.25, 0.125]);
        assert_eq!(OverlappingMesh::build(2, 4).unwrap().num_cells(MeshTag::Dual), 25);
        assert_eq!(OverlappingMesh::build(2, 4).unwrap().num_cells(MeshTag::Primal), 16);
        assert!(OverlappingMesh::build(1, 1).is_err());
        assert!(OverlappingMesh::build(3, 4).is_err());
    }

    #[test]
    fn locate_half_open() {
        let axis = Axis { n: 4, tag: MeshTag::Primal };
        assert_eq!(axis.locate(0.25f64).unwrap(), 1);
        assert_eq!(axis.locate(1.0f64).unwrap(), 3);
        let dual = Axis { n: 4, tag: MeshTag::Dual };
        assert_eq!(dual.locate(0.125f64).unwrap(), 1);
        assert_eq!(dual.locate(0.1f64).unwrap(), 0);
        assert_eq!(dual.locate(0.875f64).unwrap(), 4);
        assert!(dual.locate(1.5f64).is_err());
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let mesh = OverlappingMesh::build(2, 3).unwrap();
        let basis = LegendreBasis::new(2);
        let f = |p: &[f64]| 1.0 + p[0] - 2.0 * p[1] * p[1] + p[0] * p[1];
        for tag in [MeshTag::Primal, MeshTag::Dual] {
            let field = l2_project(f, tag, &mesh, &basis);
            for &(x, y) in &[(0.1, 0.2), (0.77, 0.5), (0.33, 0.99)] {
                assert!((evaluate_field(&field, &[x, y]).unwrap() - f(&[x, y])).abs() < 1e-12);
            }
            assert!(l2_error(&field, f) < 1e-12);
        }
    }
}
