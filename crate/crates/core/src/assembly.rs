//! Global operators: fractional Gram matrices, cross-mesh coupling and
//! overlap mass matrices.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CldgError, Result};
use crate::frac_kernels::{
    left_frac_deriv_cellpoly, power_terms, right_frac_deriv_cellpoly, CellPolynomial, EndpointRule, FractionalExponent,
    Side,
};
use crate::linalg::{DenseMatrix, LuFactorization};
use crate::mesh_basis::{Axis, Cell, LegendreBasis, MeshTag, OverlappingMesh};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
}

/// Rules shared by every Gram entry of one assembly.
pub struct GramQuadrature<S> {
    s: FractionalExponent<S>,
    plain: EndpointRule<S>,
    left_singular: EndpointRule<S>,
    right_singular: EndpointRule<S>,
}

impl<S: Scalar> GramQuadrature<S> {
    pub fn new(s: FractionalExponent<S>, points: usize) -> Result<Self> {
        let e = -s.value();
        Ok(Self {
            s,
            plain: EndpointRule::new(points, S::zero(), S::zero())?,
            left_singular: EndpointRule::new(points, e, S::zero())?,
            right_singular: EndpointRule::new(points, S::zero(), e)?,
        })
    }

    /// Default rule size for degree k.
    pub fn for_degree(s: FractionalExponent<S>, k: usize) -> Result<Self> {
        Self::new(s, 2 * k + 10)
    }

    /// The pairing (D_L^s trial, D_R^s test) over the real line.
    pub fn entry(&self, trial: &CellPolynomial<S>, test: &CellPolynomial<S>) -> Result<S> {
        let lo = trial.left();
        let hi = test.right();
        if lo >= hi {
            return Ok(S::zero());
        }
        let mut marks = vec![trial.left(), trial.right(), test.left(), test.right()];
        marks.sort_by(|x, y| x.partial_cmp(y).expect("finite cell ends"));
        marks.dedup();
        let inside: Vec<S> = marks.iter().copied().filter(|&m| m >= lo && m <= hi).collect();
        let mut total = S::zero();
        for win in inside.windows(2) {
            let (l, r) = (win[0], win[1]);
            let below = marks.iter().copied().filter(|&m| m < l).fold(S::neg_infinity(), S::max);
            let above = marks.iter().copied().filter(|&m| m > r).fold(S::infinity(), S::min);
            let half = (r - l) * lit(0.5);
            let first_left = half.min(l - below);
            let first_right = half.min(above - r);
            let mid = l + half;
            for (p, q) in graded(l, mid, first_left, true) {
                total += self.piece(trial, test, p, q, p == l)?;
            }
            for (p, q) in graded(mid, r, first_right, false) {
                total += self.piece_right(trial, test, p, q, q == r)?;
            }
        }
        Ok(total)
    }

    fn regular(&self, trial: &CellPolynomial<S>, test: &CellPolynomial<S>, p: S, q: S) -> Result<S> {
        let mut acc = S::zero();
        for (x, w) in self.plain.mapped(p, q) {
            acc += w * left_frac_deriv_cellpoly(trial, self.s, x)? * right_frac_deriv_cellpoly(test, self.s, x)?;
        }
        Ok(acc)
    }

    // piece graded toward its left end, where the trial derivative may blow up
    fn piece(&self, trial: &CellPolynomial<S>, test: &CellPolynomial<S>, p: S, q: S, at_end: bool) -> Result<S> {
        let anchored = at_end && (p == trial.left() || p == trial.right());
        if !anchored {
            return self.regular(trial, test, p, q);
        }
        let [ta, tb] = power_terms(trial, self.s, Side::Left);
        let (singular, rest) = if p == trial.left() { (ta, None) } else { (tb, Some(ta)) };
        let mut acc = S::zero();
        for (x, w) in self.left_singular.mapped(p, q) {
            acc += w * singular.smooth_part(x) * right_frac_deriv_cellpoly(test, self.s, x)?;
        }
        if let Some(rest) = rest {
            for (x, w) in self.plain.mapped(p, q) {
                acc += w * rest.eval(x) * right_frac_deriv_cellpoly(test, self.s, x)?;
            }
        }
        Ok(acc)
    }

    // piece graded toward its right end, where the test derivative may blow up
    fn piece_right(&self, trial: &CellPolynomial<S>, test: &CellPolynomial<S>, p: S, q: S, at_end: bool) -> Result<S> {
        let anchored = at_end && (q == test.left() || q == test.right());
        if !anchored {
            return self.regular(trial, test, p, q);
        }
        let [ub, ua] = power_terms(test, self.s, Side::Right);
        let (singular, rest) = if q == test.right() { (ub, None) } else { (ua, Some(ub)) };
        let mut acc = S::zero();
        for (x, w) in self.right_singular.mapped(p, q) {
            acc += w * singular.smooth_part(x) * left_frac_deriv_cellpoly(trial, self.s, x)?;
        }
        if let Some(rest) = rest {
            for (x, w) in self.plain.mapped(p, q) {
                acc += w * rest.eval(x) * left_frac_deriv_cellpoly(trial, self.s, x)?;
            }
        }
        Ok(acc)
    }
}

/// Splits [l, r] into pieces that double in size away from the graded end.
fn graded<S: Scalar>(l: S, r: S, first: S, from_left: bool) -> Vec<(S, S)> {
    let len = r - l;
    if len <= S::zero() {
        return Vec::new();
    }
    let mut cuts = vec![S::zero()];
    let mut size = first.min(len);
    let mut reached = S::zero();
    while reached + size < len * (S::one() - lit(1e-12)) {
        reached += size;
        cuts.push(reached);
        size *= lit(2.0);
    }
    cuts.push(len);
    cuts.windows(2).map(|w| if from_left { (l + w[0], l + w[1]) } else { (r - w[1], r - w[0]) }).collect()
}

/// Pairing (D_L^s trial, D_R^s test) with the default rule for the larger degree.
pub fn gram_entry<S: Scalar>(
    trial: &CellPolynomial<S>,
    test: &CellPolynomial<S>,
    s: FractionalExponent<S>,
) -> Result<S> {
    GramQuadrature::for_degree(s, trial.degree().max(test.degree()))?.entry(trial, test)
}

/// Dense Gram matrix of one mesh direction together with its LU factors.
///
/// Entry (i, j) is (D_L^s b_j, D_R^s b_i). The left flux solves G q = r,
/// the right flux solves G^T q = r.
#[derive(Debug, Clone)]
pub struct FractionalGram<S> {
    pub mesh_tag: MeshTag,
    pub direction: Direction,
    pub s: FractionalExponent<S>,
    pub n: usize,
    pub k: usize,
    matrix: DenseMatrix<S>,
    lu: LuFactorization<S>,
}

impl<S: Scalar> FractionalGram<S> {
    pub fn matrix(&self) -> &DenseMatrix<S> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn solve(&self, rhs: &[S]) -> Result<Vec<S>> {
        self.check_len(rhs.len())?;
        Ok(self.lu.solve(rhs))
    }

    pub fn solve_transposed(&self, rhs: &[S]) -> Result<Vec<S>> {
        self.check_len(rhs.len())?;
        Ok(self.lu.solve_transposed(rhs))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(CldgError::DimensionMismatch(format!("Gram has size {}, rhs has {len}", self.dim())));
        }
        Ok(())
    }

    /// Writes the matrix as text, one row per line after a header.
    pub fn dump_text(&self, mut out: impl Write) -> Result<()> {
        let tag = match self.mesh_tag {
            MeshTag::Primal => "primal",
            MeshTag::Dual => "dual",
        };
        writeln!(out, "# mesh_tag={tag} s={} N={} k={}", self.s.value(), self.n, self.k)?;
        for r in 0..self.dim() {
            let row: Vec<String> = self.matrix.row(r).iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn width_class<S: Scalar>(cell: &Cell<S>, half_h: S) -> i64 {
    (cell.width() / half_h).round().to_i64().unwrap_or(0)
}

/// Assembles the Gram matrix of one mesh in one direction. Blocks are cached
/// by relative cell position since entries only depend on the geometry of the
/// two cells.
pub fn assemble_gram<S: Scalar>(
    mesh: &OverlappingMesh,
    basis: &LegendreBasis,
    s: FractionalExponent<S>,
    mesh_tag: MeshTag,
    direction: Direction,
) -> Result<FractionalGram<S>> {
    let s = FractionalExponent::for_gram(s.value())?;
    if direction == Direction::Y && mesh.dimension == 1 {
        return Err(CldgError::InvalidMesh("a 1D mesh has no y direction".into()));
    }
    let axis = mesh.axis(mesh_tag);
    let cells = axis.cells::<S>();
    let modes = basis.modes();
    let dim = cells.len() * modes;
    let quad = GramQuadrature::for_degree(s, basis.k)?;
    let half_h = mesh.h::<S>() * lit(0.5);
    let polys: Vec<Vec<CellPolynomial<S>>> =
        cells.iter().map(|c| (0..modes).map(|m| basis.cell_polynomial(c, m)).collect()).collect();
    let mut cache: HashMap<(i64, i64, i64), Vec<S>> = HashMap::new();
    let mut matrix = DenseMatrix::zeros(dim, dim);
    for (ci, test_cell) in cells.iter().enumerate() {
        for (cj, trial_cell) in cells.iter().enumerate() {
            if trial_cell.left >= test_cell.right {
                continue;
            }
            let key = (
                ((trial_cell.left - test_cell.left) / half_h).round().to_i64().unwrap_or(0),
                width_class(test_cell, half_h),
                width_class(trial_cell, half_h),
            );
            if let Entry::Vacant(slot) = cache.entry(key) {
                let mut block = vec![S::zero(); modes * modes];
                for mi in 0..modes {
                    for mj in 0..modes {
                        block[mi * modes + mj] = quad.entry(&polys[cj][mj], &polys[ci][mi])?;
                    }
                }
                slot.insert(block);
            }
            let block = &cache[&key];
            for mi in 0..modes {
                for mj in 0..modes {
                    matrix[(ci * modes + mi, cj * modes + mj)] = block[mi * modes + mj];
                }
            }
        }
    }
    log::debug!("gram {:?} {:?}: {} distinct blocks for {} cells", mesh_tag, direction, cache.len(), cells.len());
    let lu = matrix.lu()?;
    Ok(FractionalGram { mesh_tag, direction, s, n: mesh.n, k: basis.k, matrix, lu })
}

/// Solves G q = rhs.
pub fn solve_aux<S: Scalar>(gram: &FractionalGram<S>, rhs: &[S]) -> Result<Vec<S>> {
    gram.solve(rhs)
}

/// Solves a tensor-product system on a 2D coefficient block stored row-major
/// with `rows` x-indices. The x direction solves along columns, the y
/// direction along rows. `transposed` selects G^T.
pub fn solve_aux_2d<S: Scalar>(gram: &FractionalGram<S>, rhs: &[S], rows: usize, transposed: bool) -> Result<Vec<S>> {
    if rows == 0 || !rhs.len().is_multiple_of(rows) {
        return Err(CldgError::DimensionMismatch("2D block is not rectangular".into()));
    }
    let cols = rhs.len() / rows;
    let solve = |v: &[S]| if transposed { gram.solve_transposed(v) } else { gram.solve(v) };
    let mut out = vec![S::zero(); rhs.len()];
    match gram.direction {
        Direction::X => {
            let mut line = vec![S::zero(); rows];
            for c in 0..cols {
                for r in 0..rows {
                    line[r] = rhs[r * cols + c];
                }
                let q = solve(&line)?;
                for r in 0..rows {
                    out[r * cols + c] = q[r];
                }
            }
        }
        Direction::Y => {
            for r in 0..rows {
                let q = solve(&rhs[r * cols..(r + 1) * cols])?;
                out[r * cols..(r + 1) * cols].copy_from_slice(&q);
            }
        }
    }
    Ok(out)
}

/// How the from-field trace is taken where a to-cell end meets the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryTrace {
    /// Value from the adjacent from-cell.
    OneSided,
    /// The homogeneous boundary value, i.e. the term is dropped.
    Zero,
}

/// Matrix of v -> -(v, phi')_I + [v phi n]_{dI} for every to-mesh test phi.
#[derive(Debug, Clone)]
pub struct CouplingOperator<S> {
    pub from: MeshTag,
    pub to: MeshTag,
    pub trace: BoundaryTrace,
    pub matrix: DenseMatrix<S>,
}

/// Matrix of (b_from, phi_to) over cell intersections.
#[derive(Debug, Clone)]
pub struct OverlapMass<S> {
    pub from: MeshTag,
    pub to: MeshTag,
    pub matrix: DenseMatrix<S>,
}

fn overlapping_pair(mesh: &OverlappingMesh, from: MeshTag, to: MeshTag) -> Result<(Axis, Axis)> {
    if from == to {
        return Err(CldgError::MismatchedMeshes("coupling needs the two different meshes".into()));
    }
    Ok((mesh.axis(from), mesh.axis(to)))
}

fn intersection<S: Scalar>(a: &Cell<S>, b: &Cell<S>) -> Option<(S, S)> {
    let l = a.left.max(b.left);
    let r = a.right.min(b.right);
    (r > l).then_some((l, r))
}

/// Assembles the one-dimensional coupling operator from one mesh to the other.
pub fn assemble_coupling<S: Scalar>(
    mesh: &OverlappingMesh,
    basis: &LegendreBasis,
    from: MeshTag,
    to: MeshTag,
    trace: BoundaryTrace,
) -> Result<CouplingOperator<S>> {
    let (from_axis, to_axis) = overlapping_pair(mesh, from, to)?;
    let modes = basis.modes();
    let from_cells = from_axis.cells::<S>();
    let to_cells = to_axis.cells::<S>();
    let rule = EndpointRule::<S>::new(basis.k + 2, S::zero(), S::zero())?;
    let mut matrix = DenseMatrix::zeros(to_cells.len() * modes, from_cells.len() * modes);
    for (ti, tc) in to_cells.iter().enumerate() {
        for (fi, fc) in from_cells.iter().enumerate() {
            let Some((l, r)) = intersection(tc, fc) else { continue };
            for (x, w) in rule.mapped(l, r) {
                let phi_d = basis.derivatives(tc, x);
                let b = basis.values(fc, x);
                for mt in 0..modes {
                    for mf in 0..modes {
                        matrix[(ti * modes + mt, fi * modes + mf)] -= w * phi_d[mt] * b[mf];
                    }
                }
            }
        }
        for (end, normal) in [(tc.left, -S::one()), (tc.right, S::one())] {
            let on_boundary = end <= S::zero() || end >= S::one();
            if on_boundary && trace == BoundaryTrace::Zero {
                continue;
            }
            let fi = if end >= S::one() { from_cells.len() - 1 } else { from_axis.locate(end)? };
            let fc = &from_cells[fi];
            let phi = basis.values(tc, end);
            let b = basis.values(fc, end);
            for mt in 0..modes {
                for mf in 0..modes {
                    matrix[(ti * modes + mt, fi * modes + mf)] += normal * phi[mt] * b[mf];
                }
            }
        }
    }
    Ok(CouplingOperator { from, to, trace, matrix })
}

/// Assembles the overlap mass matrix from one mesh to the other.
pub fn assemble_overlap_mass<S: Scalar>(
    mesh: &OverlappingMesh,
    basis: &LegendreBasis,
    from: MeshTag,
    to: MeshTag,
) -> Result<OverlapMass<S>> {
    let (from_axis, to_axis) = overlapping_pair(mesh, from, to)?;
    let modes = basis.modes();
    let from_cells = from_axis.cells::<S>();
    let to_cells = to_axis.cells::<S>();
    let rule = EndpointRule::<S>::new(basis.k + 2, S::zero(), S::zero())?;
    let mut matrix = DenseMatrix::zeros(to_cells.len() * modes, from_cells.len() * modes);
    for (ti, tc) in to_cells.iter().enumerate() {
        for (fi, fc) in from_cells.iter().enumerate() {
            let Some((l, r)) = intersection(tc, fc) else { continue };
            for (x, w) in rule.mapped(l, r) {
                let phi = basis.values(tc, x);
                let b = basis.values(fc, x);
                for mt in 0..modes {
                    for mf in 0..modes {
                        matrix[(ti * modes + mt, fi * modes + mf)] += w * phi[mt] * b[mf];
                    }
                }
            }
        }
    }
    Ok(OverlapMass { from, to, matrix })
}

/// Measure of each to-cell, used to check overlap consistency.
pub fn cell_measures<S: Scalar>(mesh: &OverlappingMesh, tag: MeshTag) -> Vec<S> {
    mesh.axis(tag).cells::<S>().iter().map(|c| c.width()).collect()
}

/// Load of the constant mode: the constant basis function equals 1/sqrt(w).
pub fn constant_mode_value<S: Scalar>(cell: &Cell<S>) -> S {
    S::one() / cell.width().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_pieces_cover_interval() {
        let pieces = graded(0.0f64, 0.5, 0.01, true);
        assert!((pieces[0].1 - 0.01).abs() < 1e-15);
        assert!((pieces.last().unwrap().1 - 0.5).abs() < 1e-15);
        for w in pieces.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        let right = graded(0.5f64, 1.0, 0.01, false);
        assert!((right[0].0 - 0.99).abs() < 1e-14);
        assert!((right.last().unwrap().0 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gram_is_block_lower_triangular_and_translation_invariant() {
        let mesh = OverlappingMesh::build(1, 6).unwrap();
        let basis = LegendreBasis::new(1);
        let s = FractionalExponent::new(0.3f64).unwrap();
        let g = assemble_gram(&mesh, &basis, s, MeshTag::Primal, Direction::X).unwrap();
        let m = g.matrix();
        assert_eq!(m[(0, 2)], 0.0);
        // direct recomputation of a cached entry
        let cell = |i: usize| mesh.axis(MeshTag::Primal).cell::<f64>(i);
        let direct = gram_entry(&basis.cell_polynomial(&cell(1), 1), &basis.cell_polynomial(&cell(4), 0), s).unwrap();
        assert!((m[(8, 3)] - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn overlap_and_coupling_constants() {
        let mesh = OverlappingMesh::build(1, 5).unwrap();
        let basis = LegendreBasis::new(2);
        let o = assemble_overlap_mass::<f64>(&mesh, &basis, MeshTag::Primal, MeshTag::Dual).unwrap();
        let ot = assemble_overlap_mass::<f64>(&mesh, &basis, MeshTag::Dual, MeshTag::Primal).unwrap();
        let diff = o.matrix.transpose();
        for r in 0..diff.rows() {
            for c in 0..diff.cols() {
                assert!((diff[(r, c)] - ot.matrix[(r, c)]).abs() < 1e-12);
            }
        }
        let c =
            assemble_coupling::<f64>(&mesh, &basis, MeshTag::Primal, MeshTag::Dual, BoundaryTrace::OneSided).unwrap();
        assert!(assemble_coupling::<f64>(&mesh, &basis, MeshTag::Dual, MeshTag::Dual, BoundaryTrace::Zero).is_err());
        let _ = c;
    }
}
