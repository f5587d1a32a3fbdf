use cldg_core::assembly::{assemble_coupling, assemble_overlap_mass, cell_measures, BoundaryTrace};
use cldg_core::frac_kernels::gauss_legendre;
use cldg_core::mesh_basis::{l2_project, LegendreBasis, MeshTag, OverlappingMesh};

const PAIRS: [(MeshTag, MeshTag); 2] = [(MeshTag::Primal, MeshTag::Dual), (MeshTag::Dual, MeshTag::Primal)];

#[test]
fn overlap_mass_is_its_own_transpose_across_meshes() {
    let mesh = OverlappingMesh::build(1, 5).unwrap();
    let basis = LegendreBasis::new(2);
    let pd = assemble_overlap_mass::<f64>(&mesh, &basis, MeshTag::Primal, MeshTag::Dual).unwrap().matrix;
    let dp = assemble_overlap_mass::<f64>(&mesh, &basis, MeshTag::Dual, MeshTag::Primal).unwrap().matrix;
    for i in 0..pd.rows() {
        for j in 0..pd.cols() {
            assert!((pd[(i, j)] - dp[(j, i)]).abs() < 1e-12);
        }
    }
}

#[test]
fn overlap_mass_of_one_gives_cell_measures() {
    let mesh = OverlappingMesh::build(1, 4).unwrap();
    let basis = LegendreBasis::new(1);
    for (from, to) in PAIRS {
        let ones = l2_project::<f64>(|_| 1.0, from, &mesh, &basis);
        let m = assemble_overlap_mass::<f64>(&mesh, &basis, from, to).unwrap().matrix;
        let out = m.matvec(&ones.coefficients);
        for (c, w) in mesh.axis(to).cells::<f64>().iter().zip(cell_measures::<f64>(&mesh, to)) {
            let i = mesh.axis(to).locate(c.midpoint()).unwrap();
            // the constant mode is 1/sqrt(w), so (1, phi_0) = sqrt(w)
            assert!((out[i * 2] - w.sqrt()).abs() < 1e-13);
        }
    }
}

#[test]
fn coupling_reproduces_derivative_moments_of_polynomials() {
    let mesh = OverlappingMesh::build(1, 6).unwrap();
    let basis = LegendreBasis::new(2);
    let u = |x: f64| 0.3 + x - 2.0 * x * x;
    let du = |x: f64| 1.0 - 4.0 * x;
    let rule = gauss_legendre::<f64>(4).unwrap();
    for (from, to) in PAIRS {
        let field = l2_project::<f64>(|p| u(p[0]), from, &mesh, &basis);
        let c = assemble_coupling::<f64>(&mesh, &basis, from, to, BoundaryTrace::OneSided).unwrap();
        let out = c.matrix.matvec(&field.coefficients);
        for (i, cell) in mesh.axis(to).cells::<f64>().iter().enumerate() {
            for m in 0..3 {
                let want: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&z, &w)| {
                        let x = cell.from_reference(z);
                        0.5 * cell.width() * w * du(x) * basis.values(cell, x)[m]
                    })
                    .sum();
                assert!((out[i * 3 + m] - want).abs() < 1e-10, "{to:?} cell {i} mode {m}");
            }
        }
    }
}

#[test]
fn zero_trace_coupling_is_minus_the_adjoint_of_the_flux_coupling() {
    for k in [1, 2] {
        let mesh = OverlappingMesh::build(1, 5).unwrap();
        let basis = LegendreBasis::new(k);
        for (from, to) in PAIRS {
            let aux = assemble_coupling::<f64>(&mesh, &basis, from, to, BoundaryTrace::Zero).unwrap().matrix;
            let flux = assemble_coupling::<f64>(&mesh, &basis, to, from, BoundaryTrace::OneSided).unwrap().matrix;
            for i in 0..aux.rows() {
                for j in 0..aux.cols() {
                    assert!((aux[(i, j)] + flux[(j, i)]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn same_mesh_coupling_is_rejected() {
    let mesh = OverlappingMesh::build(1, 4).unwrap();
    let basis = LegendreBasis::new(1);
    assert!(assemble_coupling::<f64>(&mesh, &basis, MeshTag::Dual, MeshTag::Dual, BoundaryTrace::Zero).is_err());
}
