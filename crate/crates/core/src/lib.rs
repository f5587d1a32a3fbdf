//! Central local discontinuous Galerkin solver for one- and two-dimensional
//! space-fractional diffusion on a pair of staggered, overlapping meshes.
//!
//! The crate is generic over the floating-point type through [`Scalar`];
//! the aliases at the bottom fix it to `f64` for everyday use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod error;
pub mod frac_kernels;
pub mod harness;
pub mod linalg;
pub mod mesh_basis;
pub mod problems;
pub mod scalar;
pub mod solver;

pub use error::{CldgError, Result};
pub use scalar::Scalar;

pub type CellPolynomial = frac_kernels::CellPolynomial<f64>;
pub type DGField = mesh_basis::DGField<f64>;
pub type FractionalGram = assembly::FractionalGram<f64>;
pub type CouplingOperator = assembly::CouplingOperator<f64>;
pub type ProblemSpec = solver::ProblemSpec<f64>;
pub type SolverState = solver::SolverState<f64>;
pub type Operators = solver::Operators<f64>;
pub type Solver = solver::Solver<f64>;
pub type TimeControls = solver::TimeControls<f64>;
pub type ManufacturedProblem = problems::ManufacturedProblem<f64>;
