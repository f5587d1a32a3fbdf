//! Semi-discrete CLDG right-hand side, explicit time stepping and the
//! energy monitor.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_coupling, assemble_gram, assemble_overlap_mass, solve_aux_2d, BoundaryTrace, Direction, FractionalGram,
};
use crate::error::{CldgError, Result};
use crate::frac_kernels::FractionalOrder;
use crate::linalg::DenseMatrix;
use crate::mesh_basis::{project_with, DGField, LegendreBasis, MeshTag, OverlappingMesh};
use crate::scalar::{lit, Scalar};

pub type SpaceFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;
pub type TimeFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;
pub type SpaceTimeFn<S> = Arc<dyn Fn(&[S], S) -> S + Send + Sync>;

/// Source term f of the diffusion equation.
#[derive(Clone)]
pub enum Source<S> {
    Zero,
    /// Sum of products theta_r(t) * f_r(x).
    Separable(Vec<(TimeFn<S>, SpaceFn<S>)>),
    General(SpaceTimeFn<S>),
}

impl<S: Scalar> Source<S> {
    pub fn eval(&self, x: &[S], t: S) -> S {
        match self {
            Source::Zero => S::zero(),
            Source::Separable(terms) => terms.iter().map(|(th, f)| th(t) * f(x)).sum(),
            Source::General(f) => f(x, t),
        }
    }
}

impl<S> fmt::Debug for Source<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => write!(f, "Source::Zero"),
            Source::Separable(terms) => write!(f, "Source::Separable({} terms)", terms.len()),
            Source::General(_) => write!(f, "Source::General"),
        }
    }
}

/// Continuous problem data: orders, diffusivities, source, initial datum, horizon.
#[derive(Clone)]
pub struct ProblemSpec<S> {
    pub dimension: usize,
    pub alpha: FractionalOrder<S>,
    pub beta: FractionalOrder<S>,
    pub diffusivity: [S; 2],
    pub source: Source<S>,
    pub initial: SpaceFn<S>,
    pub horizon: S,
}

impl<S: Scalar> ProblemSpec<S> {
    pub fn one_d(alpha: S, d: S, source: Source<S>, initial: SpaceFn<S>, horizon: S) -> Result<Self> {
        let alpha = FractionalOrder::new(alpha)?;
        Self { dimension: 1, alpha, beta: alpha, diffusivity: [d, d], source, initial, horizon }.validated()
    }

    pub fn two_d(alpha: S, beta: S, d: [S; 2], source: Source<S>, initial: SpaceFn<S>, horizon: S) -> Result<Self> {
        Self {
            dimension: 2,
            alpha: FractionalOrder::new(alpha)?,
            beta: FractionalOrder::new(beta)?,
            diffusivity: d,
            source,
            initial,
            horizon,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(CldgError::InvalidProblem(format!("unsupported dimension {}", self.dimension)));
        }
        if self.diffusivity.iter().take(self.dimension).any(|&d| !(d > S::zero())) {
            return Err(CldgError::InvalidProblem("diffusivities must be positive".into()));
        }
        if !(self.horizon > S::zero()) {
            return Err(CldgError::InvalidProblem("final time must be positive".into()));
        }
        Ok(self)
    }

    /// Order used by the step-size bound.
    pub fn effective_order(&self) -> S {
        if self.dimension == 1 {
            self.alpha.value()
        } else {
            self.alpha.value().min(self.beta.value())
        }
    }

    /// The same problem with the source switched off.
    pub fn without_source(&self) -> Self {
        Self { source: Source::Zero, ..self.clone() }
    }
}

impl<S: Scalar> fmt::Debug for ProblemSpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dimension", &self.dimension)
            .field("alpha", &self.alpha.value())
            .field("beta", &self.beta.value())
            .field("diffusivity", &self.diffusivity)
            .field("source", &self.source)
            .field("horizon", &self.horizon)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    ForwardEuler,
    SspRk3,
}

impl std::str::FromStr for Integrator {
    type Err = CldgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "forward-euler" | "euler" => Ok(Integrator::ForwardEuler),
            "ssp-rk3" | "rk3" => Ok(Integrator::SspRk3),
            other => Err(CldgError::Config(format!("unknown integrator '{other}'"))),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::ForwardEuler => "forward-euler",
            Integrator::SspRk3 => "ssp-rk3",
        })
    }
}

/// Step-size coefficients (c_max, c_tau) with tau_max = c_max h^alpha and
/// tau = c_tau tau_max.
pub fn default_step_coefficients(dimension: usize, k: usize) -> (f64, f64) {
    match (dimension, k) {
        (1, 1) => (0.1, 0.1),
        (1, 2) => (0.005, 0.01),
        (2, 1) => (0.02, 0.1),
        _ => (0.005, 0.01),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeControls<S> {
    pub tau_max: S,
    pub tau: S,
    pub integrator: Integrator,
}

impl<S: Scalar> TimeControls<S> {
    pub fn new(tau_max: S, tau: S, integrator: Integrator) -> Result<Self> {
        if !(tau > S::zero() && tau <= tau_max) {
            return Err(CldgError::InvalidControls(format!(
                "need 0 < tau <= tau_max, got tau={tau}, tau_max={tau_max}"
            )));
        }
        Ok(Self { tau_max, tau, integrator })
    }

    pub fn from_coefficients(c_max: S, c_tau: S, h: S, order: S, integrator: Integrator) -> Result<Self> {
        let tau_max = c_max * h.powf(order);
        Self::new(tau_max, c_tau * tau_max, integrator)
    }

    /// Step sizes used for the published experiments.
    pub fn defaults(problem: &ProblemSpec<S>, mesh: &OverlappingMesh, basis: &LegendreBasis) -> Result<Self> {
        let (c_max, c_tau) = default_step_coefficients(problem.dimension, basis.k);
        Self::from_coefficients(lit(c_max), lit(c_tau), mesh.h(), problem.effective_order(), Integrator::SspRk3)
    }
}

/// Primal and dual solutions at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState<S> {
    pub u1: DGField<S>,
    pub u2: DGField<S>,
    pub t: S,
    pub energy_trace: Vec<(S, S)>,
}

impl<S: Scalar> SolverState<S> {
    pub fn zeros(mesh: OverlappingMesh, basis: LegendreBasis) -> Self {
        Self {
            u1: DGField::zeros(mesh, basis, MeshTag::Primal),
            u2: DGField::zeros(mesh, basis, MeshTag::Dual),
            t: S::zero(),
            energy_trace: Vec::new(),
        }
    }

    fn packed(&self) -> Vec<S> {
        let mut v = self.u1.coefficients.clone();
        v.extend_from_slice(&self.u2.coefficients);
        v
    }

    fn unpack(&mut self, v: &[S], t: S) {
        let n1 = self.u1.coefficients.len();
        self.u1.coefficients.copy_from_slice(&v[..n1]);
        self.u2.coefficients.copy_from_slice(&v[n1..]);
        self.t = t;
        self.u1.time_stamp = t;
        self.u2.time_stamp = t;
    }
}

/// Squared L2 norm of both fields.
pub fn energy<S: Scalar>(state: &SolverState<S>) -> S {
    state.u1.norm_squared() + state.u2.norm_squared()
}

/// Left and right fluxes of one direction on one mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxPair<S> {
    pub left: Vec<S>,
    pub right: Vec<S>,
}

impl<S: Scalar> FluxPair<S> {
    pub fn sum(&self) -> Vec<S> {
        self.left.iter().zip(&self.right).map(|(&a, &b)| a + b).collect()
    }
}

/// Auxiliary fluxes on both meshes, one pair per direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryFluxes<S> {
    pub primal: Vec<FluxPair<S>>,
    pub dual: Vec<FluxPair<S>>,
}

/// Every time-independent matrix of the scheme on one mesh pair.
#[derive(Debug, Clone)]
pub struct Operators<S> {
    pub mesh: OverlappingMesh,
    pub basis: LegendreBasis,
    pub aux_trace: BoundaryTrace,
    /// Gram matrices indexed [direction][mesh] with mesh 0 primal, 1 dual.
    pub grams: Vec<[FractionalGram<S>; 2]>,
    pub flux_dual_to_primal: DenseMatrix<S>,
    pub flux_primal_to_dual: DenseMatrix<S>,
    pub aux_primal_to_dual: DenseMatrix<S>,
    pub aux_dual_to_primal: DenseMatrix<S>,
    pub overlap_dual_to_primal: DenseMatrix<S>,
    pub overlap_primal_to_dual: DenseMatrix<S>,
}

impl<S: Scalar> Operators<S> {
    pub fn assemble(problem: &ProblemSpec<S>, mesh: &OverlappingMesh, basis: &LegendreBasis) -> Result<Self> {
        Self::assemble_with_trace(problem, mesh, basis, BoundaryTrace::Zero)
    }

    /// `aux_trace` selects the domain-boundary trace in the auxiliary
    /// equations; fluxes always use the one-sided trace.
    pub fn assemble_with_trace(
        problem: &ProblemSpec<S>,
        mesh: &OverlappingMesh,
        basis: &LegendreBasis,
        aux_trace: BoundaryTrace,
    ) -> Result<Self> {
        if problem.dimension != mesh.dimension {
            return Err(CldgError::DimensionMismatch(format!(
                "problem is {}D, mesh is {}D",
                problem.dimension, mesh.dimension
            )));
        }
        let sx = problem.alpha.half_exponent();
        let mut grams = vec![[
            assemble_gram(mesh, basis, sx, MeshTag::Primal, Direction::X)?,
            assemble_gram(mesh, basis, sx, MeshTag::Dual, Direction::X)?,
        ]];
        if mesh.dimension == 2 {
            let sy = problem.beta.half_exponent();
            let pair = if sy == sx {
                let mut p = grams[0].clone();
                for g in &mut p {
                    g.direction = Direction::Y;
                }
                p
            } else {
                [
                    assemble_gram(mesh, basis, sy, MeshTag::Primal, Direction::Y)?,
                    assemble_gram(mesh, basis, sy, MeshTag::Dual, Direction::Y)?,
                ]
            };
            grams.push(pair);
        }
        let coupling = |from, to, trace| assemble_coupling::<S>(mesh, basis, from, to, trace).map(|c| c.matrix);
        Ok(Self {
            mesh: *mesh,
            basis: *basis,
            aux_trace,
            grams,
            flux_dual_to_primal: coupling(MeshTag::Dual, MeshTag::Primal, BoundaryTrace::OneSided)?,
            flux_primal_to_dual: coupling(MeshTag::Primal, MeshTag::Dual, BoundaryTrace::OneSided)?,
            aux_primal_to_dual: coupling(MeshTag::Primal, MeshTag::Dual, aux_trace)?,
            aux_dual_to_primal: coupling(MeshTag::Dual, MeshTag::Primal, aux_trace)?,
            overlap_dual_to_primal: assemble_overlap_mass(mesh, basis, MeshTag::Dual, MeshTag::Primal)?.matrix,
            overlap_primal_to_dual: assemble_overlap_mass(mesh, basis, MeshTag::Primal, MeshTag::Dual)?.matrix,
        })
    }

    fn line_len(&self, tag: MeshTag) -> usize {
        self.mesh.axis(tag).num_cells() * self.basis.modes()
    }

    fn field_len(&self, tag: MeshTag) -> usize {
        self.line_len(tag).pow(self.mesh.dimension as u32)
    }

    fn coupling_to(&self, to: MeshTag) -> (&DenseMatrix<S>, &DenseMatrix<S>, &DenseMatrix<S>) {
        match to {
            MeshTag::Primal => (&self.aux_dual_to_primal, &self.overlap_dual_to_primal, &self.flux_dual_to_primal),
            MeshTag::Dual => (&self.aux_primal_to_dual, &self.overlap_primal_to_dual, &self.flux_primal_to_dual),
        }
    }

    /// Fluxes on mesh `to` computed from the field u living on the other mesh.
    fn fluxes_on(&self, to: MeshTag, u: &[S]) -> Result<Vec<FluxPair<S>>> {
        let (aux, overlap, _) = self.coupling_to(to);
        let idx = if to == MeshTag::Primal { 0 } else { 1 };
        if self.mesh.dimension == 1 {
            let r = aux.matvec(u);
            let g = &self.grams[0][idx];
            return Ok(vec![FluxPair { left: g.solve(&r)?, right: g.solve_transposed(&r)? }]);
        }
        let from_line = self.line_len(to.other());
        let to_line = self.line_len(to);
        let u = DenseMatrix::from_row_major(from_line, from_line, u.to_vec())?;
        let rx = aux.matmul(&u).matmul_transposed(overlap);
        let ry = overlap.matmul(&u).matmul_transposed(aux);
        let gx = &self.grams[0][idx];
        let gy = &self.grams[1][idx];
        Ok(vec![
            FluxPair {
                left: solve_aux_2d(gx, rx.as_slice(), to_line, false)?,
                right: solve_aux_2d(gx, rx.as_slice(), to_line, true)?,
            },
            FluxPair {
                left: solve_aux_2d(gy, ry.as_slice(), to_line, false)?,
                right: solve_aux_2d(gy, ry.as_slice(), to_line, true)?,
            },
        ])
    }

    /// Time derivative on mesh `to` without the source.
    fn rate_on(&self, to: MeshTag, own: &[S], other: &[S], fluxes: &[FluxPair<S>], tau_max: S, d: [S; 2]) -> Vec<S> {
        let (_, overlap, flux) = self.coupling_to(to);
        let inv = S::one() / tau_max;
        if self.mesh.dimension == 1 {
            let mut out = overlap.matvec(other);
            for (o, &u) in out.iter_mut().zip(own) {
                *o = (*o - u) * inv;
            }
            flux.matvec_add(d[0], &fluxes[0].sum(), &mut out);
            return out;
        }
        let other_line = self.line_len(to.other());
        let to_line = self.line_len(to);
        let m = |v: Vec<S>, n: usize| DenseMatrix::from_row_major(n, n, v).expect("square block");
        let relax = overlap.matmul(&m(other.to_vec(), other_line)).matmul_transposed(overlap);
        let qx = flux.matmul(&m(fluxes[0].sum(), other_line)).matmul_transposed(overlap);
        let qy = overlap.matmul(&m(fluxes[1].sum(), other_line)).matmul_transposed(flux);
        let mut out = vec![S::zero(); to_line * to_line];
        for i in 0..out.len() {
            out[i] = (relax.as_slice()[i] - own[i]) * inv + d[0] * qx.as_slice()[i] + d[1] * qy.as_slice()[i];
        }
        out
    }
}

/// q fields on both meshes from the current state.
pub fn compute_aux<S: Scalar>(state: &SolverState<S>, ops: &Operators<S>) -> Result<AuxiliaryFluxes<S>> {
    Ok(AuxiliaryFluxes {
        dual: ops.fluxes_on(MeshTag::Dual, &state.u1.coefficients)?,
        primal: ops.fluxes_on(MeshTag::Primal, &state.u2.coefficients)?,
    })
}

/// Source loads (f(t), v) on both meshes.
pub fn source_load<S: Scalar>(problem: &ProblemSpec<S>, ops: &Operators<S>, t: S) -> (Vec<S>, Vec<S>) {
    let points = ops.basis.k + 6;
    let load = |tag| match &problem.source {
        Source::Zero => vec![S::zero(); ops.field_len(tag)],
        src => project_with(|x: &[S]| src.eval(x, t), tag, &ops.mesh, &ops.basis, points).coefficients,
    };
    (load(MeshTag::Primal), load(MeshTag::Dual))
}

fn homogeneous<S: Scalar>(ops: &Operators<S>, u: &[S], tau_max: S, d: [S; 2]) -> Result<Vec<S>> {
    let n1 = ops.field_len(MeshTag::Primal);
    let (u1, u2) = u.split_at(n1);
    let q_dual = ops.fluxes_on(MeshTag::Dual, u1)?;
    let q_primal = ops.fluxes_on(MeshTag::Primal, u2)?;
    let mut out = ops.rate_on(MeshTag::Primal, u1, u2, &q_dual, tau_max, d);
    out.extend(ops.rate_on(MeshTag::Dual, u2, u1, &q_primal, tau_max, d));
    Ok(out)
}

/// (du1/dt, du2/dt) at time t.
pub fn semidiscrete_rhs<S: Scalar>(
    state: &SolverState<S>,
    t: S,
    ops: &Operators<S>,
    problem: &ProblemSpec<S>,
    controls: &TimeControls<S>,
) -> Result<(Vec<S>, Vec<S>)> {
    let mut out = homogeneous(ops, &state.packed(), controls.tau_max, problem.diffusivity)?;
    let (f1, f2) = source_load(problem, ops, t);
    for (o, f) in out.iter_mut().zip(f1.iter().chain(&f2)) {
        *o += *f;
    }
    let n1 = state.u1.coefficients.len();
    let du2 = out.split_off(n1);
    Ok((out, du2))
}

/// Time-dependent part of the right-hand side.
enum Loads<S> {
    None,
    Separable(Vec<(TimeFn<S>, Vec<S>)>),
    General,
}

/// Problem, operators and controls bound together for time stepping.
pub struct Solver<S: Scalar> {
    pub problem: ProblemSpec<S>,
    pub ops: Operators<S>,
    pub controls: TimeControls<S>,
    loads: Loads<S>,
}

/// One-step matrices of a linear scheme: u <- S u + sum of weighted loads.
struct Propagator<S> {
    step: DenseMatrix<S>,
    // per load: vectors multiplying theta(t), theta(t + tau), theta(t + tau/2)
    weights: Vec<[Vec<S>; 3]>,
}

impl<S: Scalar> Solver<S> {
    pub fn new(problem: ProblemSpec<S>, ops: Operators<S>, controls: TimeControls<S>) -> Self {
        let loads = match &problem.source {
            Source::Zero => Loads::None,
            Source::Separable(terms) => {
                let points = ops.basis.k + 6;
                Loads::Separable(
                    terms
                        .iter()
                        .map(|(theta, f)| {
                            let mut v = project_with(|x: &[S]| f(x), MeshTag::Primal, &ops.mesh, &ops.basis, points)
                                .coefficients;
                            v.extend(
                                project_with(|x: &[S]| f(x), MeshTag::Dual, &ops.mesh, &ops.basis, points).coefficients,
                            );
                            (theta.clone(), v)
                        })
                        .collect(),
                )
            }
            Source::General(_) => Loads::General,
        };
        Self { problem, ops, controls, loads }
    }

    /// Assembles operators and picks the default step sizes.
    pub fn with_defaults(problem: ProblemSpec<S>, mesh: &OverlappingMesh, basis: &LegendreBasis) -> Result<Self> {
        let ops = Operators::assemble(&problem, mesh, basis)?;
        let controls = TimeControls::defaults(&problem, mesh, basis)?;
        Ok(Self::new(problem, ops, controls))
    }

    pub fn initial_state(&self) -> SolverState<S> {
        let g = &self.problem.initial;
        let points = self.ops.basis.k + 6;
        let u1 = project_with(|x: &[S]| g(x), MeshTag::Primal, &self.ops.mesh, &self.ops.basis, points);
        let u2 = project_with(|x: &[S]| g(x), MeshTag::Dual, &self.ops.mesh, &self.ops.basis, points);
        let mut state = SolverState { u1, u2, t: S::zero(), energy_trace: Vec::new() };
        let e = energy(&state);
        state.energy_trace.push((S::zero(), e));
        state
    }

    fn load_at(&self, t: S) -> Option<Vec<S>> {
        match &self.loads {
            Loads::None => None,
            Loads::Separable(terms) => {
                let mut out = vec![S::zero(); terms[0].1.len()];
                for (theta, v) in terms {
                    let c = theta(t);
                    for (o, &x) in out.iter_mut().zip(v) {
                        *o += c * x;
                    }
                }
                Some(out)
            }
            Loads::General => {
                let (mut f1, f2) = source_load(&self.problem, &self.ops, t);
                f1.extend(f2);
                Some(f1)
            }
        }
    }

    /// Packed right-hand side for both meshes.
    pub fn rhs(&self, u: &[S], t: S) -> Result<Vec<S>> {
        let mut out = homogeneous(&self.ops, u, self.controls.tau_max, self.problem.diffusivity)?;
        if let Some(f) = self.load_at(t) {
            for (o, x) in out.iter_mut().zip(f) {
                *o += x;
            }
        }
        Ok(out)
    }

    fn advance(&self, u: &[S], t: S, tau: S) -> Result<Vec<S>> {
        let axpy = |a: &[S], b: &[S], c: S| -> Vec<S> { a.iter().zip(b).map(|(&x, &y)| x + c * y).collect() };
        match self.controls.integrator {
            Integrator::ForwardEuler => Ok(axpy(u, &self.rhs(u, t)?, tau)),
            Integrator::SspRk3 => {
                let u1 = axpy(u, &self.rhs(u, t)?, tau);
                let e1 = axpy(&u1, &self.rhs(&u1, t + tau)?, tau);
                let u2: Vec<S> = u.iter().zip(&e1).map(|(&a, &b)| lit::<S>(0.75) * a + lit::<S>(0.25) * b).collect();
                let e2 = axpy(&u2, &self.rhs(&u2, t + tau * lit(0.5))?, tau);
                let third = S::one() / lit(3.0);
                Ok(u.iter().zip(&e2).map(|(&a, &b)| third * a + (S::one() - third) * b).collect())
            }
        }
    }

    /// Advances by one step of size tau (at most tau_max) and records the energy.
    pub fn step_by(&self, state: &SolverState<S>, tau: S) -> Result<SolverState<S>> {
        let u = self.advance(&state.packed(), state.t, tau)?;
        let mut next = state.clone();
        next.unpack(&u, state.t + tau);
        record(&mut next)?;
        Ok(next)
    }

    pub fn step(&self, state: &SolverState<S>) -> Result<SolverState<S>> {
        self.step_by(state, self.controls.tau)
    }

    /// Linear operator of the homogeneous scheme, column by column.
    pub fn system_matrix(&self) -> Result<DenseMatrix<S>> {
        let n = self.ops.field_len(MeshTag::Primal) + self.ops.field_len(MeshTag::Dual);
        let mut a = DenseMatrix::zeros(n, n);
        let mut e = vec![S::zero(); n];
        for j in 0..n {
            e[j] = S::one();
            let col = homogeneous(&self.ops, &e, self.controls.tau_max, self.problem.diffusivity)?;
            for (i, v) in col.into_iter().enumerate() {
                a[(i, j)] = v;
            }
            e[j] = S::zero();
        }
        Ok(a)
    }

    fn propagator(&self) -> Result<Propagator<S>> {
        let a = self.system_matrix()?;
        let n = a.rows();
        let tau = self.controls.tau;
        let mut e = DenseMatrix::identity(n);
        e.add_scaled(tau, &a);
        let loads: Vec<&Vec<S>> = match &self.loads {
            Loads::Separable(terms) => terms.iter().map(|(_, v)| v).collect(),
            _ => Vec::new(),
        };
        match self.controls.integrator {
            Integrator::ForwardEuler => {
                let weights = loads
                    .iter()
                    .map(|v| [v.iter().map(|&x| tau * x).collect(), vec![S::zero(); n], vec![S::zero(); n]])
                    .collect();
                Ok(Propagator { step: e, weights })
            }
            Integrator::SspRk3 => {
                let e2 = e.matmul(&e);
                let e3 = e2.matmul(&e);
                let mut step = DenseMatrix::identity(n);
                step.scale(S::one() / lit(3.0));
                step.add_scaled(lit(0.5), &e);
                step.add_scaled(S::one() / lit(6.0), &e3);
                let sixth = tau / lit(6.0);
                let weights = loads
                    .iter()
                    .map(|v| {
                        let scale = |w: Vec<S>, c: S| w.into_iter().map(|x| c * x).collect::<Vec<S>>();
                        [
                            scale(e2.matvec(v), sixth),
                            scale(e.matvec(v), sixth),
                            v.iter().map(|&x| x * tau * lit::<S>(2.0) / lit(3.0)).collect(),
                        ]
                    })
                    .collect();
                Ok(Propagator { step, weights })
            }
        }
    }

    fn use_propagator(&self) -> bool {
        self.ops.mesh.dimension == 1 && !matches!(self.loads, Loads::General)
    }

    /// Runs from the projected initial datum to the horizon. The last step is
    /// shortened so the run ends exactly at T.
    pub fn run(&self) -> Result<SolverState<S>> {
        let state = self.initial_state();
        self.run_from(state)
    }

    pub fn run_from(&self, mut state: SolverState<S>) -> Result<SolverState<S>> {
        let horizon = self.problem.horizon;
        let tau = self.controls.tau;
        let t0 = state.t;
        let ratio = (horizon - t0) / tau;
        let full = (ratio * (S::one() + lit(1e-12))).floor().to_usize().unwrap_or(0);
        log::info!("running {full} steps of size {tau}");
        if self.use_propagator() && full > 0 {
            let prop = self.propagator()?;
            let terms: Vec<TimeFn<S>> = match &self.loads {
                Loads::Separable(t) => t.iter().map(|(th, _)| th.clone()).collect(),
                _ => Vec::new(),
            };
            let mut u = state.packed();
            for n in 0..full {
                let t = t0 + lit::<S>(n as f64) * tau;
                let mut next = prop.step.matvec(&u);
                for (theta, w) in terms.iter().zip(&prop.weights) {
                    let c = [theta(t), theta(t + tau), theta(t + tau * lit(0.5))];
                    for (slot, vec) in c.iter().zip(w) {
                        if *slot != S::zero() {
                            for (o, &x) in next.iter_mut().zip(vec) {
                                *o += *slot * x;
                            }
                        }
                    }
                }
                u = next;
                state.unpack(&u, t0 + lit::<S>((n + 1) as f64) * tau);
                record(&mut state)?;
            }
        } else {
            for n in 0..full {
                let u = self.advance(&state.packed(), state.t, tau)?;
                state.unpack(&u, t0 + lit::<S>((n + 1) as f64) * tau);
                record(&mut state)?;
            }
        }
        let remaining = horizon - state.t;
        if remaining > horizon * lit(1e-12) {
            let u = self.advance(&state.packed(), state.t, remaining)?;
            state.unpack(&u, horizon);
            record(&mut state)?;
        }
        state.t = horizon;
        state.u1.time_stamp = horizon;
        state.u2.time_stamp = horizon;
        Ok(state)
    }
}

fn record<S: Scalar>(state: &mut SolverState<S>) -> Result<()> {
    let e = energy(state);
    if !e.is_finite() {
        return Err(CldgError::StabilityViolation {
            time: state.t.to_f64().unwrap_or(f64::NAN),
            detail: "non-finite coefficients".into(),
        });
    }
    state.energy_trace.push((state.t, e));
    Ok(())
}

/// Assembles everything and runs the problem to its horizon.
pub fn run<S: Scalar>(
    problem: &ProblemSpec<S>,
    mesh: &OverlappingMesh,
    basis: &LegendreBasis,
    controls: TimeControls<S>,
) -> Result<SolverState<S>> {
    let ops = Operators::assemble(problem, mesh, basis)?;
    Solver::new(problem.clone(), ops, controls).run()
}

/// Largest relative energy increase over consecutive samples.
pub fn max_relative_increase<S: Scalar>(trace: &[(S, S)]) -> S {
    trace
        .windows(2)
        .map(|w| {
            let scale = w[0].1.max(S::min_positive_value());
            (w[1].1 - w[0].1) / scale
        })
        .fold(S::neg_infinity(), S::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_problem(dimension: usize) -> ProblemSpec<f64> {
        let g: SpaceFn<f64> = Arc::new(|_| 0.0);
        if dimension == 1 {
            ProblemSpec::one_d(1.5, 1.0, Source::Zero, g, 0.01).unwrap()
        } else {
            ProblemSpec::two_d(1.5, 1.3, [1.0, 1.0], Source::Zero, g, 0.01).unwrap()
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let g: SpaceFn<f64> = Arc::new(|_| 0.0);
        assert!(ProblemSpec::one_d(1.5, -1.0, Source::Zero, g.clone(), 0.1).is_err());
        assert!(ProblemSpec::one_d(1.5, 1.0, Source::Zero, g.clone(), 0.0).is_err());
        assert!(ProblemSpec::one_d(2.5, 1.0, Source::Zero, g, 0.1).is_err());
        assert!(TimeControls::new(0.1, 0.2, Integrator::SspRk3).is_err());
    }

    #[test]
    fn zero_stays_zero() {
        for dim in [1, 2] {
            let p = zero_problem(dim);
            let mesh = OverlappingMesh::build(dim, 3).unwrap();
            let basis = LegendreBasis::new(1);
            let solver = Solver::with_defaults(p, &mesh, &basis).unwrap();
            let end = solver.run().unwrap();
            assert!(end.u1.coefficients.iter().chain(&end.u2.coefficients).all(|&c| c == 0.0));
            assert_eq!(end.t, 0.01);
        }
    }

    #[test]
    fn integrator_names() {
        assert_eq!("ssp-rk3".parse::<Integrator>().unwrap(), Integrator::SspRk3);
        assert_eq!("forward_euler".parse::<Integrator>().unwrap(), Integrator::ForwardEuler);
        assert!("rk4".parse::<Integrator>().is_err());
    }
}
