//! Convergence studies, stability sweeps and report emission.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::BoundaryTrace;
use crate::error::{CldgError, Result};
use crate::mesh_basis::{l2_error, LegendreBasis, OverlappingMesh};
use crate::problems::{custom_problem, BuiltProblem, ProblemConfig};
use crate::solver::{default_step_coefficients, max_relative_increase, Integrator, Operators, Solver, TimeControls};

/// Relative per-step energy growth tolerated by the stability verdict.
pub const ENERGY_TOLERANCE: f64 = 1e-12;

/// Everything needed to repeat a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub problem: ProblemConfig,
    pub cells: Vec<usize>,
    pub k: usize,
    pub tau_max_coeff: Option<f64>,
    pub tau_coeff: Option<f64>,
    pub integrator: Integrator,
    pub aux_trace: BoundaryTrace,
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(problem: ProblemConfig, cells: Vec<usize>, k: usize) -> Self {
        Self {
            problem,
            cells,
            k,
            tau_max_coeff: None,
            tau_coeff: None,
            integrator: Integrator::SspRk3,
            aux_trace: BoundaryTrace::Zero,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.iter().any(|&n| n < 2) {
            return Err(CldgError::Config("every mesh needs at least 2 cells".into()));
        }
        if self.cells.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CldgError::Config("mesh list must be strictly increasing".into()));
        }
        if self.k == 0 {
            return Err(CldgError::Config("polynomial degree must be at least 1".into()));
        }
        Ok(())
    }

    /// Step coefficients after applying overrides to the defaults.
    pub fn step_coefficients(&self, dimension: usize) -> (f64, f64) {
        let (c_max, c_tau) = default_step_coefficients(dimension, self.k);
        (self.tau_max_coeff.unwrap_or(c_max), self.tau_coeff.unwrap_or(c_tau))
    }

    fn solver(&self, built: &BuiltProblem<f64>, n: usize) -> Result<Solver<f64>> {
        let spec = built.spec().clone();
        let mesh = OverlappingMesh::build(spec.dimension, n)?;
        let basis = LegendreBasis::new(self.k);
        let (c_max, c_tau) = self.step_coefficients(spec.dimension);
        let controls =
            TimeControls::from_coefficients(c_max, c_tau, mesh.h(), spec.effective_order(), self.integrator)?;
        let ops = Operators::assemble_with_trace(&spec, &mesh, &basis, self.aux_trace)?;
        Ok(Solver::new(spec, ops, controls))
    }
}

/// One line of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub inv_h: usize,
    pub e1: f64,
    pub e2: f64,
    pub rate1: Option<f64>,
    pub rate2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub problem: String,
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub tau_max_coeff: f64,
    pub tau_coeff: f64,
    pub integrator: Integrator,
    pub horizon: f64,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub metadata: StudyMetadata,
    pub rows: Vec<ConvergenceRow>,
}

/// log(E_prev/E_curr) / log(h_prev/h_curr).
pub fn observed_order(e_prev: f64, e_curr: f64, inv_h_prev: usize, inv_h_curr: usize) -> f64 {
    (e_prev / e_curr).ln() / (inv_h_curr as f64 / inv_h_prev as f64).ln()
}

/// Fills in the rate columns from the error columns.
pub fn fill_rates(rows: &mut [ConvergenceRow]) {
    for i in 0..rows.len() {
        if i == 0 {
            rows[i].rate1 = None;
            rows[i].rate2 = None;
            continue;
        }
        let (p, c) = (&rows[i - 1], &rows[i]);
        let ok = p.failure.is_none() && c.failure.is_none();
        let r1 = ok.then(|| observed_order(p.e1, c.e1, p.inv_h, c.inv_h));
        let r2 = ok.then(|| observed_order(p.e2, c.e2, p.inv_h, c.inv_h));
        rows[i].rate1 = r1;
        rows[i].rate2 = r2;
    }
}

/// One solver run per mesh with errors at the final time. A stability
/// failure is recorded on its row and the study continues.
pub fn run_convergence(study: &StudyConfig) -> Result<StudyReport> {
    study.validate()?;
    let started = Instant::now();
    let built = custom_problem::<f64>(&study.problem)?;
    let exact = built
        .exact()
        .cloned()
        .ok_or_else(|| CldgError::Config("a convergence study needs an exact solution".into()))?;
    let spec = built.spec();
    let mut rows = Vec::with_capacity(study.cells.len());
    for &n in &study.cells {
        let solver = study.solver(&built, n)?;
        let row = match solver.run() {
            Ok(end) => {
                let t = end.t;
                let ex = |p: &[f64]| exact(p, t);
                ConvergenceRow {
                    inv_h: n,
                    e1: l2_error(&end.u1, ex),
                    e2: l2_error(&end.u2, ex),
                    rate1: None,
                    rate2: None,
                    failure: None,
                }
            }
            Err(e @ CldgError::StabilityViolation { .. }) => ConvergenceRow {
                inv_h: n,
                e1: f64::NAN,
                e2: f64::NAN,
                rate1: None,
                rate2: None,
                failure: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        log::info!("1/h={n}: E1={:.4e} E2={:.4e}", row.e1, row.e2);
        rows.push(row);
    }
    fill_rates(&mut rows);
    let (c_max, c_tau) = study.step_coefficients(spec.dimension);
    Ok(StudyReport {
        metadata: StudyMetadata {
            problem: study.problem.problem.clone().unwrap_or_else(|| "custom".into()),
            alpha: spec.alpha.value(),
            beta: spec.beta.value(),
            k: study.k,
            tau_max_coeff: c_max,
            tau_coeff: c_tau,
            integrator: study.integrator,
            horizon: spec.horizon,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
        rows,
    })
}

/// Outcome of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub inv_h: usize,
    pub t: f64,
    pub steps: usize,
    pub energy: f64,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
}

/// Runs the finest mesh of the study once; errors are reported when the
/// exact solution is known.
pub fn run_single(study: &StudyConfig) -> Result<RunSummary> {
    study.validate()?;
    let n = *study.cells.last().ok_or_else(|| CldgError::Config("no mesh given".into()))?;
    let built = custom_problem::<f64>(&study.problem)?;
    let end = study.solver(&built, n)?.run()?;
    let (e1, e2) = match built.exact() {
        Some(exact) => {
            let ex = |p: &[f64]| exact(p, end.t);
            (Some(l2_error(&end.u1, ex)), Some(l2_error(&end.u2, ex)))
        }
        None => (None, None),
    };
    Ok(RunSummary {
        inv_h: n,
        t: end.t,
        steps: end.energy_trace.len().saturating_sub(1),
        energy: crate::solver::energy(&end),
        e1,
        e2,
    })
}

/// Writes a run summary as a one-line CSV table or JSON.
pub fn emit_run(summary: &RunSummary, format: ReportFormat, out: impl Write) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.serialize(summary).map_err(csv_error)?;
            w.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(out, summary).map_err(|e| CldgError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

/// Energy history of a source-free run and its monotonicity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub inv_h: usize,
    pub k: usize,
    pub alpha: f64,
    pub trace: Vec<(f64, f64)>,
    pub monotone: bool,
    /// Largest energy increase over one step relative to the energy before it.
    pub max_increase: f64,
}

/// Runs the problem with f = 0 on a single mesh and checks that the energy
/// never grows by more than the tolerance.
pub fn run_stability(study: &StudyConfig) -> Result<StabilityReport> {
    study.validate()?;
    let n = *study.cells.last().ok_or_else(|| CldgError::Config("no mesh given".into()))?;
    let built = custom_problem::<f64>(&study.problem)?;
    let quiet = match built {
        BuiltProblem::Manufactured(mut m) => {
            m.spec = m.spec.without_source();
            BuiltProblem::Manufactured(m)
        }
        BuiltProblem::Spec(s) => BuiltProblem::Spec(s.without_source()),
    };
    let end = study.solver(&quiet, n)?.run()?;
    let max_increase = max_relative_increase(&end.energy_trace);
    let max_increase = if max_increase.is_finite() { max_increase } else { 0.0 };
    Ok(StabilityReport {
        inv_h: n,
        k: study.k,
        alpha: quiet.spec().alpha.value(),
        monotone: max_increase <= ENERGY_TOLERANCE,
        max_increase,
        trace: end.energy_trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = CldgError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(CldgError::Config(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Serialize)]
struct CsvRow {
    inv_h: usize,
    #[serde(rename = "E1")]
    e1: f64,
    rate1: Option<f64>,
    #[serde(rename = "E2")]
    e2: f64,
    rate2: Option<f64>,
}

fn csv_error(e: csv::Error) -> CldgError {
    CldgError::Io(e.to_string())
}

/// Writes a study as CSV (`inv_h,E1,rate1,E2,rate2`) or JSON with metadata.
pub fn emit_report(report: &StudyReport, format: ReportFormat, out: impl Write) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(["inv_h", "E1", "rate1", "E2", "rate2"]).map_err(csv_error)?;
            for r in &report.rows {
                w.serialize(CsvRow { inv_h: r.inv_h, e1: r.e1, rate1: r.rate1, e2: r.e2, rate2: r.rate2 })
                    .map_err(csv_error)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(out, report).map_err(|e| CldgError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

/// Writes an energy trace as `t,energy` CSV or as the full JSON report.
pub fn emit_stability(report: &StabilityReport, format: ReportFormat, out: impl Write) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["t", "energy"]).map_err(csv_error)?;
            for &(t, e) in &report.trace {
                w.serialize((t, e)).map_err(csv_error)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(out, report).map_err(|e| CldgError::Io(e.to_string()))?;
        }
    }
    Ok(())
}
