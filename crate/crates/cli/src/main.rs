use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cldg_core::assembly::BoundaryTrace;
use cldg_core::harness::{
    emit_report, emit_run, emit_stability, run_convergence, run_single, run_stability, ReportFormat, StudyConfig,
    ENERGY_TOLERANCE,
};
use cldg_core::problems::ProblemConfig;
use cldg_core::solver::Integrator;
use cldg_core::CldgError;

/// Central LDG solver for space-fractional diffusion on overlapping meshes.
#[derive(Parser, Debug)]
#[command(name = "cldg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve once on the finest mesh and print errors and energy.
    Run(Common),
    /// Convergence study over a list of meshes.
    Converge(Common),
    /// Source-free run checking that the energy never grows.
    Stability(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// example1, example2 or custom
    #[arg(long, env = "CLDG_PROBLEM")]
    problem: Option<String>,
    #[arg(long, env = "CLDG_ALPHA")]
    alpha: Option<f64>,
    #[arg(long, env = "CLDG_BETA")]
    beta: Option<f64>,
    /// Polynomial degree.
    #[arg(long, env = "CLDG_K")]
    k: Option<usize>,
    /// Comma-separated list of 1/h.
    #[arg(long, env = "CLDG_CELLS", value_delimiter = ',')]
    cells: Option<Vec<usize>>,
    /// Final time T.
    #[arg(long, env = "CLDG_TMAX_FINAL")]
    tmax_final: Option<f64>,
    /// c in tau_max = c h^alpha.
    #[arg(long, env = "CLDG_TAU_MAX_COEFF")]
    tau_max_coeff: Option<f64>,
    /// c in tau = c tau_max.
    #[arg(long, env = "CLDG_TAU_COEFF")]
    tau_coeff: Option<f64>,
    /// ssp-rk3 or forward-euler
    #[arg(long, env = "CLDG_INTEGRATOR")]
    integrator: Option<String>,
    /// Boundary trace in the auxiliary equations: zero or one-sided.
    #[arg(long, env = "CLDG_AUX_TRACE")]
    aux_trace: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, env = "CLDG_OUT")]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, env = "CLDG_FORMAT")]
    format: Option<String>,
    /// TOML file with problem and study keys; flags take precedence.
    #[arg(long, env = "CLDG_CONFIG")]
    config: Option<PathBuf>,
}

/// Study keys that may appear in the config file next to the problem keys.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileStudy {
    k: Option<usize>,
    cells: Option<Vec<usize>>,
    tau_max_coeff: Option<f64>,
    tau_coeff: Option<f64>,
    integrator: Option<String>,
    aux_trace: Option<String>,
    format: Option<String>,
    out: Option<PathBuf>,
}

const STUDY_KEYS: [&str; 8] = ["k", "cells", "tau_max_coeff", "tau_coeff", "integrator", "aux_trace", "format", "out"];

fn read_config(path: &Path) -> anyhow::Result<(ProblemConfig, FileStudy)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut table: toml::Table = text.parse().map_err(|e| CldgError::Config(format!("{e}")))?;
    let mut study = toml::Table::new();
    for key in STUDY_KEYS {
        if let Some(v) = table.remove(key) {
            study.insert(key.to_string(), v);
        }
    }
    let problem: ProblemConfig = toml::Value::Table(table).try_into().map_err(|e| CldgError::Config(format!("{e}")))?;
    let study: FileStudy = toml::Value::Table(study).try_into().map_err(|e| CldgError::Config(format!("{e}")))?;
    Ok((problem, study))
}

struct Resolved {
    study: StudyConfig,
    format: ReportFormat,
    out: Option<PathBuf>,
}

fn default_cells(dimension: usize, k: usize, single: bool) -> Vec<usize> {
    match (single, dimension, k) {
        (true, 1, _) => vec![16],
        (true, _, _) => vec![8],
        (false, 1, 1) => vec![8, 16, 32, 64],
        (false, 1, _) => vec![4, 8, 16, 32],
        (false, _, _) => vec![4, 8, 12, 16],
    }
}

fn resolve(args: &Common, single: bool) -> anyhow::Result<Resolved> {
    let (mut problem, file) = match &args.config {
        Some(path) => read_config(path)?,
        None => (ProblemConfig::default(), FileStudy::default()),
    };
    if let Some(p) = &args.problem {
        problem.problem = Some(p.clone());
    }
    if problem.problem.is_none() {
        problem.problem = Some("example1".into());
    }
    problem.alpha = args.alpha.or(problem.alpha).or(Some(1.5));
    problem.beta = args.beta.or(problem.beta);
    problem.horizon = args.tmax_final.or(problem.horizon);
    let dimension = match problem.problem.as_deref() {
        Some("example2") => 2,
        Some("example1") => 1,
        _ => problem.dimension.unwrap_or(1),
    };
    let k = args.k.or(file.k).unwrap_or(1);
    let cells = args.cells.clone().or(file.cells).unwrap_or_else(|| default_cells(dimension, k, single));
    let mut study = StudyConfig::new(problem, cells, k);
    study.tau_max_coeff = args.tau_max_coeff.or(file.tau_max_coeff);
    study.tau_coeff = args.tau_coeff.or(file.tau_coeff);
    if let Some(name) = args.integrator.clone().or(file.integrator) {
        study.integrator = name.parse::<Integrator>()?;
    }
    if let Some(name) = args.aux_trace.clone().or(file.aux_trace) {
        study.aux_trace = match name.as_str() {
            "zero" => BoundaryTrace::Zero,
            "one-sided" | "one_sided" => BoundaryTrace::OneSided,
            other => bail!(CldgError::Config(format!("unknown aux trace '{other}'"))),
        };
    }
    let format = args.format.clone().or(file.format).unwrap_or_else(|| "csv".into()).parse::<ReportFormat>()?;
    study.validate()?;
    Ok(Resolved { study, format, out: args.out.clone().or(file.out) })
}

fn sink(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Debug)]
struct Unstable(String);

impl std::fmt::Display for Unstable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Unstable {}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let r = resolve(&args, true)?;
            let summary = run_single(&r.study)?;
            emit_run(&summary, r.format, sink(&r.out)?)?;
        }
        Command::Converge(args) => {
            let r = resolve(&args, false)?;
            let report = run_convergence(&r.study)?;
            emit_report(&report, r.format, sink(&r.out)?)?;
            if let Some(row) = report.rows.iter().find(|row| row.failure.is_some()) {
                return Err(Unstable(format!("1/h={}: {}", row.inv_h, row.failure.as_deref().unwrap_or(""))).into());
            }
        }
        Command::Stability(args) => {
            let r = resolve(&args, true)?;
            let report = run_stability(&r.study)?;
            emit_stability(&report, r.format, sink(&r.out)?)?;
            eprintln!(
                "monotone={} max relative increase={:.3e} (tolerance {ENERGY_TOLERANCE:e})",
                report.monotone, report.max_increase
            );
            if !report.monotone {
                return Err(Unstable("energy increased during the run".into()).into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let unstable = e.downcast_ref::<Unstable>().is_some()
                || matches!(e.downcast_ref::<CldgError>(), Some(CldgError::StabilityViolation { .. }));
            log::debug!("exit on {e:?}");
            ExitCode::from(if unstable { 2 } else { 1 })
        }
    }
}
