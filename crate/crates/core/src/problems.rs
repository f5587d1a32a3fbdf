//! Manufactured test problems and problems read from configuration files.

use std::fmt;
use std::sync::Arc;

use fasteval::{Compiler, Evaler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CldgError, Result};
use crate::frac_kernels::{gauss_jacobi, FractionalOrder, Side};
use crate::scalar::{gamma, gamma_ratio, lit, Scalar};
use crate::solver::{ProblemSpec, Source, SpaceFn, SpaceTimeFn, TimeFn};

/// Problem data together with its exact solution.
#[derive(Clone)]
pub struct ManufacturedProblem<S> {
    pub spec: ProblemSpec<S>,
    pub exact: SpaceTimeFn<S>,
}

impl<S: Scalar> fmt::Debug for ManufacturedProblem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedProblem").field("spec", &self.spec).finish()
    }
}

const BRIDGE: [f64; 4] = [1.0, -3.0, 3.0, -1.0];

/// x^3 (1 - x)^3.
pub fn bridge<S: Scalar>(x: S) -> S {
    let y = x * (S::one() - x);
    y * y * y
}

/// Left (lower limit 0) or right (upper limit 1) derivative of order alpha of
/// x^3 (1 - x)^3, expanded in powers and differentiated termwise.
pub fn bridge_frac_deriv<S: Scalar>(alpha: FractionalOrder<S>, side: Side, x: S) -> Result<S> {
    if x.is_nan() || x < S::zero() || x > S::one() {
        return Err(CldgError::Domain(format!("point {x} outside [0, 1]")));
    }
    let z = match side {
        Side::Left => x,
        Side::Right => S::one() - x,
    };
    let a = alpha.value();
    Ok(BRIDGE
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let m = i + 3;
            lit::<S>(c) * gamma_ratio(m, -a) * z.powf(lit::<S>(m as f64) - a)
        })
        .sum())
}

fn bridge_both<S: Scalar>(alpha: FractionalOrder<S>, x: S) -> S {
    let x = x.max(S::zero()).min(S::one());
    bridge_frac_deriv(alpha, Side::Left, x).expect("clamped")
        + bridge_frac_deriv(alpha, Side::Right, x).expect("clamped")
}

/// u = exp(2t) x^3 (1-x)^3 with d = 1 on (0, 0.1].
pub fn example1<S: Scalar>(alpha: S) -> Result<ManufacturedProblem<S>> {
    let order = FractionalOrder::new(alpha)?;
    let theta: TimeFn<S> = Arc::new(|t: S| (lit::<S>(2.0) * t).exp());
    let profile: SpaceFn<S> = Arc::new(move |p: &[S]| lit::<S>(2.0) * bridge(p[0]) - bridge_both(order, p[0]));
    let initial: SpaceFn<S> = Arc::new(|p: &[S]| bridge(p[0]));
    let spec = ProblemSpec::one_d(alpha, S::one(), Source::Separable(vec![(theta, profile)]), initial, lit(0.1))?;
    let exact: SpaceTimeFn<S> = Arc::new(|p: &[S], t: S| (lit::<S>(2.0) * t).exp() * bridge(p[0]));
    Ok(ManufacturedProblem { spec, exact })
}

/// Diffusivity -1/(2 cos(alpha pi / 2)).
pub fn example2_diffusivity<S: Scalar>(alpha: S) -> S {
    -S::one() / (lit::<S>(2.0) * (alpha * S::FRAC_PI_2()).cos())
}

/// u = 1000 exp(t) x^3(1-x)^3 y^3(1-y)^3 on the unit square, T = 0.1.
pub fn example2<S: Scalar>(alpha: S, beta: S) -> Result<ManufacturedProblem<S>> {
    let ox = FractionalOrder::new(alpha)?;
    let oy = FractionalOrder::new(beta)?;
    let d = [example2_diffusivity(alpha), example2_diffusivity(beta)];
    let amp = lit::<S>(1000.0);
    let theta: TimeFn<S> = Arc::new(move |t: S| amp * t.exp());
    let profile: SpaceFn<S> = Arc::new(move |p: &[S]| {
        let (gx, gy) = (bridge(p[0]), bridge(p[1]));
        gx * gy - d[0] * bridge_both(ox, p[0]) * gy - d[1] * gx * bridge_both(oy, p[1])
    });
    let initial: SpaceFn<S> = Arc::new(move |p: &[S]| amp * bridge(p[0]) * bridge(p[1]));
    let spec = ProblemSpec::two_d(alpha, beta, d, Source::Separable(vec![(theta, profile)]), initial, lit(0.1))?;
    let exact: SpaceTimeFn<S> = Arc::new(move |p: &[S], t: S| amp * t.exp() * bridge(p[0]) * bridge(p[1]));
    Ok(ManufacturedProblem { spec, exact })
}

/// Key-value problem description as read from a TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub problem: Option<String>,
    pub dimension: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub g: Option<String>,
    pub f: Option<String>,
    pub exact: Option<String>,
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CldgError::Config(e.to_string()))
    }
}

/// A compiled expression in the variables x, y, t.
#[derive(Debug)]
pub struct Expression {
    source: String,
    slab: fasteval::Slab,
    code: fasteval::Instruction,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self> {
        let parser = fasteval::Parser::new();
        let mut slab = fasteval::Slab::new();
        let code = parser
            .parse(source, &mut slab.ps)
            .map_err(|e| CldgError::Config(format!("cannot parse '{source}': {e}")))?
            .from(&slab.ps)
            .compile(&slab.ps, &mut slab.cs);
        let expr = Self { source: source.to_string(), slab, code };
        for name in expr.code.var_names(&expr.slab) {
            if !matches!(name.as_str(), "x" | "y" | "t" | "exp" | "sqrt" | "ln") {
                return Err(CldgError::Config(format!("unknown name '{name}' in '{source}'")));
            }
        }
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        let mut ns = |name: &str, args: Vec<f64>| -> Option<f64> {
            match (name, args.as_slice()) {
                ("x", []) => Some(x),
                ("y", []) => Some(y),
                ("t", []) => Some(t),
                ("exp", [v]) => Some(v.exp()),
                ("sqrt", [v]) => Some(v.sqrt()),
                ("ln", [v]) => Some(v.ln()),
                _ => None,
            }
        };
        self.code.eval(&self.slab, &mut ns).unwrap_or(f64::NAN)
    }
}

fn space_time<S: Scalar>(expr: Arc<Expression>) -> SpaceTimeFn<S> {
    Arc::new(move |p: &[S], t: S| {
        let x = p[0].to_f64().unwrap_or(f64::NAN);
        let y = p.get(1).and_then(|v| v.to_f64()).unwrap_or(0.0);
        lit(expr.eval(x, y, t.to_f64().unwrap_or(f64::NAN)))
    })
}

/// Either a manufactured problem (when an exact solution is known) or bare data.
#[derive(Debug, Clone)]
pub enum BuiltProblem<S: Scalar> {
    Manufactured(ManufacturedProblem<S>),
    Spec(ProblemSpec<S>),
}

impl<S: Scalar> BuiltProblem<S> {
    pub fn spec(&self) -> &ProblemSpec<S> {
        match self {
            BuiltProblem::Manufactured(m) => &m.spec,
            BuiltProblem::Spec(s) => s,
        }
    }

    pub fn exact(&self) -> Option<&SpaceTimeFn<S>> {
        match self {
            BuiltProblem::Manufactured(m) => Some(&m.exact),
            BuiltProblem::Spec(_) => None,
        }
    }
}

/// Builds a problem from configuration. Custom problems with an exact
/// solution get a residual spot check whose outcome is logged.
pub fn custom_problem<S: Scalar>(config: &ProblemConfig) -> Result<BuiltProblem<S>> {
    let kind = config.problem.as_deref().unwrap_or("custom");
    let alpha = config.alpha.ok_or_else(|| CldgError::Config("missing 'alpha'".into()))?;
    let with_horizon = |mut m: ManufacturedProblem<S>| {
        if let Some(t) = config.horizon {
            m.spec.horizon = lit(t);
        }
        m.spec = m.spec.clone().validate_again()?;
        Ok(BuiltProblem::Manufactured(m))
    };
    match kind {
        "example1" => with_horizon(example1(lit(alpha))?),
        "example2" => with_horizon(example2(lit(alpha), lit(config.beta.unwrap_or(alpha)))?),
        "custom" => {
            let dimension = config.dimension.unwrap_or(1);
            let g = Arc::new(Expression::parse(config.g.as_deref().unwrap_or("0"))?);
            let f = Arc::new(Expression::parse(config.f.as_deref().unwrap_or("0"))?);
            let horizon = lit(config.horizon.ok_or_else(|| CldgError::Config("missing 'T'".into()))?);
            let source = if f.source().trim() == "0" { Source::Zero } else { Source::General(space_time::<S>(f)) };
            let g_fn = space_time::<S>(g);
            let initial: SpaceFn<S> = Arc::new(move |p: &[S]| g_fn(p, S::zero()));
            let d1 = lit(config.d1.unwrap_or(1.0));
            let spec = if dimension == 1 {
                ProblemSpec::one_d(lit(alpha), d1, source, initial, horizon)?
            } else {
                let beta = lit(config.beta.unwrap_or(alpha));
                ProblemSpec::two_d(lit(alpha), beta, [d1, lit(config.d2.unwrap_or(1.0))], source, initial, horizon)?
            };
            match &config.exact {
                None => Ok(BuiltProblem::Spec(spec)),
                Some(text) => {
                    let exact = space_time::<S>(Arc::new(Expression::parse(text)?));
                    let m = ManufacturedProblem { spec, exact };
                    let r = max_residual(&m, 20, 7);
                    if !(r <= 1e-6) {
                        log::warn!(
                            "custom problem residual {r:.3e} at sample points; source and exact solution may disagree"
                        );
                    } else {
                        log::info!("custom problem residual {r:.3e}");
                    }
                    Ok(BuiltProblem::Manufactured(m))
                }
            }
        }
        other => Err(CldgError::Config(format!("unknown problem '{other}'"))),
    }
}

impl<S: Scalar> ProblemSpec<S> {
    fn validate_again(self) -> Result<Self> {
        if !(self.horizon > S::zero()) {
            return Err(CldgError::InvalidProblem("final time must be positive".into()));
        }
        Ok(self)
    }
}

/// Left or right Riemann–Liouville derivative of order alpha in (1, 2) of a
/// sampled function vanishing at the lower limit, along one coordinate.
fn numeric_rl(u: &dyn Fn(f64) -> f64, alpha: f64, side: Side, x: f64) -> f64 {
    // D^alpha u = u'(lim) z^{1-alpha}/Gamma(2-alpha) + (1/Gamma(2-alpha)) int z^{1-alpha} u''
    let h = 1e-4;
    let d2 = |z: f64| (u(z + h) - 2.0 * u(z) + u(z - h)) / (h * h);
    let (lim, dist) = match side {
        Side::Left => (0.0, x),
        Side::Right => (1.0, 1.0 - x),
    };
    if dist <= 0.0 {
        return 0.0;
    }
    let sign = if side == Side::Left { 1.0 } else { -1.0 };
    let d1 = sign * (u(lim + sign * h) - u(lim)) / h;
    let g = gamma(2.0 - alpha);
    let rule = gauss_jacobi(24, 1.0 - alpha, 0.0).expect("valid exponents");
    let half = dist / 2.0;
    let integral: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| {
            let xi = lim + sign * half * (t + 1.0);
            w * d2(xi)
        })
        .sum::<f64>()
        * half.powf(2.0 - alpha);
    (d1 * dist.powf(1.0 - alpha) + integral) / g
}

/// Largest residual of the equation at pseudo-random sample points, relative
/// to the source magnitude. Derivatives are taken numerically, so only
/// agreement to about 1e-6 can be expected.
pub fn max_residual<S: Scalar>(problem: &ManufacturedProblem<S>, samples: usize, seed: u64) -> f64 {
    let spec = &problem.spec;
    let exact = problem.exact.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = move || rng.gen::<f64>();
    let u = |p: &[f64], t: f64| -> f64 {
        let q: Vec<S> = p.iter().map(|&v| lit(v)).collect();
        exact(&q, lit(t)).to_f64().unwrap_or(f64::NAN)
    };
    let horizon = spec.horizon.to_f64().unwrap_or(1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = 0.05 + 0.9 * next();
        let y = 0.05 + 0.9 * next();
        let t = horizon * next();
        let p: Vec<f64> = if spec.dimension == 1 { vec![x] } else { vec![x, y] };
        let dt = 1e-5;
        let ut = (u(&p, t + dt) - u(&p, t - dt)) / (2.0 * dt);
        let mut operator = 0.0;
        let alpha = spec.alpha.value().to_f64().unwrap_or(f64::NAN);
        let line_x = |z: f64| if spec.dimension == 1 { u(&[z], t) } else { u(&[z, y], t) };
        operator += spec.diffusivity[0].to_f64().unwrap_or(f64::NAN)
            * (numeric_rl(&line_x, alpha, Side::Left, x) + numeric_rl(&line_x, alpha, Side::Right, x));
        if spec.dimension == 2 {
            let beta = spec.beta.value().to_f64().unwrap_or(f64::NAN);
            let line_y = |z: f64| u(&[x, z], t);
            operator += spec.diffusivity[1].to_f64().unwrap_or(f64::NAN)
                * (numeric_rl(&line_y, beta, Side::Left, y) + numeric_rl(&line_y, beta, Side::Right, y));
        }
        let q: Vec<S> = p.iter().map(|&v| lit(v)).collect();
        let f = spec.source.eval(&q, lit(t)).to_f64().unwrap_or(f64::NAN);
        let scale = 1.0 + f.abs() + ut.abs();
        let r = (ut - operator - f).abs() / scale;
        worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
    }
    worst
}
