use cldg_core::frac_kernels::{gauss_jacobi, FractionalOrder, Side};
use cldg_core::problems::{
    bridge, bridge_frac_deriv, custom_problem, example1, example2, example2_diffusivity, max_residual, Expression,
    ProblemConfig,
};
use cldg_core::CldgError;
use statrs::function::gamma::gamma;

/// Left derivative of order alpha in (1, 2) of x^3 (1-x)^3 from the
/// definition: g(0) = g'(0) = 0, so it equals I^{2-alpha} g''.
fn bridge_definition(alpha: f64, x: f64) -> f64 {
    let g2 = |t: f64| 6.0 * t - 36.0 * t * t + 60.0 * t.powi(3) - 30.0 * t.powi(4);
    let rule = gauss_jacobi::<f64>(6, 1.0 - alpha, 0.0).unwrap();
    let half = 0.5 * x;
    let sum: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&z, &w)| w * g2(half * (1.0 + z))).sum();
    half.powf(2.0 - alpha) * sum / gamma(2.0 - alpha)
}

#[test]
fn bridge_derivatives_match_definition() {
    for alpha in [1.1, 1.5, 1.9] {
        let order = FractionalOrder::new(alpha).unwrap();
        for x in [0.1, 0.35, 0.5, 0.8, 1.0] {
            let want = bridge_definition(alpha, x);
            let left = bridge_frac_deriv(order, Side::Left, x).unwrap();
            let right = bridge_frac_deriv(order, Side::Right, 1.0 - x).unwrap();
            assert!((left - want).abs() < 1e-12 * want.abs().max(1.0), "alpha={alpha} x={x}");
            assert!((right - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }
    assert_eq!(bridge(0.5f64), 1.0 / 64.0);
}

#[test]
fn manufactured_sources_satisfy_the_equation() {
    for alpha in [1.1, 1.5, 1.9] {
        let r = max_residual(&example1::<f64>(alpha).unwrap(), 20, 1);
        assert!(r < 1e-6, "example1 alpha={alpha}: {r}");
        let r = max_residual(&example2::<f64>(alpha, 3.0 - alpha).unwrap(), 10, 2);
        assert!(r < 1e-6, "example2 alpha={alpha}: {r}");
    }
    assert!(example2_diffusivity(1.5f64) > 0.0);
}

#[test]
fn example1_round_trips_through_toml() {
    let config = ProblemConfig { problem: Some("example1".into()), alpha: Some(1.3), ..Default::default() };
    let text = toml::to_string(&config).unwrap();
    assert_eq!(ProblemConfig::from_toml(&text).unwrap(), config);
    let built = custom_problem::<f64>(&config).unwrap();
    assert_eq!(built.spec().alpha.value(), 1.3);
    assert!(built.exact().is_some());
}

#[test]
fn configuration_errors() {
    let missing = ProblemConfig { problem: Some("example1".into()), ..Default::default() };
    assert!(matches!(custom_problem::<f64>(&missing), Err(CldgError::Config(_))));
    assert!(ProblemConfig::from_toml("alpha = 1.5\ncolour = 3").is_err());
    assert!(Expression::parse("x + z").is_err());
    let out_of_range = ProblemConfig { problem: Some("example1".into()), alpha: Some(2.0), ..Default::default() };
    assert!(custom_problem::<f64>(&out_of_range).is_err());
}

#[test]
fn custom_problem_from_expressions() {
    let text = r#"
        problem = "custom"
        dimension = 1
        alpha = 1.4
        T = 0.05
        g = "0"
        f = "0"
    "#;
    let built = custom_problem::<f64>(&ProblemConfig::from_toml(text).unwrap()).unwrap();
    assert!(built.exact().is_none());
    assert_eq!(built.spec().horizon, 0.05);

    let e = Expression::parse("exp(-t) * sqrt(x) + ln(1 + y)").unwrap();
    let want = (-0.5f64).exp() * 0.25f64.sqrt() + 2f64.ln();
    assert!((e.eval(0.25, 1.0, 0.5) - want).abs() < 1e-14);
}
