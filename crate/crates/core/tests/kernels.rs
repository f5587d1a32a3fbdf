mod common;

use approx::assert_relative_eq;
use cldg_core::frac_kernels::{
    gauss_jacobi, left_frac_deriv_cellpoly, right_frac_deriv_cellpoly, rl_power_rule, CellPolynomial,
    FractionalExponent,
};
use proptest::prelude::*;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

#[test]
fn half_derivative_of_identity() {
    let s = FractionalExponent::new(0.5).unwrap();
    let got: f64 = rl_power_rule(s, 1, 0.0, 1.0).unwrap();
    assert_relative_eq!(got, 1.0 / gamma(1.5), max_relative = 1e-14);
    let c: f64 = rl_power_rule(s, 0, 0.0, 0.25).unwrap();
    assert_relative_eq!(c, 2.0 / gamma(0.5), max_relative = 1e-14);
}

#[test]
fn jacobi_moments_match_beta_function() {
    for (a, b) in [(-0.3, 0.0), (-0.45, 0.45), (0.2, -0.7)] {
        let rule = gauss_jacobi::<f64>(6, a, b).unwrap();
        for m in 0..8 {
            let got: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * (1.0 + x).powi(m)).sum();
            let want = 2f64.powf(a + b + 1.0 + m as f64) * beta(a + 1.0, b + 1.0 + m as f64);
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
    }
}

fn linear(a: f64, b: f64, c0: f64, c1: f64) -> CellPolynomial<f64> {
    CellPolynomial::from_monomials(a, b, &[c0, c1]).unwrap()
}

#[test]
fn linear_cells_match_closed_form_everywhere() {
    let (a, b) = (0.3, 0.55);
    let (c0, c1) = (0.7, -2.1);
    let p = linear(a, b, c0, c1);
    for s in [0.05, 0.25, 0.45, 0.8] {
        let e = FractionalExponent::new(s).unwrap();
        // inside, just past the cell, and in the far field on both sides
        for x in [0.31, 0.42, 0.55, 0.5501, 0.56, 0.7, 0.99, 1.0] {
            let want = common::left_linear(c0, c1, s, x - a, x - b);
            let got = left_frac_deriv_cellpoly(&p, e, x).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-10, epsilon = 1e-12);
        }
        for x in [0.0, 0.01, 0.2, 0.2999, 0.3, 0.4, 0.54] {
            let want = common::right_linear(c0, c1, s, b - a, a - x, b - x);
            let got = right_frac_deriv_cellpoly(&p, e, x).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-10, epsilon = 1e-12);
        }
    }
}

#[test]
fn derivatives_vanish_on_the_far_side() {
    let p = linear(0.4, 0.6, 1.0, 1.0);
    let e = FractionalExponent::new(0.3).unwrap();
    assert_eq!(left_frac_deriv_cellpoly(&p, e, 0.2).unwrap(), 0.0);
    assert_eq!(right_frac_deriv_cellpoly(&p, e, 0.8).unwrap(), 0.0);
    assert!(left_frac_deriv_cellpoly(&p, e, 1.5).is_err());
}

proptest! {
    #[test]
    fn right_is_mirrored_left(
        a in 0.0f64..0.8,
        w in 0.05f64..0.2,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
        s in 0.05f64..0.95,
        x in 0.0f64..1.0,
    ) {
        let b = (a + w).min(1.0);
        let p = CellPolynomial::new(a, b, coeffs).unwrap();
        let e = FractionalExponent::new(s).unwrap();
        let right = right_frac_deriv_cellpoly(&p, e, x).unwrap();
        let left = left_frac_deriv_cellpoly(&p.mirror(), e, 1.0 - x).unwrap();
        prop_assert!((right - left).abs() <= 1e-9 * (1.0 + left.abs()));
    }

    #[test]
    fn left_derivative_is_linear(
        c in prop::collection::vec(-1.0f64..1.0, 3),
        d in prop::collection::vec(-1.0f64..1.0, 3),
        x in 0.0f64..1.0,
    ) {
        let e = FractionalExponent::new(0.35).unwrap();
        let p = CellPolynomial::new(0.25, 0.5, c.clone()).unwrap();
        let q = CellPolynomial::new(0.25, 0.5, d.clone()).unwrap();
        let sum: Vec<f64> = c.iter().zip(&d).map(|(u, v)| u + 2.0 * v).collect();
        let r = CellPolynomial::new(0.25, 0.5, sum).unwrap();
        let lhs = left_frac_deriv_cellpoly(&r, e, x).unwrap();
        let rhs = left_frac_deriv_cellpoly(&p, e, x).unwrap() + 2.0 * left_frac_deriv_cellpoly(&q, e, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }
}
