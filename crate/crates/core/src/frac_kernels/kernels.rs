use std::sync::OnceLock;

use super::polynomial::CellPolynomial;
use super::{FractionalExponent, Side};
use crate::error::{CldgError, Result};
use crate::scalar::{gamma, gamma_ratio, lit, Scalar};

const DOMAIN_SLACK: f64 = 1e-12;
const FAR_FIELD_NODES: usize = 16;

fn far_field_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let r = super::quadrature::gauss_legendre::<f64>(FAR_FIELD_NODES).expect("legendre rule");
        r.nodes.into_iter().zip(r.weights).collect()
    })
}

fn check_domain<S: Scalar>(x: S) -> Result<()> {
    let slack = lit::<S>(DOMAIN_SLACK);
    if x.is_nan() || x < -slack || x > S::one() + slack {
        return Err(CldgError::Domain(format!("evaluation point {x} outside [0, 1]")));
    }
    Ok(())
}

/// Left derivative of (x - a)^m with lower limit a.
pub fn rl_power_rule<S: Scalar>(s: FractionalExponent<S>, m: usize, a: S, x: S) -> Result<S> {
    if x < a {
        return Err(CldgError::Domain(format!("power rule needs x >= a, got x={x}, a={a}")));
    }
    let s = s.value();
    Ok(gamma_ratio(m, -s) * (x - a).powf(S::from(m).unwrap() - s))
}

/// Right derivative of (b - x)^m with upper limit b.
pub fn rl_power_rule_right<S: Scalar>(s: FractionalExponent<S>, m: usize, b: S, x: S) -> Result<S> {
    if x > b {
        return Err(CldgError::Domain(format!("power rule needs x <= b, got x={x}, b={b}")));
    }
    let s = s.value();
    Ok(gamma_ratio(m, -s) * (b - x).powf(S::from(m).unwrap() - s))
}

/// Left fractional integral of (x - a)^m with lower limit a.
pub fn rl_integral_power_rule<S: Scalar>(s: FractionalExponent<S>, m: usize, a: S, x: S) -> Result<S> {
    if x < a {
        return Err(CldgError::Domain(format!("power rule needs x >= a, got x={x}, a={a}")));
    }
    let s = s.value();
    Ok(gamma_ratio(m, s) * (x - a).powf(S::from(m).unwrap() + s))
}

/// One anchored piece of a one-sided derivative:
/// `dist(x)^(-s) * sum_j coeffs[j] dist(x)^j`, where dist is x - anchor on the
/// left side and anchor - x on the right side, and the term vanishes where
/// dist is not positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTerm<S> {
    pub anchor: S,
    pub side: Side,
    pub exponent: S,
    pub coeffs: Vec<S>,
}

impl<S: Scalar> PowerTerm<S> {
    pub fn distance(&self, x: S) -> S {
        match self.side {
            Side::Left => x - self.anchor,
            Side::Right => self.anchor - x,
        }
    }

    /// The polynomial factor at x.
    pub fn smooth_part(&self, x: S) -> S {
        let t = self.distance(x);
        let mut acc = S::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn eval(&self, x: S) -> S {
        let t = self.distance(x);
        if t <= S::zero() {
            S::zero()
        } else {
            t.powf(-self.exponent) * self.smooth_part(x)
        }
    }
}

fn anchored_term<S: Scalar>(anchor: S, side: Side, power: &[S], s: S, sign: S) -> PowerTerm<S> {
    let coeffs = power
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let e = if side == Side::Right && j % 2 == 1 { -e } else { e };
            sign * e * gamma_ratio(j, -s)
        })
        .collect();
    PowerTerm { anchor, side, exponent: s, coeffs }
}

/// The two anchored terms whose sum is the one-sided derivative of p.
///
/// Left: `[T_a, -T_b]` anchored at a and b. Right: `[U_b, -U_a]`.
pub fn power_terms<S: Scalar>(p: &CellPolynomial<S>, s: FractionalExponent<S>, side: Side) -> [PowerTerm<S>; 2] {
    let s = s.value();
    match side {
        Side::Left => [
            anchored_term(p.left(), side, p.coeffs_about_left(), s, S::one()),
            anchored_term(p.right(), side, p.coeffs_about_right(), s, -S::one()),
        ],
        Side::Right => [
            anchored_term(p.right(), side, p.coeffs_about_right(), s, S::one()),
            anchored_term(p.left(), side, p.coeffs_about_left(), s, -S::one()),
        ],
    }
}

fn eval_terms<S: Scalar>(coeffs: &[S], s: S, t: S) -> S {
    let mut acc = S::zero();
    for (j, &c) in coeffs.iter().enumerate().rev() {
        acc = acc * t + c * gamma_ratio(j, -s);
    }
    t.powf(-s) * acc
}

fn eval_terms_mirrored<S: Scalar>(coeffs: &[S], s: S, t: S) -> S {
    let mut acc = S::zero();
    for (j, &c) in coeffs.iter().enumerate().rev() {
        let c = if j % 2 == 1 { -c } else { c };
        acc = acc * t + c * gamma_ratio(j, -s);
    }
    t.powf(-s) * acc
}

/// Left Riemann–Liouville derivative (lower limit 0) of the zero-extended p.
pub fn left_frac_deriv_cellpoly<S: Scalar>(p: &CellPolynomial<S>, s: FractionalExponent<S>, x: S) -> Result<S> {
    check_domain(x)?;
    let (a, b, w) = (p.left(), p.right(), p.width());
    let s = s.value();
    if x <= a {
        return Ok(S::zero());
    }
    if x <= b {
        return Ok(eval_terms(p.coeffs_about_left(), s, x - a));
    }
    if x - b < w {
        return Ok(eval_terms(p.coeffs_about_left(), s, x - a) - eval_terms(p.coeffs_about_right(), s, x - b));
    }
    // boundary terms plus the transferred integral of p'
    let half = w * lit(0.5);
    let mut integral = S::zero();
    for &(t, wt) in far_field_rule() {
        let xi = a + half * (lit::<S>(t) + S::one());
        integral += lit::<S>(wt) * (x - xi).powf(-s) * p.derivative_extended(xi);
    }
    integral *= half;
    let pa = p.eval_extended(a);
    let pb = p.eval_extended(b);
    Ok((pa * (x - a).powf(-s) - pb * (x - b).powf(-s) + integral) / gamma(S::one() - s))
}

/// Right Riemann–Liouville derivative (upper limit 1) of the zero-extended p.
pub fn right_frac_deriv_cellpoly<S: Scalar>(p: &CellPolynomial<S>, s: FractionalExponent<S>, x: S) -> Result<S> {
    check_domain(x)?;
    let (a, b, w) = (p.left(), p.right(), p.width());
    let s = s.value();
    if x >= b {
        return Ok(S::zero());
    }
    if x >= a {
        return Ok(eval_terms_mirrored(p.coeffs_about_right(), s, b - x));
    }
    if a - x < w {
        return Ok(eval_terms_mirrored(p.coeffs_about_right(), s, b - x)
            - eval_terms_mirrored(p.coeffs_about_left(), s, a - x));
    }
    let half = w * lit(0.5);
    let mut integral = S::zero();
    for &(t, wt) in far_field_rule() {
        let xi = a + half * (lit::<S>(t) + S::one());
        integral += lit::<S>(wt) * (xi - x).powf(-s) * p.derivative_extended(xi);
    }
    integral *= half;
    let pa = p.eval_extended(a);
    let pb = p.eval_extended(b);
    Ok((pb * (b - x).powf(-s) - pa * (a - x).powf(-s) - integral) / gamma(S::one() - s))
}
