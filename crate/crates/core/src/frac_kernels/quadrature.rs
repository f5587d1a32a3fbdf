//! Gauss–Jacobi and Gauss–Legendre rules.
//!
//! Nodes are found by Newton iteration on the three-term Jacobi recurrence
//! with asymptotic initial guesses; weights follow from the derivative at the
//! node. The algebraically weighted rules integrate kernels of the form
//! `(x - l)^a (r - x)^b · smooth` that appear in fractional integrals.

use crate::error::{CldgError, Result};
use crate::scalar::{from_usize, lit, ln_gamma, Scalar};

/// Nodes and weights of a rule on a fixed reference interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<S> {
    pub nodes: Vec<S>,
    pub weights: Vec<S>,
}

impl<S: Scalar> QuadratureRule<S> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(S) -> S) -> S {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss–Jacobi rule on [-1, 1] for the weight (1 - x)^alpha (1 + x)^beta.
///
/// Exact for polynomials of degree ≤ 2n - 1 against that weight.
#[allow(clippy::approx_constant)]
pub fn gauss_jacobi<S: Scalar>(n: usize, alpha: S, beta: S) -> Result<QuadratureRule<S>> {
    if n == 0 {
        return Err(CldgError::Domain("quadrature needs at least one node".into()));
    }
    let minus_one = -S::one();
    if !(alpha > minus_one && beta > minus_one) {
        return Err(CldgError::InvalidExponent {
            value: alpha.min(beta).to_f64().unwrap_or(f64::NAN),
            reason: "Jacobi exponents must exceed -1",
        });
    }
    let one = S::one();
    let two = lit::<S>(2.0);
    let nf = from_usize::<S>(n);
    let alfbet = alpha + beta;
    let mut nodes = vec![S::zero(); n];
    let mut weights = vec![S::zero(); n];
    let mut z = S::zero();
    let eps = S::epsilon() * lit(8.0);
    for i in 1..=n {
        if i == 1 {
            let an = alpha / nf;
            let bn = beta / nf;
            let r1 = (one + alpha) * (lit::<S>(2.78) / (lit::<S>(4.0) + nf * nf) + lit::<S>(0.768) * an / nf);
            let r2 =
                one + lit::<S>(1.48) * an + lit::<S>(0.96) * bn + lit::<S>(0.452) * an * an + lit::<S>(0.83) * an * bn;
            z = one - r1 / r2;
        } else if i == 2 {
            let r1 = (lit::<S>(4.1) + alpha) / ((one + alpha) * (one + lit::<S>(0.156) * alpha));
            let r2 = one + lit::<S>(0.06) * (nf - lit(8.0)) * (one + lit::<S>(0.12) * alpha) / nf;
            let r3 = one + lit::<S>(0.012) * beta * (one + lit::<S>(0.25) * alpha.abs()) / nf;
            z = z - (one - z) * r1 * r2 * r3;
        } else if i == 3 {
            let r1 = (lit::<S>(1.67) + lit::<S>(0.28) * alpha) / (one + lit::<S>(0.37) * alpha);
            let r2 = one + lit::<S>(0.22) * (nf - lit(8.0)) / nf;
            let r3 = one + lit::<S>(8.0) * beta / ((lit::<S>(6.28) + beta) * nf * nf);
            z = z - (nodes[0] - z) * r1 * r2 * r3;
        } else if i == n - 1 {
            let r1 = (one + lit::<S>(0.235) * beta) / (lit::<S>(0.766) + lit::<S>(0.119) * beta);
            let r2 = one / (one + lit::<S>(0.639) * (nf - lit(4.0)) / (one + lit::<S>(0.71) * (nf - lit(4.0))));
            let r3 = one / (one + lit::<S>(20.0) * alpha / ((lit::<S>(7.5) + alpha) * nf * nf));
            z = z + (z - nodes[n - 4]) * r1 * r2 * r3;
        } else if i == n {
            let r1 = (one + lit::<S>(0.37) * beta) / (lit::<S>(1.67) + lit::<S>(0.28) * beta);
            let r2 = one / (one + lit::<S>(0.22) * (nf - lit(8.0)) / nf);
            let r3 = one / (one + lit::<S>(8.0) * alpha / ((lit::<S>(6.28) + alpha) * nf * nf));
            z = z + (z - nodes[n - 3]) * r1 * r2 * r3;
        } else {
            z = lit::<S>(3.0) * nodes[i - 2] - lit::<S>(3.0) * nodes[i - 3] + nodes[i - 4];
        }

        let mut converged = false;
        for _ in 0..100 {
            let (p1, _, pp) = jacobi_with_derivative(n, alpha, beta, z);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= eps {
                converged = true;
                break;
            }
        }
        if !converged {
            log::warn!("Gauss-Jacobi Newton iteration did not converge (n={n})");
        }
        let (_, p2, pp) = jacobi_with_derivative(n, alpha, beta, z);
        let temp = two * nf + alfbet;
        nodes[i - 1] = z;
        weights[i - 1] =
            (ln_gamma(alpha + nf) + ln_gamma(beta + nf) - ln_gamma(nf + one) - ln_gamma(nf + alfbet + one)).exp()
                * temp
                * two.powf(alfbet)
                / (pp * p2);
    }
    // rescale so the zeroth moment is exact; the log-gamma weight formula
    // loses a few digits for large n
    let moment =
        (two.powf(alfbet + one).ln() + ln_gamma(alpha + one) + ln_gamma(beta + one) - ln_gamma(alfbet + two)).exp();
    let total: S = weights.iter().copied().sum();
    for w in &mut weights {
        *w *= moment / total;
    }
    // ascending order
    nodes.reverse();
    weights.reverse();
    Ok(QuadratureRule { nodes, weights })
}

/// Returns (P_n(z), P_{n-1}(z), P_n'(z)) for Jacobi polynomials.
fn jacobi_with_derivative<S: Scalar>(n: usize, alpha: S, beta: S, z: S) -> (S, S, S) {
    let one = S::one();
    let two = lit::<S>(2.0);
    let alfbet = alpha + beta;
    let mut p1 = (alpha - beta + (two + alfbet) * z) / two;
    let mut p2 = one;
    let mut temp = two + alfbet;
    for j in 2..=n {
        let jf = from_usize::<S>(j);
        let p3 = p2;
        p2 = p1;
        temp = two * jf + alfbet;
        let a = two * jf * (jf + alfbet) * (temp - two);
        let b = (temp - one) * (alpha * alpha - beta * beta + temp * (temp - two) * z);
        let c = two * (jf - one + alpha) * (jf - one + beta) * temp;
        p1 = (b * p2 - c * p3) / a;
    }
    if n == 1 {
        temp = two + alfbet;
    }
    let nf = from_usize::<S>(n);
    let pp =
        (nf * (alpha - beta - temp * z) * p1 + two * (nf + alpha) * (nf + beta) * p2) / (temp * (one - z) * (one + z));
    (p1, p2, pp)
}

/// Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre<S: Scalar>(n: usize) -> Result<QuadratureRule<S>> {
    gauss_jacobi(n, S::zero(), S::zero())
}

/// Gauss–Jacobi rule on (0, 1) for the weight t^exponent, exponent in (-1, 0].
pub fn gauss_jacobi_rule<S: Scalar>(n: usize, exponent: S) -> Result<QuadratureRule<S>> {
    if !(exponent > -S::one() && exponent <= S::zero()) {
        return Err(CldgError::InvalidExponent {
            value: exponent.to_f64().unwrap_or(f64::NAN),
            reason: "weight exponent must lie in (-1, 0]",
        });
    }
    let reference = gauss_jacobi(n, S::zero(), exponent)?;
    let half = lit::<S>(0.5);
    let scale = half.powf(exponent + S::one());
    Ok(QuadratureRule {
        nodes: reference.nodes.iter().map(|&x| half * (x + S::one())).collect(),
        weights: reference.weights.iter().map(|&w| w * scale).collect(),
    })
}

/// A reference rule carrying algebraic end-point exponents, mapped onto any
/// physical interval [l, r] for the weight (x - l)^left (r - x)^right.
#[derive(Debug, Clone)]
pub struct EndpointRule<S> {
    pub left_exponent: S,
    pub right_exponent: S,
    reference: QuadratureRule<S>,
}

impl<S: Scalar> EndpointRule<S> {
    pub fn new(n: usize, left_exponent: S, right_exponent: S) -> Result<Self> {
        let reference = gauss_jacobi(n, right_exponent, left_exponent)?;
        Ok(Self { left_exponent, right_exponent, reference })
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    /// Physical nodes and weights on [l, r] (weights include the interval scaling).
    pub fn mapped(&self, l: S, r: S) -> impl Iterator<Item = (S, S)> + '_ {
        let half_len = (r - l) * lit::<S>(0.5);
        let scale = half_len.powf(self.left_exponent + self.right_exponent + S::one());
        self.reference
            .nodes
            .iter()
            .zip(&self.reference.weights)
            .map(move |(&t, &w)| (l + half_len * (t + S::one()), w * scale))
    }

    /// ∫_l^r (x - l)^left (r - x)^right f(x) dx.
    pub fn integrate(&self, l: S, r: S, f: impl Fn(S) -> S) -> S {
        self.mapped(l, r).map(|(x, w)| w * f(x)).sum()
    }
}
