use crate::error::{CldgError, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Legendre values P_0..P_n at xi.
pub fn legendre_values<S: Scalar>(n: usize, xi: S) -> Vec<S> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(S::one());
    if n >= 1 {
        p.push(xi);
    }
    for m in 1..n {
        let mf = from_usize::<S>(m);
        let next = ((lit::<S>(2.0) * mf + S::one()) * xi * p[m] - mf * p[m - 1]) / (mf + S::one());
        p.push(next);
    }
    p
}

/// Derivatives P_0'..P_n' at xi.
pub fn legendre_derivatives<S: Scalar>(n: usize, xi: S) -> Vec<S> {
    let p = legendre_values(n, xi);
    let mut d = vec![S::zero(); n + 1];
    // P'_{m+1} = P'_{m-1} + (2m+1) P_m
    for m in 0..n {
        let prev = if m >= 1 { d[m - 1] } else { S::zero() };
        d[m + 1] = prev + (lit::<S>(2.0) * from_usize::<S>(m) + S::one()) * p[m];
    }
    d
}

/// Monomial coefficients of P_0..P_n, row m holds P_m.
fn legendre_monomials<S: Scalar>(n: usize) -> Vec<Vec<S>> {
    let mut rows: Vec<Vec<S>> = Vec::with_capacity(n + 1);
    rows.push(vec![S::one()]);
    if n >= 1 {
        rows.push(vec![S::zero(), S::one()]);
    }
    for m in 1..n {
        let mf = from_usize::<S>(m);
        let mut next = vec![S::zero(); m + 2];
        for (j, &c) in rows[m].iter().enumerate() {
            next[j + 1] += (lit::<S>(2.0) * mf + S::one()) * c;
        }
        for (j, &c) in rows[m - 1].iter().enumerate() {
            next[j] -= mf * c;
        }
        for c in &mut next {
            *c /= mf + S::one();
        }
        rows.push(next);
    }
    rows
}

/// A polynomial supported on one cell, stored in the orthonormal Legendre basis
/// of that cell and extended by zero outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPolynomial<S> {
    a: S,
    b: S,
    coeffs: Vec<S>,
    about_a: Vec<S>,
    about_b: Vec<S>,
}

impl<S: Scalar> CellPolynomial<S> {
    pub fn new(a: S, b: S, coeffs: Vec<S>) -> Result<Self> {
        if !(b > a) {
            return Err(CldgError::Domain(format!("cell [{a}, {b}] has no positive length")));
        }
        if coeffs.is_empty() {
            return Err(CldgError::Domain("cell polynomial needs at least one coefficient".into()));
        }
        let mut poly = Self { a, b, coeffs, about_a: Vec::new(), about_b: Vec::new() };
        poly.about_a = poly.power_coeffs_about(a);
        poly.about_b = poly.power_coeffs_about(b);
        Ok(poly)
    }

    /// Single orthonormal basis mode of degree m on [a, b].
    pub fn basis_mode(a: S, b: S, m: usize) -> Result<Self> {
        let mut coeffs = vec![S::zero(); m + 1];
        coeffs[m] = S::one();
        Self::new(a, b, coeffs)
    }

    /// Builds the cell polynomial equal to sum_j c_j (x - a)^j on [a, b].
    pub fn from_monomials(a: S, b: S, monomials: &[S]) -> Result<Self> {
        let n = monomials.len().max(1) - 1;
        let w = b - a;
        let rule = super::quadrature::gauss_legendre::<S>(n + 2)?;
        let mut coeffs = vec![S::zero(); n + 1];
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let x = a + (t + S::one()) * w * lit(0.5);
            let mut value = S::zero();
            for &c in monomials.iter().rev() {
                value = value * (x - a) + c;
            }
            let p = legendre_values(n, t);
            for m in 0..=n {
                let norm = ((lit::<S>(2.0) * from_usize::<S>(m) + S::one()) / w).sqrt();
                coeffs[m] += wt * value * norm * p[m] * w * lit(0.5);
            }
        }
        Self::new(a, b, coeffs)
    }

    pub fn left(&self) -> S {
        self.a
    }

    pub fn right(&self) -> S {
        self.b
    }

    pub fn width(&self) -> S {
        self.b - self.a
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[S] {
        &self.coeffs
    }

    fn reference(&self, x: S) -> S {
        lit::<S>(2.0) * (x - self.a) / self.width() - S::one()
    }

    /// Value of the polynomial formula, ignoring the support.
    pub fn eval_extended(&self, x: S) -> S {
        let n = self.degree();
        let p = legendre_values(n, self.reference(x));
        let w = self.width();
        (0..=n).map(|m| self.coeffs[m] * ((lit::<S>(2.0) * from_usize::<S>(m) + S::one()) / w).sqrt() * p[m]).sum()
    }

    /// Zero-extended value.
    pub fn eval(&self, x: S) -> S {
        if x < self.a || x > self.b {
            S::zero()
        } else {
            self.eval_extended(x)
        }
    }

    /// Derivative of the polynomial formula.
    pub fn derivative_extended(&self, x: S) -> S {
        let n = self.degree();
        let d = legendre_derivatives(n, self.reference(x));
        let w = self.width();
        let jac = lit::<S>(2.0) / w;
        (0..=n)
            .map(|m| self.coeffs[m] * ((lit::<S>(2.0) * from_usize::<S>(m) + S::one()) / w).sqrt() * d[m] * jac)
            .sum()
    }

    /// Coefficients e_j with p(x) = sum_j e_j (x - p0)^j.
    pub fn power_coeffs_about(&self, p0: S) -> Vec<S> {
        let n = self.degree();
        let w = self.width();
        let table = legendre_monomials::<S>(n);
        // polynomial in xi
        let mut in_xi = vec![S::zero(); n + 1];
        for m in 0..=n {
            let scale = self.coeffs[m] * ((lit::<S>(2.0) * from_usize::<S>(m) + S::one()) / w).sqrt();
            for (j, &c) in table[m].iter().enumerate() {
                in_xi[j] += scale * c;
            }
        }
        // xi = c1 t + c0 with t = x - p0
        let c1 = lit::<S>(2.0) / w;
        let c0 = lit::<S>(2.0) * (p0 - self.a) / w - S::one();
        let mut out = vec![S::zero(); n + 1];
        for &c in in_xi.iter().rev() {
            for j in (0..=n).rev() {
                let lower = if j > 0 { out[j - 1] } else { S::zero() };
                out[j] = out[j] * c0 + lower * c1;
            }
            out[0] += c;
        }
        out
    }

    pub fn coeffs_about_left(&self) -> &[S] {
        &self.about_a
    }

    pub fn coeffs_about_right(&self) -> &[S] {
        &self.about_b
    }

    /// The polynomial reflected by x -> 1 - x.
    pub fn mirror(&self) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(m, &c)| if m % 2 == 0 { c } else { -c }).collect();
        Self::new(S::one() - self.b, S::one() - self.a, coeffs).expect("mirror of a valid cell")
    }
}
