//! Riemann–Liouville primitives on cell-supported polynomials.

mod gl;
mod kernels;
mod polynomial;
pub mod quadrature;

pub use gl::gl_fractional_derivative;
pub use kernels::{
    left_frac_deriv_cellpoly, power_terms, right_frac_deriv_cellpoly, rl_integral_power_rule, rl_power_rule,
    rl_power_rule_right, PowerTerm,
};
pub use polynomial::{legendre_derivatives, legendre_values, CellPolynomial};
pub use quadrature::{gauss_jacobi, gauss_jacobi_rule, gauss_legendre, EndpointRule, QuadratureRule};

use serde::{Deserialize, Serialize};

use crate::error::{CldgError, Result};
use crate::scalar::{lit, Scalar};

/// Distance kept from the ends of (1, 2) when validating an order.
pub const ORDER_GUARD: f64 = 1e-6;

/// Which end of the domain a one-sided operator integrates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Order s of a half-order kernel, 0 < s < 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalExponent<S> {
    value: S,
}

impl<S: Scalar> FractionalExponent<S> {
    pub fn new(value: S) -> Result<Self> {
        if value > S::zero() && value < S::one() {
            Ok(Self { value })
        } else {
            Err(CldgError::InvalidExponent {
                value: value.to_f64().unwrap_or(f64::NAN),
                reason: "fractional exponent must lie in (0, 1)",
            })
        }
    }

    /// Exponent usable in a Gram pairing, restricted to (0, 1/2).
    pub fn for_gram(value: S) -> Result<Self> {
        if value > S::zero() && value < lit(0.5) {
            Ok(Self { value })
        } else {
            Err(CldgError::InvalidExponent {
                value: value.to_f64().unwrap_or(f64::NAN),
                reason: "Gram exponent must lie in (0, 1/2)",
            })
        }
    }

    pub fn value(self) -> S {
        self.value
    }
}

/// Order of the fractional diffusion operator, 1 < alpha < 2.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder<S> {
    value: S,
}

impl<S: Scalar> FractionalOrder<S> {
    pub fn new(value: S) -> Result<Self> {
        let guard = lit::<S>(ORDER_GUARD);
        if value >= S::one() + guard && value <= lit::<S>(2.0) - guard {
            Ok(Self { value })
        } else {
            Err(CldgError::InvalidExponent {
                value: value.to_f64().unwrap_or(f64::NAN),
                reason: "diffusion order must lie in (1, 2) away from the ends",
            })
        }
    }

    pub fn value(self) -> S {
        self.value
    }

    /// The half order (2 - alpha)/2 used by the auxiliary equations.
    pub fn half_exponent(self) -> FractionalExponent<S> {
        FractionalExponent { value: (lit::<S>(2.0) - self.value) * lit(0.5) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_ranges() {
        assert!(FractionalExponent::new(0.7f64).is_ok());
        assert!(FractionalExponent::new(0.0f64).is_err());
        assert!(FractionalExponent::new(1.0f64).is_err());
        assert!(FractionalExponent::for_gram(0.45f64).is_ok());
        assert!(FractionalExponent::for_gram(0.5f64).is_err());
    }

    #[test]
    fn order_guard_band() {
        assert!(FractionalOrder::new(1.0f64 + 1e-7).is_err());
        assert!(FractionalOrder::new(2.0f64 - 1e-7).is_err());
        let a = FractionalOrder::new(1.5f64).unwrap();
        assert!((a.half_exponent().value() - 0.25).abs() < 1e-15);
        assert!(FractionalOrder::new(1.9f32).is_ok());
    }
}
