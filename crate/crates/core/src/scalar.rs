//! Scalar abstraction shared by every numerical module.
//!
//! All kernels, meshes and solvers are written against [`Scalar`], which is
//! implemented for `f32` and `f64`. The log-gamma routine lives here because
//! the standard library does not expose one for generic floats.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point type usable by the solver.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into the working scalar.
#[inline]
pub fn from_usize<S: Scalar>(n: usize) -> S {
    S::from_usize(n).expect("count representable in scalar type")
}

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum<S: Scalar>(x: S) -> S {
    let mut acc = lit::<S>(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += lit::<S>(c) / (x + from_usize(i));
    }
    acc
}

/// Gamma function, valid for all non-pole real arguments.
pub fn gamma<S: Scalar>(x: S) -> S {
    let half = lit::<S>(0.5);
    if x < half {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = S::PI();
        pi / ((pi * x).sin() * gamma(S::one() - x))
    } else {
        let z = x - S::one();
        let t = z + lit(LANCZOS_G) + half;
        let two_pi = S::PI() + S::PI();
        two_pi.sqrt() * t.powf(z + half) * (-t).exp() * lanczos_sum(z)
    }
}

/// Natural logarithm of |Γ(x)|.
pub fn ln_gamma<S: Scalar>(x: S) -> S {
    let half = lit::<S>(0.5);
    if x < half {
        let pi = S::PI();
        (pi / (pi * x).sin().abs()).ln() - ln_gamma(S::one() - x)
    } else {
        let z = x - S::one();
        let t = z + lit(LANCZOS_G) + half;
        let two_pi = S::PI() + S::PI();
        half * two_pi.ln() + (z + half) * t.ln() - t + lanczos_sum(z).ln()
    }
}

/// Γ(m + 1) / Γ(m + 1 + shift), computed through log-gamma so that large
/// `m` does not overflow. Both gamma arguments must be positive.
pub fn gamma_ratio<S: Scalar>(m: usize, shift: S) -> S {
    let m1 = from_usize::<S>(m) + S::one();
    (ln_gamma(m1) - ln_gamma(m1 + shift)).exp()
}
