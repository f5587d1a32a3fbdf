use super::{FractionalExponent, Side};
use crate::error::{CldgError, Result};
use crate::scalar::{from_usize, Scalar};

/// Grünwald–Letnikov approximation of the one-sided derivative of order s at
/// every node of a uniform grid. First-order accurate; samples are assumed to
/// vanish beyond the grid on the lower-limit side.
pub fn gl_fractional_derivative<S: Scalar>(
    samples: &[S],
    s: FractionalExponent<S>,
    grid_step: S,
    side: Side,
) -> Result<Vec<S>> {
    let n = samples.len();
    if n < 2 {
        return Err(CldgError::Domain("Grünwald–Letnikov needs at least two samples".into()));
    }
    if !(grid_step > S::zero()) {
        return Err(CldgError::Domain("grid step must be positive".into()));
    }
    let s = s.value();
    let mut weights = Vec::with_capacity(n);
    weights.push(S::one());
    for k in 1..n {
        let prev = weights[k - 1];
        weights.push(prev * (S::one() - (s + S::one()) / from_usize::<S>(k)));
    }
    let scale = grid_step.powf(-s);
    let out = (0..n)
        .map(|i| {
            let acc: S = match side {
                Side::Left => (0..=i).map(|k| weights[k] * samples[i - k]).sum(),
                Side::Right => (0..n - i).map(|k| weights[k] * samples[i + k]).sum(),
            };
            acc * scale
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_in_zero_out() {
        let s = FractionalExponent::new(0.4).unwrap();
        let d = gl_fractional_derivative(&[0.0f64; 10], s, 0.1, Side::Left).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
        assert!(gl_fractional_derivative(&[1.0f64], s, 0.1, Side::Left).is_err());
    }

    #[test]
    fn linear_function_half_derivative() {
        let n = 1 << 12;
        let h = 1.0 / n as f64;
        let samples: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let s = FractionalExponent::new(0.5).unwrap();
        let d = gl_fractional_derivative(&samples, s, h, Side::Left).unwrap();
        let x: f64 = 0.5;
        let want = x.sqrt() / statrs::function::gamma::gamma(1.5);
        assert!((d[n / 2] - want).abs() < 0.01 * want);
    }
}
