use crate::autodiff::sign;
use crate::error::{GnlError, Result};

/// Guard for the Frobenius-norm derivative at the origin.
pub const FNORM_GUARD: f64 = 1e-12;

/// Proximal map of `kappa * ||.||_1`.
pub fn soft_threshold(v: &[f64], kappa: f64) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    soft_threshold_in_place(&mut out, kappa)?;
    Ok(out)
}

pub fn soft_threshold_in_place(v: &mut [f64], kappa: f64) -> Result<()> {
    if !(kappa >= 0.0) {
        return Err(GnlError::Argument(format!("threshold must be non-negative, got {kappa}")));
    }
    for x in v.iter_mut() {
        *x = if *x > kappa {
            *x - kappa
        } else if *x < -kappa {
            *x + kappa
        } else {
            0.0
        };
    }
    Ok(())
}

/// Piecewise derivative of `||.||_1`: -1, 0 or +1.
pub fn l1_subgradient(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| sign(x)).collect()
}

/// Gradient of the Frobenius norm of one array, `v / max(||v||_F, guard)`.
pub fn fnorm_gradient(v: &[f64], guard: f64) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = norm.max(guard);
    v.iter().map(|x| x / denom).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[2.0, 0.5, -3.0], 1.0).unwrap(), vec![1.0, 0.0, -2.0]);
        let v = [0.3, -7.2, 0.0, 1e-9];
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v.to_vec());
        let out = soft_threshold(&[0.2, -0.31, 1.0], 0.3).unwrap();
        assert_eq!(out[0], 0.0);
        assert_abs_diff_eq!(out[1], -0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], 0.7, epsilon = 1e-15);
        // boundary belongs to the zero branch
        assert_eq!(soft_threshold(&[0.3, -0.3], 0.3).unwrap(), vec![0.0, 0.0]);
        assert!(soft_threshold(&[1.0], -0.1).is_err());
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(l1_subgradient(&[3.0, -4.0, 0.0]), vec![1.0, -1.0, 0.0]);
        assert_eq!(l1_subgradient(&[0.0; 3]), vec![0.0; 3]);
        let theta = [1.5, -2.0, 0.0, 0.25];
        let dot: f64 = l1_subgradient(&theta).iter().zip(&theta).map(|(s, t)| s * t).sum();
        assert_eq!(dot, 3.75);
    }

    #[test]
    fn fnorm_gradient_examples() {
        let unit = [0.6, 0.0, -0.8];
        for (a, b) in fnorm_gradient(&unit, FNORM_GUARD).iter().zip(unit) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(fnorm_gradient(&[0.0, 0.0], 1e-12), vec![0.0, 0.0]);
        assert_eq!(fnorm_gradient(&[3.0, 4.0], 1e-12), vec![0.6, 0.8]);
    }

    proptest! {
        #[test]
        fn soft_threshold_is_non_expansive(
            a in proptest::collection::vec(-10.0f64..10.0, 6),
            b in proptest::collection::vec(-10.0f64..10.0, 6),
            kappa in 0.0f64..5.0,
        ) {
            let (sa, sb) = (soft_threshold(&a, kappa).unwrap(), soft_threshold(&b, kappa).unwrap());
            let d_in: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
            let d_out: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y).powi(2)).sum();
            // rounding of the shifted values
            prop_assert!(d_out <= d_in + 1e-12 * (1.0 + d_in));
        }
    }
}
