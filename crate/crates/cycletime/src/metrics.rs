//! Fit metrics: mean squared error, Pearson correlation, and a small
//! regression summary used by the reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Mean squared error between paired samples.
pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let n = actual.len() as f64;
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| {
            let e = a - p;
            e * e
        })
        .sum();
    Ok(sum / n)
}

/// Pearson correlation coefficient between paired samples. Needs at least
/// two points and non-constant inputs on both sides.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two points".to_string(),
        ));
    }
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Summary of a predicted-vs-actual comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionStats {
    pub n: usize,
    pub mse: f64,
    /// Absent when the correlation is undefined (constant actuals or
    /// constant predictions).
    pub r_value: Option<f64>,
    pub residual_mean: f64,
    pub residual_min: f64,
    pub residual_max: f64,
}

/// Computes the regression summary over paired samples. Residuals are
/// `actual - predicted`.
pub fn stats(actual: &[f64], predicted: &[f64]) -> Result<RegressionStats> {
    let mse = mse(actual, predicted)?;
    let r_value = match pearson_r(actual, predicted) {
        Ok(r) => Some(r),
        Err(Error::ConstantInput) => None,
        Err(Error::InvalidArgument(_)) => None,
        Err(e) => return Err(e),
    };
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (a, p) in actual.iter().zip(predicted) {
        let r = a - p;
        sum += r;
        min = min.min(r);
        max = max.max(r);
    }
    Ok(RegressionStats {
        n: actual.len(),
        mse,
        r_value,
        residual_mean: sum / actual.len() as f64,
        residual_min: min,
        residual_max: max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_is_zero_on_identical_inputs() {
        let v = [1.0, -2.5, 3.75, 0.0];
        assert_eq!(mse(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn mse_matches_hand_computation() {
        let m = mse(&[1.0, 2.0], &[0.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
    }

    #[test]
    fn mse_scales_quadratically_with_error_size() {
        let a = [0.0, 1.0, 2.0, 5.0];
        let p1 = [0.5, 1.5, 2.5, 5.5];
        let p2 = [1.0, 2.0, 3.0, 6.0];
        let m1 = mse(&a, &p1).unwrap();
        let m2 = mse(&a, &p2).unwrap();
        assert!((m2 - 4.0 * m1).abs() < 1e-15);
    }

    #[test]
    fn mse_validates_shapes() {
        assert!(matches!(
            mse(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(mse(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn pearson_is_plus_one_on_increasing_linear_data() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_r(&x, &y).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pearson_is_minus_one_on_decreasing_linear_data() {
        let x = [0.0, 0.5, 1.5, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -3.0 * v + 2.0).collect();
        assert!((pearson_r(&x, &y).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn pearson_is_symmetric_and_affine_invariant() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let y = [2.0, 1.0, 7.0, 3.0, 6.0];
        let r_xy = pearson_r(&x, &y).unwrap();
        let r_yx = pearson_r(&y, &x).unwrap();
        assert!((r_xy - r_yx).abs() < 1e-15);
        let y_shifted: Vec<f64> = y.iter().map(|v| 10.0 * v - 4.0).collect();
        let r_shifted = pearson_r(&x, &y_shifted).unwrap();
        assert!((r_xy - r_shifted).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_degenerate_inputs() {
        assert!(matches!(
            pearson_r(&[1.0], &[2.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            pearson_r(&[1.0, 1.0], &[2.0, 3.0]),
            Err(Error::ConstantInput)
        ));
    }

    #[test]
    fn stats_reports_residual_extents() {
        let s = stats(&[1.0, 2.0, 3.0], &[0.5, 2.5, 3.0]).unwrap();
        assert_eq!(s.n, 3);
        assert_eq!(s.residual_min, -0.5);
        assert_eq!(s.residual_max, 0.5);
        assert!((s.residual_mean - 0.0).abs() < 1e-15);
        assert!(s.r_value.is_some());
    }

    #[test]
    fn stats_marks_undefined_correlation_as_absent() {
        let s = stats(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.r_value, None);
        assert!(s.mse > 0.0);
    }
}
