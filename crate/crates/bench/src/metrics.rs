//! Error statistics over recorded runs.
//!
//! Pooled RMSE treats every joint of every sample as one scalar observation:
//! `sqrt(Σ_k Σ_i e_{k,i}² / (K n))`.

use crate::error::{BenchError, Result};

/// Pooled RMSE over all components of all samples.
pub fn rmse<E: AsRef<[f64]>>(errors: &[E]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for e in errors {
        for x in e.as_ref() {
            sum += x * x;
            count += 1;
        }
    }
    if count == 0 {
        return Err(BenchError::InvalidConfig("rmse of an empty sequence".into()));
    }
    Ok((sum / count as f64).sqrt())
}

/// RMSE of each component separately.
pub fn rmse_per_joint<E: AsRef<[f64]>>(errors: &[E]) -> Result<Vec<f64>> {
    let n = errors
        .first()
        .map(|e| e.as_ref().len())
        .ok_or_else(|| BenchError::InvalidConfig("rmse of an empty sequence".into()))?;
    let mut sums = vec![0.0; n];
    for e in errors {
        for (s, x) in sums.iter_mut().zip(e.as_ref()) {
            *s += x * x;
        }
    }
    Ok(sums
        .into_iter()
        .map(|s| (s / errors.len() as f64).sqrt())
        .collect())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ordinary least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
}

impl LinearFit {
    pub fn t_statistic(&self) -> f64 {
        if self.slope_se > 0.0 {
            self.slope / self.slope_se
        } else if self.slope == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_se = (sse / (n as f64 - 2.0) / sxx).sqrt();
    Some(LinearFit {
        slope,
        intercept,
        slope_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[[0.0, 0.0], [0.0, 0.0]]).unwrap(), 0.0);
        assert!((rmse(&[[-0.3], [-0.3], [-0.3]]).unwrap() - 0.3).abs() < 1e-15);
        // sqrt((9 + 16) / 2)
        assert!((rmse(&[[3.0, 4.0]]).unwrap() - 3.535534).abs() < 1e-6);
        assert!(rmse::<[f64; 2]>(&[]).is_err());
        assert_eq!(rmse_per_joint(&[[3.0, 4.0], [3.0, 0.0]]).unwrap()[0], 3.0);
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(std_dev(&[1.0, 3.0]), 1.0);
        let fit = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.slope_se < 1e-12);
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_none());
    }
}
