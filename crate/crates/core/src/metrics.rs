//! Error metrics of an estimated score curve against a known truth.

use alloc::vec::Vec;

use crate::error::{KrcError, Result};
use crate::spectral::ScoreVector;

/// Tolerance when matching an estimate's time to the grid.
const GRID_TOL: f64 = 1e-12;

/// `t_k = k / M` for `k = 1, …, M − 1`.
pub fn metric_grid(m: usize) -> Vec<f64> {
    (1..m).map(|k| k as f64 / m as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointError {
    pub t: f64,
    /// `‖π̂ − π‖₂ / ‖π‖₂`
    pub l2_rel: f64,
    /// `‖π̂ − π‖∞ / ‖π‖∞`
    pub linf_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Mean of the relative ℓ₂ errors.
    pub rmse_avg: f64,
    /// Max of the relative ℓ∞ errors.
    pub linf_max: f64,
    pub grid: Vec<f64>,
    pub per_point_errors: Vec<PointError>,
}

pub fn point_error(estimate: &[f64], truth: &[f64], t: f64) -> Result<PointError> {
    if estimate.len() != truth.len() {
        return Err(KrcError::DimensionMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    let (mut d2, mut t2, mut dinf, mut tinf) = (0.0, 0.0, 0.0_f64, 0.0_f64);
    for (&a, &b) in estimate.iter().zip(truth) {
        let d = a - b;
        d2 += d * d;
        t2 += b * b;
        dinf = dinf.max(d.abs());
        tinf = tinf.max(b.abs());
    }
    Ok(PointError {
        t,
        l2_rel: libm::sqrt(d2) / libm::sqrt(t2),
        linf_rel: dinf / tinf,
    })
}

/// Errors on an arbitrary grid. `truth(t)` gives the reference vector.
pub fn evaluate_on_grid(
    estimates: &[ScoreVector],
    grid: &[f64],
    truth: impl Fn(f64) -> Vec<f64>,
) -> Result<MetricReport> {
    if grid.is_empty() {
        return Err(KrcError::GridMismatch("empty grid".into()));
    }
    if estimates.len() != grid.len() {
        return Err(KrcError::GridMismatch(alloc::format!(
            "{} estimates for {} grid points",
            estimates.len(),
            grid.len()
        )));
    }
    let mut per_point_errors = Vec::with_capacity(grid.len());
    for (est, &t) in estimates.iter().zip(grid) {
        if let Some(te) = est.t() {
            if (te - t).abs() > GRID_TOL {
                return Err(KrcError::GridMismatch(alloc::format!(
                    "estimate at t = {te} where the grid has {t}"
                )));
            }
        }
        per_point_errors.push(point_error(est.scores(), &truth(t), t)?);
    }
    let rmse_avg =
        per_point_errors.iter().map(|e| e.l2_rel).sum::<f64>() / per_point_errors.len() as f64;
    let linf_max = per_point_errors
        .iter()
        .map(|e| e.linf_rel)
        .fold(0.0, f64::max);
    Ok(MetricReport {
        rmse_avg,
        linf_max,
        grid: grid.to_vec(),
        per_point_errors,
    })
}

/// Both metrics over `t_k = k / M`, `k = 1, …, M − 1`.
pub fn evaluate_metrics(
    estimates: &[ScoreVector],
    truth: impl Fn(f64) -> Vec<f64>,
    m: usize,
) -> Result<MetricReport> {
    if m < 2 {
        return Err(KrcError::GridMismatch("M must be at least 2".into()));
    }
    evaluate_on_grid(estimates, &metric_grid(m), truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_error() {
        let truth = |t: f64| vec![0.5 - 0.1 * t, 0.5 + 0.1 * t];
        let est: Vec<_> = metric_grid(5)
            .into_iter()
            .map(|t| ScoreVector::from_weights(truth(t)).unwrap().at(t))
            .collect();
        let r = evaluate_metrics(&est, truth, 5).unwrap();
        assert!(r.rmse_avg < 1e-15 && r.linf_max < 1e-15);
        assert_eq!(r.grid.len(), 4);
    }

    #[test]
    fn single_point_hand_value() {
        let est = vec![ScoreVector::from_weights(vec![0.6, 0.4]).unwrap().at(0.5)];
        let r = evaluate_metrics(&est, |_| vec![0.5, 0.5], 2).unwrap();
        assert!((r.rmse_avg - 0.2).abs() < 1e-12);
        assert!((r.linf_max - 0.2).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch() {
        let est = vec![ScoreVector::uniform(2).at(0.3)];
        assert!(matches!(
            evaluate_metrics(&est, |_| vec![0.5, 0.5], 2),
            Err(KrcError::GridMismatch(_))
        ));
        assert!(matches!(
            evaluate_metrics(&est, |_| vec![0.5, 0.5], 3),
            Err(KrcError::GridMismatch(_))
        ));
    }
}
