//! Asymptotic standard errors and confidence intervals for the scores.
//!
//! Each `π̂_i(t)` is asymptotically normal with standard deviation
//! `1 / α_i(t)` around `π_i(t) + β_i(t) h²`, and distinct items are
//! asymptotically independent. The bias term is only available when the true
//! skill curves are known, so intervals are centred at `π̂_i` and rely on a
//! small bandwidth to keep the bias negligible.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::data::ComparisonDataset;
use crate::error::{KrcError, Result};
use crate::group_inverse::GroupInverse;
use crate::kernel::{check_bandwidth, Kernel};
use crate::normal::two_sided_z;
use crate::spectral::{ScoreVector, TransitionMatrix};

/// Central finite-difference step for `ÿ*_kl`.
pub const BIAS_FD_STEP: f64 = 1e-3;

/// What stands in for `M_ij h` in the precision factors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EffectiveCount {
    /// Raw pair count times the bandwidth.
    #[default]
    RawCount,
    /// Realized kernel mass `Σ_k K((t - t_k) / h)` of the pair.
    KernelMass,
}

/// Where the scores plugged into the variance formula came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlugInSource {
    Estimated,
    OracleTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticParams {
    /// `α_i`; `None` when item `i` has no observed opponent.
    pub alpha: Vec<Option<f64>>,
    /// `β_i`, when computed from a known truth.
    pub beta: Option<Vec<f64>>,
    pub h: f64,
    pub source: PlugInSource,
    pub count: EffectiveCount,
}

impl AsymptoticParams {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self, i: usize) -> Result<f64> {
        match self.alpha.get(i) {
            Some(Some(a)) => Ok(*a),
            Some(None) => Err(KrcError::UndefinedPrecision(vec![i])),
            None => Err(KrcError::UnknownItem {
                item: i,
                n: self.alpha.len(),
            }),
        }
    }

    /// Asymptotic standard deviation `1 / α_i`.
    pub fn std_error(&self, i: usize) -> Result<f64> {
        self.alpha(i).map(|a| 1.0 / a)
    }

    /// Items whose `α` is undefined.
    pub fn undefined(&self) -> Vec<usize> {
        (0..self.alpha.len())
            .filter(|&i| self.alpha[i].is_none())
            .collect()
    }

    /// Fails with the full list of undefined items, if any.
    pub fn require_all(&self) -> Result<&Self> {
        let missing = self.undefined();
        if missing.is_empty() {
            Ok(self)
        } else {
            Err(KrcError::UndefinedPrecision(missing))
        }
    }

    pub fn with_beta(mut self, beta: Vec<f64>) -> Self {
        self.beta = Some(beta);
        self
    }
}

/// `α_i = √[(Σ_j y_ij)² / Σ_j (π_i + π_j)² y_ij (1 − y_ij) ∫K² / (M_ij h)]`
/// with `y_ij = π_j / (π_i + π_j)` and both sums over observed opponents.
pub fn precision_factors(
    pi: &[f64],
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
    count: EffectiveCount,
    source: PlugInSource,
) -> Result<AsymptoticParams> {
    let n = dataset.n();
    if pi.len() != n {
        return Err(KrcError::DimensionMismatch {
            expected: n,
            got: pi.len(),
        });
    }
    check_bandwidth(h)?;
    for (item, &value) in pi.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(KrcError::NonPositiveScore { item, value });
        }
    }
    let k2 = kernel.squared_integral();
    let mut numer = vec![0.0; n];
    let mut denom = vec![0.0; n];
    for pair in dataset.pairs() {
        let mass = match count {
            EffectiveCount::RawCount => pair.len() as f64 * h,
            EffectiveCount::KernelMass => pair.kernel_sums(kernel, t, h).1,
        };
        if !(mass > 0.0) {
            continue;
        }
        let (i, j) = (pair.i, pair.j);
        let s = pi[i] + pi[j];
        let y_ij = pi[j] / s;
        let term = s * s * y_ij * (1.0 - y_ij) * k2 / mass;
        numer[i] += y_ij;
        numer[j] += 1.0 - y_ij;
        denom[i] += term;
        denom[j] += term;
    }
    let alpha = numer
        .iter()
        .zip(&denom)
        .map(|(&a, &b)| (b > 0.0).then(|| a / libm::sqrt(b)))
        .collect();
    Ok(AsymptoticParams {
        alpha,
        beta: None,
        h,
        source,
        count,
    })
}

/// Precision factors with the estimate plugged in and raw pair counts.
pub fn plug_in_alpha(
    pi_hat: &ScoreVector,
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
) -> Result<AsymptoticParams> {
    precision_factors(
        pi_hat.scores(),
        dataset,
        t,
        h,
        kernel,
        EffectiveCount::RawCount,
        PlugInSource::Estimated,
    )
}

/// `β_i = Σ_{k<l} (A#_li − A#_ki) (π_k + π_l)/n · ÿ*_kl(t) ∫v²K`.
///
/// `truth` returns the normalized true scores at a time; `ainv` is the group
/// inverse of `I − P*(t)`. Second derivatives use central differences, so
/// `t ± BIAS_FD_STEP` must stay inside `[0, 1]`.
pub fn oracle_beta(
    truth: impl Fn(f64) -> Vec<f64>,
    t: f64,
    kernel: &Kernel,
    ainv: &GroupInverse,
) -> Result<Vec<f64>> {
    let step = BIAS_FD_STEP;
    if !(t - step >= 0.0 && t + step <= 1.0) {
        return Err(KrcError::BoundaryTooClose { t, step });
    }
    let n = ainv.n();
    let lo = truth(t - step);
    let mid = truth(t);
    let hi = truth(t + step);
    for v in [&lo, &mid, &hi] {
        if v.len() != n {
            return Err(KrcError::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    let y = |p: &[f64], k: usize, l: usize| p[l] / (p[k] + p[l]);
    let mu2 = kernel.second_moment();
    let g = ainv.matrix();
    let mut beta = vec![0.0; n];
    for k in 0..n {
        for l in k + 1..n {
            let ydd = (y(&hi, k, l) - 2.0 * y(&mid, k, l) + y(&lo, k, l)) / (step * step);
            if ydd == 0.0 {
                continue;
            }
            let w = (mid[k] + mid[l]) / n as f64 * ydd * mu2;
            for (i, b) in beta.iter_mut().enumerate() {
                *b += (g[(l, i)] - g[(k, i)]) * w;
            }
        }
    }
    Ok(beta)
}

/// Diagonal stand-in for the group inverse: `Ã_ii = 1 / Σ_{j≠i} y_ij / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalApproxGroupInverse {
    pub diag: Vec<f64>,
}

impl DiagonalApproxGroupInverse {
    /// `max_i ‖Ã_{·i} − A#_{·i}‖₂`.
    pub fn max_column_error(&self, exact: &GroupInverse) -> Result<f64> {
        let n = self.diag.len();
        if exact.n() != n {
            return Err(KrcError::DimensionMismatch {
                expected: n,
                got: exact.n(),
            });
        }
        let g = exact.matrix();
        let worst = (0..n)
            .map(|c| {
                let sq: f64 = (0..n)
                    .map(|r| {
                        let approx = if r == c { self.diag[c] } else { 0.0 };
                        let d = approx - g[(r, c)];
                        d * d
                    })
                    .sum();
                libm::sqrt(sq)
            })
            .fold(0.0, f64::max);
        Ok(worst)
    }
}

pub fn diagonal_group_inverse_approx(pi: &ScoreVector) -> Result<DiagonalApproxGroupInverse> {
    let p = pi.scores();
    let n = p.len();
    for (item, &value) in p.iter().enumerate() {
        if !(value > 0.0) {
            return Err(KrcError::NonPositiveScore { item, value });
        }
    }
    let diag = (0..n)
        .map(|i| {
            let s: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| p[j] / (p[i] + p[j]))
                .sum();
            n as f64 / s
        })
        .collect();
    Ok(DiagonalApproxGroupInverse { diag })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// `0.57 (0.51, 0.63)`; the precision defaults to two decimals.
impl fmt::Display for IntervalEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(2);
        write!(
            f,
            "{:.p$} ({:.p$}, {:.p$})",
            self.point,
            self.lower,
            self.upper,
            p = p
        )
    }
}

fn check_level(level: f64) -> Result<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(two_sided_z(level))
    } else {
        Err(KrcError::InvalidLevel(level))
    }
}

/// `π̂_i ± z / α_i`, bias ignored.
pub fn score_ci(
    pi_hat: &ScoreVector,
    params: &AsymptoticParams,
    i: usize,
    level: f64,
) -> Result<IntervalEstimate> {
    let z = check_level(level)?;
    let half = z / params.alpha(i)?;
    let point = pi_hat.get(i);
    Ok(IntervalEstimate {
        point,
        lower: point - half,
        upper: point + half,
        level,
    })
}

/// Delta-method interval for `P(j beats i) = π_j / (π_i + π_j)`, clipped to
/// `[0, 1]`.
pub fn pairwise_win_ci(
    pi_hat: &ScoreVector,
    params: &AsymptoticParams,
    i: usize,
    j: usize,
    level: f64,
) -> Result<IntervalEstimate> {
    let z = check_level(level)?;
    let (ai, aj) = match (params.alpha(i), params.alpha(j)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(_), Err(_)) => return Err(KrcError::UndefinedPrecision(vec![i, j])),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let (pi, pj) = (pi_hat.get(i), pi_hat.get(j));
    let s = pi + pj;
    let point = pj / s;
    let gi = -pj / (s * s);
    let gj = pi / (s * s);
    let var = gi * gi / (ai * ai) + gj * gj / (aj * aj);
    let half = z * libm::sqrt(var);
    Ok(IntervalEstimate {
        point,
        lower: (point - half).max(0.0),
        upper: (point + half).min(1.0),
        level,
    })
}

/// Check of the expansion `π̂ᵀ = πᵀ + πᵀ E A# + ...` for `E = P̂ − P*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionReport {
    /// `‖E‖₂`
    pub e_norm: f64,
    /// `‖E A#‖₂`
    pub ea_norm: f64,
    /// `‖E A#‖₂ < 1`
    pub condition_holds: bool,
    /// `‖π̂ − π − (πᵀ E A#)ᵀ‖∞`
    pub first_order_residual: f64,
}

pub fn expansion_diagnostic(
    p_hat: &TransitionMatrix,
    p_star: &TransitionMatrix,
    ainv_star: &GroupInverse,
    pi_hat: &ScoreVector,
    pi_star: &ScoreVector,
) -> Result<ExpansionReport> {
    let n = p_star.n();
    for got in [p_hat.n(), ainv_star.n(), pi_hat.len(), pi_star.len()] {
        if got != n {
            return Err(KrcError::DimensionMismatch { expected: n, got });
        }
    }
    let e: DMatrix<f64> = p_hat.matrix() - p_star.matrix();
    let ea = &e * ainv_star.matrix();
    let e_norm = spectral_norm(&e);
    let ea_norm = spectral_norm(&ea);
    let pi = DVector::from_column_slice(pi_star.scores());
    let first = ea.tr_mul(&pi);
    let first_order_residual = (0..n)
        .map(|k| (pi_hat.get(k) - pi[k] - first[k]).abs())
        .fold(0.0, f64::max);
    Ok(ExpansionReport {
        e_norm,
        ea_norm,
        condition_holds: ea_norm < 1.0,
        first_order_residual,
    })
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}
