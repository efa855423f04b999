//! Reference estimators: static Rank Centrality, Elo, the Bradley-Terry MLE
//! and its kernel-weighted version.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{connectivity_from_adjacency, pooled_connectivity, ComparisonDataset};
use crate::error::{KrcError, Result};
use crate::kernel::{check_bandwidth, Kernel};
use crate::spectral::{
    check_fractions, kernel_fractions, regularize, stationary, transition_from_fractions, ScoreVector, SolverConfig, TransitionMatrix,
};

/// Comparison chain from the time-pooled win fractions.
pub fn static_transition(dataset: &ComparisonDataset) -> Result<TransitionMatrix> {
    let n = dataset.n();
    if n < 2 {
        return Err(KrcError::TooFewItems(n));
    }
    if dataset.is_empty() {
        return Err(KrcError::EmptyDataset);
    }
    let fractions = dataset
        .pairs()
        .iter()
        .map(|p| (p.i, p.j, p.j_wins() as f64 / p.len() as f64));
    transition_from_fractions(n, fractions)
}

/// Rank Centrality on all comparisons at once, ignoring time.
pub fn static_rank_centrality(
    dataset: &ComparisonDataset,
    sigma: f64,
    config: &SolverConfig,
) -> Result<ScoreVector> {
    let p = static_transition(dataset)?;
    if sigma == 0.0 && !pooled_connectivity(dataset).strongly_connected {
        return Err(KrcError::Disconnected);
    }
    stationary(&regularize(&p, sigma)?, config)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EloConfig {
    pub k_factor: f64,
    pub initial_rating: f64,
    /// Rating difference at which the odds are 10 to 1.
    pub logistic_scale: f64,
}

impl Default for EloConfig {
    fn default() -> Self {
        Self {
            k_factor: 20.0,
            initial_rating: 1500.0,
            logistic_scale: 400.0,
        }
    }
}

impl EloConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.k_factor > 0.0
            && self.logistic_scale > 0.0
            && self.k_factor.is_finite()
            && self.logistic_scale.is_finite()
            && self.initial_rating.is_finite();
        if ok {
            Ok(())
        } else {
            Err(KrcError::InvalidConfig("Elo k_factor and logistic_scale must be positive".into()))
        }
    }

    /// Expected score of a player rated `r` against `r_opp`.
    pub fn expected(&self, r: f64, r_opp: f64) -> f64 {
        1.0 / (1.0 + libm::pow(10.0, (r_opp - r) / self.logistic_scale))
    }
}

/// One rating after a game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EloRow {
    pub time: f64,
    pub item: usize,
    pub rating: f64,
}

/// Per-item rating trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EloTable {
    initial: f64,
    // per item, (time, rating after the game) in processing order
    history: Vec<Vec<(f64, f64)>>,
    rows: Vec<EloRow>,
}

impl EloTable {
    pub fn n(&self) -> usize {
        self.history.len()
    }

    /// All updates in processing order, two per game.
    pub fn rows(&self) -> &[EloRow] {
        &self.rows
    }

    /// Latest rating from games strictly before `t`.
    pub fn rating_before(&self, item: usize, t: f64) -> f64 {
        let h = &self.history[item];
        let k = h.partition_point(|&(time, _)| time < t);
        if k == 0 {
            self.initial
        } else {
            h[k - 1].1
        }
    }

    pub fn final_ratings(&self) -> Vec<f64> {
        self.history
            .iter()
            .map(|h| h.last().map_or(self.initial, |&(_, r)| r))
            .collect()
    }

    pub fn ratings_before(&self, t: f64) -> Vec<f64> {
        (0..self.n()).map(|i| self.rating_before(i, t)).collect()
    }
}

/// Textbook Elo in time order; simultaneous games go in record order.
pub fn elo_fit(dataset: &ComparisonDataset, config: &EloConfig) -> Result<EloTable> {
    config.validate()?;
    let n = dataset.n();
    let records = dataset.records();
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].time().total_cmp(&records[b].time()));

    let mut rating = vec![config.initial_rating; n];
    let mut history = vec![Vec::new(); n];
    let mut rows = Vec::with_capacity(2 * records.len());
    for k in order {
        let r = &records[k];
        let (w, l) = (r.winner(), r.loser());
        let delta = config.k_factor * (1.0 - config.expected(rating[w], rating[l]));
        rating[w] += delta;
        rating[l] -= delta;
        for item in [r.item_i(), r.item_j()] {
            history[item].push((r.time(), rating[item]));
            rows.push(EloRow {
                time: r.time(),
                item,
                rating: rating[item],
            });
        }
    }
    Ok(EloTable {
        initial: config.initial_rating,
        history,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MMConfig {
    /// Stop when the ∞-norm change of the normalized iterate falls below.
    pub tol: f64,
    pub max_iter: usize,
    /// Evaluate the likelihood every iteration and fail on a decrease.
    pub check_ascent: bool,
}

impl Default for MMConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            check_ascent: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmFit {
    pub scores: ScoreVector,
    pub iterations: usize,
    pub log_likelihood: f64,
}

/// `(i, j, weight, weight on j winning)` for one pair.
#[derive(Debug, Clone, Copy)]
struct PairTerm {
    i: usize,
    j: usize,
    total: f64,
    j_wins: f64,
}

fn log_likelihood(terms: &[PairTerm], pi: &[f64]) -> f64 {
    let xlog = |w: f64, p: f64| if w > 0.0 { w * libm::log(p) } else { 0.0 };
    terms
        .iter()
        .map(|t| {
            let s = pi[t.i] + pi[t.j];
            xlog(t.j_wins, pi[t.j] / s) + xlog(t.total - t.j_wins, pi[t.i] / s)
        })
        .sum()
}

/// Hunter's iteration `π_i ← W_i / Σ_j N_ij / (π_i + π_j)`, then normalize.
fn mm_solve(n: usize, terms: &[PairTerm], start: &[f64], config: &MMConfig) -> Result<MmFit> {
    if !(config.tol > 0.0) {
        return Err(KrcError::InvalidConfig("MM tol must be positive".into()));
    }
    let mut wins = vec![0.0; n];
    for t in terms {
        wins[t.j] += t.j_wins;
        wins[t.i] += t.total - t.j_wins;
    }
    let total: f64 = start.iter().sum();
    let mut pi: Vec<f64> = start.iter().map(|x| x / total).collect();
    let mut ll = if config.check_ascent {
        log_likelihood(terms, &pi)
    } else {
        f64::NAN
    };
    let mut denom = vec![0.0; n];
    let mut change = f64::INFINITY;
    for iteration in 1..=config.max_iter {
        denom.iter_mut().for_each(|d| *d = 0.0);
        for t in terms {
            let q = t.total / (pi[t.i] + pi[t.j]);
            denom[t.i] += q;
            denom[t.j] += q;
        }
        let mut next: Vec<f64> = wins.iter().zip(&denom).map(|(w, d)| w / d).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        change = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pi = next;
        if config.check_ascent {
            let now = log_likelihood(terms, &pi);
            if now < ll - 1e-12 * ll.abs().max(1.0) {
                return Err(KrcError::LikelihoodDecrease {
                    before: ll,
                    after: now,
                    iteration,
                });
            }
            ll = now;
        }
        if change < config.tol {
            let log_likelihood = if config.check_ascent { ll } else { log_likelihood(terms, &pi) };
            return Ok(MmFit {
                scores: ScoreVector::from_raw(pi),
                iterations: iteration,
                log_likelihood,
            });
        }
    }
    Err(KrcError::NonConvergence {
        residual: change,
        iterations: config.max_iter,
    })
}

fn pooled_terms(dataset: &ComparisonDataset) -> Vec<PairTerm> {
    dataset
        .pairs()
        .iter()
        .map(|p| PairTerm {
            i: p.i,
            j: p.j,
            total: p.len() as f64,
            j_wins: p.j_wins() as f64,
        })
        .collect()
}

/// Each pair with mass at `t` enters with weight 1 and its kernel-weighted
/// win fraction.
fn fraction_terms(fractions: &[(usize, usize, f64)]) -> Vec<PairTerm> {
    fractions
        .iter()
        .map(|&(i, j, f)| PairTerm {
            i,
            j,
            total: 1.0,
            j_wins: f,
        })
        .collect()
}

/// Edge `i -> j` whenever `j` has a positive share against `i`.
fn terms_connected(n: usize, terms: &[PairTerm]) -> bool {
    let mut adjacency = vec![Vec::new(); n];
    for t in terms {
        if t.j_wins > 0.0 {
            adjacency[t.i].push(t.j);
        }
        if t.total - t.j_wins > 0.0 {
            adjacency[t.j].push(t.i);
        }
    }
    connectivity_from_adjacency(&adjacency).strongly_connected
}

fn check_start(n: usize, start: &[f64]) -> Result<()> {
    if start.len() != n {
        return Err(KrcError::DimensionMismatch {
            expected: n,
            got: start.len(),
        });
    }
    for (item, &value) in start.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(KrcError::NonPositiveScore { item, value });
        }
    }
    Ok(())
}

/// Bradley-Terry log-likelihood of the pooled data.
pub fn bt_log_likelihood(dataset: &ComparisonDataset, pi: &[f64]) -> f64 {
    log_likelihood(&pooled_terms(dataset), pi)
}

/// `Σ_{pairs} f_ij log(π_j/(π_i+π_j)) + (1 − f_ij) log(π_i/(π_i+π_j))`
/// with `f_ij` the kernel-weighted fraction of `j` wins.
pub fn weighted_log_likelihood(
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
    pi: &[f64],
) -> Result<f64> {
    check_bandwidth(h)?;
    match kernel_fractions(dataset, t, h, kernel) {
        Ok(f) => Ok(log_likelihood(&fraction_terms(&f), pi)),
        Err(KrcError::ZeroKernelMass { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

pub fn bt_mle_mm(dataset: &ComparisonDataset, config: &MMConfig) -> Result<MmFit> {
    bt_mle_mm_from(dataset, config, &vec![1.0; dataset.n()])
}

pub fn bt_mle_mm_from(dataset: &ComparisonDataset, config: &MMConfig, start: &[f64]) -> Result<MmFit> {
    let n = dataset.n();
    if n < 2 {
        return Err(KrcError::TooFewItems(n));
    }
    if dataset.is_empty() {
        return Err(KrcError::EmptyDataset);
    }
    check_start(n, start)?;
    if !pooled_connectivity(dataset).strongly_connected {
        return Err(KrcError::Disconnected);
    }
    mm_solve(n, &pooled_terms(dataset), start, config)
}

/// Maximizer of the kernel-weighted Bradley-Terry likelihood at `t`.
pub fn wmle(
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
    config: &MMConfig,
) -> Result<MmFit> {
    wmle_from(dataset, t, h, kernel, config, &vec![1.0; dataset.n()])
}

pub fn wmle_from(
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
    config: &MMConfig,
    start: &[f64],
) -> Result<MmFit> {
    let n = dataset.n();
    if n < 2 {
        return Err(KrcError::TooFewItems(n));
    }
    check_start(n, start)?;
    let fractions = kernel_fractions(dataset, t, h, kernel)?;
    let fit = mm_from_fractions(n, &fractions, config, start)?;
    Ok(MmFit {
        scores: fit.scores.at(t),
        ..fit
    })
}

/// WMLE from precomputed kernel-weighted fractions `(i, j, f_ij)`, as
/// returned by [`kernel_fractions`].
pub fn mm_from_fractions(
    n: usize,
    fractions: &[(usize, usize, f64)],
    config: &MMConfig,
    start: &[f64],
) -> Result<MmFit> {
    check_fractions(n, fractions)?;
    check_start(n, start)?;
    if fractions.is_empty() {
        return Err(KrcError::EmptyDataset);
    }
    let terms = fraction_terms(fractions);
    if !terms_connected(n, &terms) {
        return Err(KrcError::Disconnected);
    }
    mm_solve(n, &terms, start, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ComparisonRecord;
    use crate::spectral::{build_transition, SolverConfig};

    fn three_to_one() -> ComparisonDataset {
        // item 1 wins 3 of 4
        let records = [1u8, 1, 0, 1]
            .iter()
            .enumerate()
            .map(|(k, &y)| ComparisonRecord::new(0, 1, k as f64 * 0.25, y).unwrap())
            .collect();
        ComparisonDataset::from_records(2, records).unwrap()
    }

    fn exact() -> SolverConfig {
        SolverConfig {
            tol: 1e-14,
            max_iter: 100_000,
        }
    }

    #[test]
    fn static_rc_two_items() {
        let data = three_to_one();
        let p = static_transition(&data).unwrap();
        assert!((p.get(0, 1) - 3.0 / 8.0).abs() < 1e-15);
        assert!((p.get(0, 0) - 5.0 / 8.0).abs() < 1e-15);
        let pi = static_rank_centrality(&data, 0.0, &exact()).unwrap();
        assert!((pi.get(0) - 0.25).abs() < 1e-12);
        assert!((pi.get(1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn static_rc_balanced_is_uniform() {
        let mut records = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                records.push(ComparisonRecord::new(i, j, 0.1, 0).unwrap());
                records.push(ComparisonRecord::new(i, j, 0.2, 1).unwrap());
            }
        }
        let data = ComparisonDataset::from_records(4, records).unwrap();
        let pi = static_rank_centrality(&data, 0.0, &exact()).unwrap();
        assert!(pi.scores().iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn static_rc_matches_wide_boxcar() {
        let data = three_to_one();
        let a = static_transition(&data).unwrap();
        let b = build_transition(&data, 0.5, 10.0, &Kernel::boxcar()).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-15);
    }

    #[test]
    fn static_rc_disconnected_needs_sigma() {
        let records = vec![
            ComparisonRecord::win(0, 1, 0.1).unwrap(),
            ComparisonRecord::win(0, 1, 0.2).unwrap(),
        ];
        let data = ComparisonDataset::from_records(2, records).unwrap();
        assert_eq!(static_rank_centrality(&data, 0.0, &exact()), Err(KrcError::Disconnected));
        assert!(static_rank_centrality(&data, 0.5, &exact()).is_ok());
    }

    #[test]
    fn elo_first_game() {
        let cfg = EloConfig::default();
        assert_eq!(cfg.expected(1500.0, 1500.0), 0.5);
        assert!((cfg.expected(1900.0, 1500.0) - 10.0 / 11.0).abs() < 1e-15);
        let data =
            ComparisonDataset::from_records(2, vec![ComparisonRecord::win(1, 0, 1.0).unwrap()]).unwrap();
        let table = elo_fit(&data, &cfg).unwrap();
        assert_eq!(table.final_ratings(), vec![1490.0, 1510.0]);
        assert_eq!(table.rating_before(1, 1.0), 1500.0);
        assert_eq!(table.rating_before(1, 1.0 + 1e-9), 1510.0);
        assert_eq!(table.rows().len(), 2);
    }

    #[test]
    fn elo_reversal_negates_deltas() {
        let games = [(0, 1, 0.1), (2, 1, 0.2), (0, 2, 0.3), (1, 0, 0.4)];
        let fwd: Vec<_> = games.iter().map(|&(w, l, t)| ComparisonRecord::win(w, l, t).unwrap()).collect();
        let rev: Vec<_> = games.iter().map(|&(w, l, t)| ComparisonRecord::win(l, w, t).unwrap()).collect();
        let cfg = EloConfig::default();
        let a = elo_fit(&ComparisonDataset::from_records(3, fwd).unwrap(), &cfg).unwrap();
        let b = elo_fit(&ComparisonDataset::from_records(3, rev).unwrap(), &cfg).unwrap();
        for (x, y) in a.final_ratings().iter().zip(b.final_ratings()) {
            assert!(((x - 1500.0) + (y - 1500.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn elo_rejects_bad_config() {
        let data = three_to_one();
        let cfg = EloConfig {
            k_factor: 0.0,
            ..EloConfig::default()
        };
        assert!(matches!(elo_fit(&data, &cfg), Err(KrcError::InvalidConfig(_))));
    }

    #[test]
    fn mm_two_items_closed_form() {
        let fit = bt_mle_mm(&three_to_one(), &MMConfig::default()).unwrap();
        assert!((fit.scores.get(0) - 0.25).abs() < 1e-9);
        assert!((fit.scores.get(1) - 0.75).abs() < 1e-9);
        let expected = 3.0 * libm::log(0.75) + libm::log(0.25);
        assert!((fit.log_likelihood - expected).abs() < 1e-9);
    }

    #[test]
    fn mm_disconnected() {
        let records = vec![ComparisonRecord::win(0, 1, 0.1).unwrap()];
        let data = ComparisonDataset::from_records(2, records).unwrap();
        assert_eq!(bt_mle_mm(&data, &MMConfig::default()), Err(KrcError::Disconnected));
    }

    #[test]
    fn wmle_constant_data_large_h_matches_mle() {
        // at huge h the weighted fractions are the pooled ones, and equal pair
        // counts make unit pair weights equivalent to count weights
        let mut records = Vec::new();
        for (i, j, jw) in [(0, 1, 3), (0, 2, 1), (1, 2, 2)] {
            for k in 0..4 {
                let t = 0.2 + 0.2 * k as f64;
                records.push(ComparisonRecord::new(i, j, t, u8::from(k < jw)).unwrap());
            }
        }
        let data = ComparisonDataset::from_records(3, records).unwrap();
        let mle = bt_mle_mm(&data, &MMConfig::default()).unwrap();
        let w = wmle(&data, 0.5, 1e6, &Kernel::gaussian(), &MMConfig::default()).unwrap();
        assert!(mle.scores.max_abs_diff(&w.scores) < 1e-6);
    }

    #[test]
    fn wmle_zero_mass() {
        let data = three_to_one();
        let err = wmle(&data, 5.0, 0.1, &Kernel::boxcar(), &MMConfig::default());
        assert!(matches!(err, Err(KrcError::ZeroKernelMass { .. })));
    }
}
