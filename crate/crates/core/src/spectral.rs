//! Kernel-weighted comparison chains and their stationary distributions.
//!
//! The off-diagonal entry `(i, j)` of the chain at time `t` is `1/n` times the
//! kernel-weighted fraction of `(i, j)` comparisons that `j` won; the diagonal
//! absorbs the rest of the row. The stationary distribution of this chain is
//! the score vector.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Schur};

use crate::data::ComparisonDataset;
use crate::error::{KrcError, Result};
use crate::kernel::{check_bandwidth, Kernel};

/// Rounding slack for row sums and diagonal clamping.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Row-stochastic `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    matrix: DMatrix<f64>,
    sigma: f64,
}

impl TransitionMatrix {
    /// Wraps `matrix` after checking nonnegativity and unit row sums.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(KrcError::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(KrcError::InvalidConfig(
                "transition entries must be finite and nonnegative".into(),
            ));
        }
        let t = Self { matrix, sigma: 0.0 };
        let err = t.row_sum_error();
        if err > 1e-10 {
            return Err(KrcError::InvalidConfig(alloc::format!(
                "rows do not sum to one (max deviation {err:e})"
            )));
        }
        Ok(t)
    }

    pub(crate) fn from_parts(matrix: DMatrix<f64>, sigma: f64) -> Self {
        Self { matrix, sigma }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Teleportation probability applied so far (0 if none).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `max_i |Σ_j P_ij - 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|row| (row.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `I - P`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n(), self.n()) - &self.matrix
    }
}

/// Probability vector over items, optionally tagged with its evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
    t: Option<f64>,
}

impl ScoreVector {
    /// Normalizes `scores` onto the simplex. All entries must be positive.
    pub fn from_weights(scores: Vec<f64>) -> Result<Self> {
        for (item, &value) in scores.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(KrcError::NonPositiveScore { item, value });
            }
        }
        let total: f64 = scores.iter().sum();
        Ok(Self {
            scores: scores.into_iter().map(|s| s / total).collect(),
            t: None,
        })
    }

    pub(crate) fn from_raw(scores: Vec<f64>) -> Self {
        Self { scores, t: None }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            scores: vec![1.0 / n as f64; n],
            t: None,
        }
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn t(&self) -> Option<f64> {
        self.t
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.scores[i]
    }

    /// Items ordered from highest to lowest score; ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }

    /// `‖πᵀ P − πᵀ‖∞`.
    pub fn residual(&self, p: &TransitionMatrix) -> f64 {
        let pi = DVector::from_column_slice(&self.scores);
        let next = p.matrix().tr_mul(&pi);
        (next - pi).amax()
    }

    /// `max_i |a_i - b_i|`.
    pub fn max_abs_diff(&self, other: &ScoreVector) -> f64 {
        self.scores
            .iter()
            .zip(&other.scores)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Power-iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target `‖πᵀP − πᵀ‖∞`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Default teleportation probability, `1/n` (so each entry gains `1/n²`).
pub fn default_sigma(n: usize) -> f64 {
    1.0 / n as f64
}

/// Fills the diagonal with `1 - Σ_{s≠i} P_is`.
fn complete_diagonal(matrix: &mut DMatrix<f64>) -> Result<()> {
    let n = matrix.nrows();
    for i in 0..n {
        let off: f64 = (0..n).filter(|&s| s != i).map(|s| matrix[(i, s)]).sum();
        let diag = 1.0 - off;
        if diag < -STOCHASTIC_TOL {
            return Err(KrcError::NegativeDiagonal { row: i, value: diag });
        }
        matrix[(i, i)] = diag.max(0.0);
    }
    Ok(())
}

/// Chain built from per-pair `j`-preferred fractions `(i, j, f_ij)`.
pub(crate) fn transition_from_fractions(
    n: usize,
    fractions: impl IntoIterator<Item = (usize, usize, f64)>,
) -> Result<TransitionMatrix> {
    let scale = 1.0 / n as f64;
    let mut m = DMatrix::zeros(n, n);
    for (i, j, frac) in fractions {
        m[(i, j)] = frac * scale;
        m[(j, i)] = (1.0 - frac) * scale;
    }
    complete_diagonal(&mut m)?;
    Ok(TransitionMatrix::from_parts(m, 0.0))
}

/// Kernel-weighted `j`-preferred fraction `(i, j, f_ij)` of every pair with
/// kernel mass at `t`. Both estimators start from these.
pub fn kernel_fractions(
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
) -> Result<Vec<(usize, usize, f64)>> {
    check_bandwidth(h)?;
    let fractions: Vec<_> = dataset
        .pairs()
        .iter()
        .filter_map(|pair| {
            let (num, den) = pair.kernel_sums(kernel, t, h);
            (den > 0.0).then(|| (pair.i, pair.j, num / den))
        })
        .collect();
    if fractions.is_empty() {
        return Err(KrcError::ZeroKernelMass { t, h });
    }
    Ok(fractions)
}

/// Unregularized chain from per-pair fractions `(i, j, f_ij)`, `i < j < n`.
pub fn transition_from_pair_fractions(n: usize, fractions: &[(usize, usize, f64)]) -> Result<TransitionMatrix> {
    check_fractions(n, fractions)?;
    transition_from_fractions(n, fractions.iter().copied())
}

pub(crate) fn check_fractions(n: usize, fractions: &[(usize, usize, f64)]) -> Result<()> {
    if n < 2 {
        return Err(KrcError::TooFewItems(n));
    }
    for &(i, j, f) in fractions {
        if j >= n {
            return Err(KrcError::UnknownItem { item: j, n });
        }
        if i >= j {
            return Err(KrcError::InvalidConfig("pairs must satisfy i < j".into()));
        }
        if !(0.0..=1.0).contains(&f) {
            return Err(KrcError::InvalidConfig(alloc::format!("fraction {f} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Kernel-weighted comparison chain at time `t`. Pairs without kernel mass
/// at `t` are treated as unobserved.
pub fn build_transition(
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
) -> Result<TransitionMatrix> {
    let n = dataset.n();
    if n < 2 {
        return Err(KrcError::TooFewItems(n));
    }
    transition_from_fractions(n, kernel_fractions(dataset, t, h, kernel)?)
}

/// Reversible chain whose stationary distribution is `pi`:
/// `P*_ij = (1/n) π_j / (π_i + π_j)`.
pub fn build_ideal_transition(pi: &[f64]) -> Result<TransitionMatrix> {
    let n = pi.len();
    if n < 2 {
        return Err(KrcError::TooFewItems(n));
    }
    for (item, &value) in pi.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(KrcError::NonPositiveScore { item, value });
        }
    }
    let fractions =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, pi[j] / (pi[i] + pi[j]))));
    transition_from_fractions(n, fractions)
}

/// `(1 - σ) P + σ/n`.
pub fn regularize(p: &TransitionMatrix, sigma: f64) -> Result<TransitionMatrix> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(KrcError::InvalidRegularization(sigma));
    }
    if sigma == 0.0 {
        return Ok(p.clone());
    }
    let floor = sigma / p.n() as f64;
    let m = p.matrix().map(|x| (1.0 - sigma) * x + floor);
    let combined = 1.0 - (1.0 - p.sigma()) * (1.0 - sigma);
    Ok(TransitionMatrix::from_parts(m, combined))
}

/// Stationary distribution by power iteration, with a direct solve when the
/// iteration stalls or runs out of budget.
pub fn stationary(p: &TransitionMatrix, config: &SolverConfig) -> Result<ScoreVector> {
    const STALL_WINDOW: usize = 1000;
    let n = p.n();
    let pt = p.matrix().transpose();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    let mut next = DVector::zeros(n);
    let mut checkpoint = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < config.max_iter {
        pt.mul_to(&pi, &mut next);
        residual = (&next - &pi).amax();
        if residual <= config.tol {
            return Ok(ScoreVector::from_raw(normalized(pi.as_slice())));
        }
        iterations += 1;
        let total = next.sum();
        core::mem::swap(&mut pi, &mut next);
        pi /= total;
        if iterations % STALL_WINDOW == 0 {
            if residual > 0.5 * checkpoint {
                break;
            }
            checkpoint = residual;
        }
    }

    match direct_stationary(p) {
        Some(direct) => {
            let candidate = ScoreVector::from_raw(direct);
            let r = candidate.residual(p);
            if r <= config.tol {
                Ok(candidate)
            } else {
                Err(KrcError::NonConvergence {
                    residual: residual.min(r),
                    iterations,
                })
            }
        }
        None => Err(KrcError::NonConvergence {
            residual,
            iterations,
        }),
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

/// Solves `(I - P)ᵀ π = 0` with the last equation replaced by `Σ π = 1`.
pub fn direct_stationary(p: &TransitionMatrix) -> Option<Vec<f64>> {
    let n = p.n();
    let mut system = p.laplacian().transpose();
    for c in 0..n {
        system[(n - 1, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let solution = system.lu().solve(&rhs)?;
    if solution.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return None;
    }
    Some(normalized(
        &solution.iter().map(|x| x.max(0.0)).collect::<Vec<_>>(),
    ))
}

/// Full estimator at one time point: build, regularize, solve.
pub fn kernel_rank_centrality(
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
    sigma: f64,
    config: &SolverConfig,
) -> Result<ScoreVector> {
    let p = regularize(&build_transition(dataset, t, h, kernel)?, sigma)?;
    Ok(stationary(&p, config)?.at(t))
}

/// Scores at every grid point, each computed independently.
pub fn estimate_curve(
    dataset: &ComparisonDataset,
    time_grid: &[f64],
    h: f64,
    kernel: &Kernel,
    sigma: f64,
    config: &SolverConfig,
) -> Result<Vec<ScoreVector>> {
    if time_grid.is_empty() {
        return Err(KrcError::GridMismatch("empty time grid".into()));
    }
    time_grid
        .iter()
        .map(|&t| kernel_rank_centrality(dataset, t, h, kernel, sigma, config))
        .collect()
}

/// `1 - λ`, with `λ` the largest eigenvalue modulus after removing the unit
/// eigenvalue.
pub fn spectral_gap(p: &TransitionMatrix) -> Result<f64> {
    let n = p.n();
    if n < 2 {
        return Ok(1.0);
    }
    let schur = Schur::try_new(p.matrix().clone(), 1e-15, 100_000).ok_or(KrcError::EigenFailure)?;
    let eig = schur.complex_eigenvalues();
    let unit = eig
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = libm::hypot(a.1.re - 1.0, a.1.im);
            let db = libm::hypot(b.1.re - 1.0, b.1.im);
            da.total_cmp(&db)
        })
        .map(|(k, _)| k)
        .ok_or(KrcError::EigenFailure)?;
    let lambda = eig
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != unit)
        .map(|(_, z)| libm::hypot(z.re, z.im))
        .fold(0.0, f64::max);
    Ok(1.0 - lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ComparisonRecord;
    use nalgebra::dmatrix;

    fn two_state(a: f64, b: f64) -> TransitionMatrix {
        TransitionMatrix::new(dmatrix![1.0 - a, a; b, 1.0 - b]).unwrap()
    }

    #[test]
    fn balanced_pair_quarter() {
        let recs = vec![
            ComparisonRecord::new(0, 1, 0.4, 1).unwrap(),
            ComparisonRecord::new(0, 1, 0.6, 0).unwrap(),
        ];
        let d = ComparisonDataset::from_records(2, recs).unwrap();
        let p = build_transition(&d, 0.5, 0.1, &Kernel::gaussian()).unwrap();
        assert!((p.get(0, 1) - 0.25).abs() < 1e-15);
        assert!((p.get(0, 0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn weighted_three_points() {
        let (t, h) = (0.5, 0.1);
        let recs = vec![
            ComparisonRecord::new(0, 1, t - h, 1).unwrap(),
            ComparisonRecord::new(0, 1, t, 1).unwrap(),
            ComparisonRecord::new(0, 1, t + h, 0).unwrap(),
        ];
        let d = ComparisonDataset::from_records(3, recs).unwrap();
        let p = build_transition(&d, t, h, &Kernel::gaussian()).unwrap();
        // K(1) = exp(-1/2)/sqrt(2π), K(0) = 1/sqrt(2π)
        let k1 = 0.241_970_724_519_143_37;
        let k0 = 0.398_942_280_401_432_7;
        let mean = (k1 + k0) / (2.0 * k1 + k0);
        assert!((p.get(0, 1) - mean / 3.0).abs() < 1e-15);
        assert!((p.get(1, 0) - (1.0 - mean) / 3.0).abs() < 1e-15);
        assert_eq!(p.get(0, 2), 0.0);
        assert!(p.row_sum_error() < 1e-15);
    }

    #[test]
    fn zero_mass_everywhere_errors() {
        let recs = vec![ComparisonRecord::new(0, 1, 0.0, 1).unwrap()];
        let d = ComparisonDataset::from_records(2, recs).unwrap();
        assert!(matches!(
            build_transition(&d, 10.0, 0.1, &Kernel::boxcar()),
            Err(KrcError::ZeroKernelMass { .. })
        ));
        assert!(build_transition(&d, 0.0, -1.0, &Kernel::boxcar()).is_err());
    }

    #[test]
    fn ideal_transition_values() {
        let p = build_ideal_transition(&[0.5, 0.3, 0.2]).unwrap();
        assert!((p.get(0, 1) - 0.125).abs() < 1e-16);
        let lhs = 0.5 * p.get(0, 1);
        let rhs = 0.3 * p.get(1, 0);
        assert!((lhs - 0.0625).abs() < 1e-16 && (rhs - 0.0625).abs() < 1e-16);

        let u = build_ideal_transition(&[0.25; 4]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 - 3.0 / 8.0 } else { 1.0 / 8.0 };
                assert!((u.get(i, j) - expect).abs() < 1e-16);
            }
        }
        assert!(build_ideal_transition(&[0.5, 0.0, 0.5]).is_err());
    }

    #[test]
    fn regularization() {
        let p = two_state(0.0, 1.0);
        assert_eq!(regularize(&p, 0.0).unwrap(), p);
        let r = regularize(&p, 0.1).unwrap();
        assert!(r.matrix().min() >= 0.05 - 1e-16);
        assert!(r.row_sum_error() < 1e-15);
        assert!(regularize(&p, 1.0).is_err());
        assert!(regularize(&p, -0.1).is_err());
        // the paper-style choice: σ = 1/n adds 1/n² to every entry
        let n = 4;
        let u = build_ideal_transition(&[0.25; 4]).unwrap();
        let r = regularize(&u, default_sigma(n)).unwrap();
        let expect = (1.0 - 0.25) * u.get(0, 1) + 1.0 / 16.0;
        assert!((r.get(0, 1) - expect).abs() < 1e-16);
    }

    #[test]
    fn two_state_stationary() {
        let p = two_state(0.1, 0.2);
        let pi = stationary(&p, &SolverConfig::default()).unwrap();
        // π ∝ (P_10, P_01)
        assert!((pi.get(0) - 2.0 / 3.0).abs() < 1e-9);
        assert!((pi.get(1) - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn doubly_stochastic_uniform() {
        let m = dmatrix![0.5, 0.3, 0.2; 0.2, 0.5, 0.3; 0.3, 0.2, 0.5];
        let pi = stationary(&TransitionMatrix::new(m).unwrap(), &SolverConfig::default()).unwrap();
        for &x in pi.scores() {
            assert!((x - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn periodic_chain_falls_back_to_direct() {
        let m = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 0.5, 0.5, 0.0];
        let p = TransitionMatrix::new(m).unwrap();
        let pi = stationary(&p, &SolverConfig { tol: 1e-12, max_iter: 50 }).unwrap();
        assert!(pi.residual(&p) <= 1e-12);
    }

    #[test]
    fn ideal_chain_recovers_scores() {
        let pi = [0.5, 0.3, 0.2];
        let p = build_ideal_transition(&pi).unwrap();
        let est = stationary(&p, &SolverConfig { tol: 1e-14, ..Default::default() }).unwrap();
        for (k, want) in pi.iter().enumerate() {
            assert!((est.get(k) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn gap_of_rank_one_chain() {
        let m = DMatrix::from_element(5, 5, 0.2);
        let gap = spectral_gap(&TransitionMatrix::new(m).unwrap()).unwrap();
        assert!((gap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gap_of_uniform_ideal_chain() {
        let p = build_ideal_transition(&[0.25; 4]).unwrap();
        let gap = spectral_gap(&p).unwrap();
        assert!(gap >= 0.5 - 1e-12, "gap {gap}");
    }

    #[test]
    fn ranking_order() {
        let s = ScoreVector::from_weights(vec![1.0, 3.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.ranking(), vec![1, 3, 2, 0]);
        assert!(ScoreVector::from_weights(vec![1.0, 0.0]).is_err());
    }
}
