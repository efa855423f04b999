//! Streaming updates of the scores at a fixed evaluation time.
//!
//! At a fixed `t` every past comparison keeps its kernel weight, so each
//! pair's transition probability is a ratio of two running sums. A new
//! comparison between `i` and `j` changes exactly rows `i` and `j` of the
//! chain, and two rank-one updates bring the stationary vector and the group
//! inverse up to date.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::data::{ComparisonDataset, ComparisonRecord};
use crate::error::{KrcError, Result};
use crate::group_inverse::{group_inverse, rank_one_update, GroupInverse};
use crate::kernel::{check_bandwidth, Kernel};
use crate::spectral::{
    default_sigma, regularize, stationary, transition_from_fractions, ScoreVector, SolverConfig,
    TransitionMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineConfig {
    /// Full recomputation after this many applied updates (0 disables).
    pub refresh_every: usize,
    /// Solver used by refreshes.
    pub solver: SolverConfig,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            refresh_every: 500,
            solver: SolverConfig {
                tol: 1e-13,
                max_iter: 100_000,
            },
        }
    }
}

/// Running `(Σ y K_h, Σ K_h)` for one unordered pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct PairSums {
    num: f64,
    den: f64,
}

impl PairSums {
    /// Fraction of the weight on `j` being preferred, if any weight.
    fn fraction(&self) -> Option<f64> {
        (self.den > 0.0).then(|| self.num / self.den)
    }
}

/// What an observation did to the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    /// Kernel weight at `t` was zero.
    Ignored,
    Updated,
    /// Updated, then recomputed from scratch (scheduled or forced).
    Refreshed,
}

/// Scores, chain and group inverse anchored at one evaluation time.
#[derive(Debug, Clone)]
pub struct OnlineState {
    t: f64,
    h: f64,
    kernel: Kernel,
    sigma: f64,
    config: OnlineConfig,
    n: usize,
    // upper triangle, index i * n + j for i < j
    sums: Vec<PairSums>,
    p: TransitionMatrix,
    pi: ScoreVector,
    ainv: GroupInverse,
    updates_since_refresh: usize,
    forced_refreshes: usize,
}

impl OnlineState {
    /// State with no comparisons yet: every row keeps its mass except for
    /// teleportation, so `sigma` must be positive.
    pub fn empty(n: usize, t: f64, h: f64, kernel: Kernel, sigma: f64, config: OnlineConfig) -> Result<Self> {
        Self::with_sums(n, vec![PairSums::default(); n * n], t, h, kernel, sigma, config)
    }

    /// State built from every comparison in `dataset` (Algorithm-1 batch view).
    pub fn from_dataset(
        dataset: &ComparisonDataset,
        t: f64,
        h: f64,
        kernel: Kernel,
        sigma: f64,
        config: OnlineConfig,
    ) -> Result<Self> {
        check_bandwidth(h)?;
        let n = dataset.n();
        let mut sums = vec![PairSums::default(); n * n];
        for pair in dataset.pairs() {
            let (num, den) = pair.kernel_sums(&kernel, t, h);
            sums[pair.i * n + pair.j] = PairSums { num, den };
        }
        Self::with_sums(n, sums, t, h, kernel, sigma, config)
    }

    fn with_sums(
        n: usize,
        sums: Vec<PairSums>,
        t: f64,
        h: f64,
        kernel: Kernel,
        sigma: f64,
        config: OnlineConfig,
    ) -> Result<Self> {
        if n < 2 {
            return Err(KrcError::TooFewItems(n));
        }
        check_bandwidth(h)?;
        if !(0.0..1.0).contains(&sigma) {
            return Err(KrcError::InvalidRegularization(sigma));
        }
        let p = chain_from_sums(n, &sums, sigma)?;
        let pi = stationary(&p, &config.solver)?.at(t);
        let ainv = group_inverse(&p, &pi)?;
        Ok(Self {
            t,
            h,
            kernel,
            sigma,
            config,
            n,
            sums,
            p,
            pi,
            ainv,
            updates_since_refresh: 0,
            forced_refreshes: 0,
        })
    }

    /// Same as [`OnlineState::from_dataset`] with `σ = 1/n` and default config.
    pub fn with_defaults(dataset: &ComparisonDataset, t: f64, h: f64, kernel: Kernel) -> Result<Self> {
        Self::from_dataset(dataset, t, h, kernel, default_sigma(dataset.n()), OnlineConfig::default())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scores(&self) -> &ScoreVector {
        &self.pi
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.p
    }

    pub fn group_inverse(&self) -> &GroupInverse {
        &self.ainv
    }

    pub fn updates_since_refresh(&self) -> usize {
        self.updates_since_refresh
    }

    /// Refreshes triggered by an ill-conditioned update.
    pub fn forced_refreshes(&self) -> usize {
        self.forced_refreshes
    }

    /// Folds one comparison into the state.
    pub fn apply_observation(&mut self, record: &ComparisonRecord) -> Result<UpdateOutcome> {
        let (i, j) = (record.item_i(), record.item_j());
        if j >= self.n {
            return Err(KrcError::UnknownItem { item: j, n: self.n });
        }
        let w = self.kernel.density((self.t - record.time()) / self.h);
        if !w.is_finite() {
            return Err(KrcError::NonFiniteTime(record.time()));
        }
        if w == 0.0 {
            return Ok(UpdateOutcome::Ignored);
        }

        let scale = (1.0 - self.sigma) / self.n as f64;
        let old = self.sums[i * self.n + j];
        let mut new = old;
        new.den += w;
        if record.j_preferred() {
            new.num += w;
        }
        self.sums[i * self.n + j] = new;

        // Chain entries exactly as a batch build computes them.
        let floor = self.sigma / self.n as f64;
        let old_ij = old.fraction().map_or(0.0, |f| f * scale);
        let old_ji = old.fraction().map_or(0.0, |f| (1.0 - f) * scale);
        let frac = new.fraction().expect("positive weight was added");
        let new_ij = frac * scale;
        let new_ji = (1.0 - frac) * scale;

        // Row i: entry j moves by new_ij − old_ij, the diagonal compensates.
        let mut delta_i = vec![0.0; self.n];
        delta_i[j] = old_ij - new_ij;
        delta_i[i] = -(old_ij - new_ij);
        // Row j. For a pair that was already observed this is the negation
        // of row i in (self, partner) coordinates; a first observation moves
        // P_ij + P_ji from 0 to (1 - σ)/n instead.
        let mut delta_j = vec![0.0; self.n];
        delta_j[i] = old_ji - new_ji;
        delta_j[j] = -(old_ji - new_ji);
        if old.den > 0.0 {
            assert!((delta_j[i] + delta_i[j]).abs() <= 1e-14);
        }

        {
            let m = self.p_matrix_mut();
            m[(i, j)] = new_ij + floor;
            m[(j, i)] = new_ji + floor;
        }
        self.fix_diagonal(i);
        self.fix_diagonal(j);

        let first = rank_one_update(&self.pi, &self.ainv, &delta_i, i).and_then(|(pi, g)| {
            rank_one_update(&pi, &g, &delta_j, j)
        });
        match first {
            Ok((pi, g)) => {
                self.pi = pi;
                self.ainv = g;
                self.updates_since_refresh += 1;
                if self.config.refresh_every > 0 && self.updates_since_refresh >= self.config.refresh_every {
                    self.refresh()?;
                    Ok(UpdateOutcome::Refreshed)
                } else {
                    Ok(UpdateOutcome::Updated)
                }
            }
            Err(KrcError::SingularUpdate(_)) => {
                self.forced_refreshes += 1;
                self.refresh()?;
                Ok(UpdateOutcome::Refreshed)
            }
            Err(e) => Err(e),
        }
    }

    /// Applies records in order.
    pub fn apply_all<'a>(&mut self, records: impl IntoIterator<Item = &'a ComparisonRecord>) -> Result<()> {
        for r in records {
            self.apply_observation(r)?;
        }
        Ok(())
    }

    /// Recomputes chain, scores and group inverse from the running sums.
    pub fn refresh(&mut self) -> Result<()> {
        let p = chain_from_sums(self.n, &self.sums, self.sigma)?;
        let pi = stationary(&p, &self.config.solver)?.at(self.t);
        let ainv = group_inverse(&p, &pi)?;
        self.p = p;
        self.pi = pi;
        self.ainv = ainv;
        self.updates_since_refresh = 0;
        Ok(())
    }

    fn p_matrix_mut(&mut self) -> &mut DMatrix<f64> {
        self.p.matrix_mut()
    }

    fn fix_diagonal(&mut self, row: usize) {
        let n = self.n;
        let m = self.p.matrix_mut();
        let off: f64 = (0..n).filter(|&s| s != row).map(|s| m[(row, s)]).sum();
        m[(row, row)] = (1.0 - off).max(0.0);
    }
}

/// Regularized chain from running sums; mirrors the batch construction.
fn chain_from_sums(n: usize, sums: &[PairSums], sigma: f64) -> Result<TransitionMatrix> {
    let fractions = (0..n).flat_map(|i| {
        (i + 1..n).filter_map(move |j| sums[i * n + j].fraction().map(|f| (i, j, f)))
    });
    regularize(&transition_from_fractions(n, fractions)?, sigma)
}
