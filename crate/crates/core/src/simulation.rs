//! Synthetic dynamic Bradley-Terry data with known skill curves.
//!
//! Skills are `π_i(t) = α_i + a sin(f α_i t)`; the standard design draws
//! `α_i ~ U(1, 3)` with `a = 1`, `f = 5`. Every unordered pair gets `M`
//! comparisons at uniform times on `[0, 1]`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{ComparisonDataset, ComparisonRecord};
use crate::error::{KrcError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub enum SkillFamily {
    /// `α_i ~ U(1, 3)`, `π_i(t) = α_i + sin(5 α_i t)`.
    #[default]
    PaperSine,
    /// `α_i ~ U(1, 3)`, `π_i(t) = α_i`.
    Constant,
    /// Given `α`, `π_i(t) = α_i + amplitude · sin(frequency · α_i t)`.
    Custom {
        alpha: Vec<f64>,
        amplitude: f64,
        frequency: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Comparisons per pair.
    pub m: usize,
    pub seed: u64,
    pub skill: SkillFamily,
}

impl SimConfig {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            seed,
            skill: SkillFamily::PaperSine,
        }
    }

    pub fn with_skill(mut self, skill: SkillFamily) -> Self {
        self.skill = skill;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub alpha: Vec<f64>,
    pub amplitude: f64,
    pub frequency: f64,
}

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn skill_of(&self, i: usize, t: f64) -> f64 {
        let a = self.alpha[i];
        if self.amplitude == 0.0 {
            a
        } else {
            a + self.amplitude * libm::sin(self.frequency * a * t)
        }
    }

    pub fn skill(&self, t: f64) -> Vec<f64> {
        (0..self.n()).map(|i| self.skill_of(i, t)).collect()
    }

    /// `skill(t) / Σ skill(t)`.
    pub fn normalized_skill(&self, t: f64) -> Vec<f64> {
        let mut s = self.skill(t);
        let total: f64 = s.iter().sum();
        s.iter_mut().for_each(|x| *x /= total);
        s
    }

    /// Smallest value `skill_of(i, ·)` can take.
    pub fn skill_lower_bound(&self, i: usize) -> f64 {
        self.alpha[i] - self.amplitude.abs()
    }
}

/// `y*_ij(t) = π_j(t) / (π_i(t) + π_j(t))`, the chance that `j` beats `i`.
pub fn truth_probability(truth: &GroundTruth, i: usize, j: usize, t: f64) -> Result<f64> {
    let n = truth.n();
    for item in [i, j] {
        if item >= n {
            return Err(KrcError::UnknownItem { item, n });
        }
    }
    let pi = truth.skill_of(i, t);
    let pj = truth.skill_of(j, t);
    for (item, value) in [(i, pi), (j, pj)] {
        if !(value > 0.0) {
            return Err(KrcError::NonPositiveScore { item, value });
        }
    }
    Ok(pj / (pi + pj))
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent seed for sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix(mix(seed) ^ mix(stream.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Seed of the stream for pair `(i, j)`; independent of generation order.
pub fn pair_seed(seed: u64, i: usize, j: usize) -> u64 {
    mix(mix(mix(seed) ^ i as u64) ^ (j as u64).rotate_left(32))
}

/// Draws the ground truth for `config`.
pub fn draw_truth(config: &SimConfig) -> Result<GroundTruth> {
    if config.n < 2 {
        return Err(KrcError::TooFewItems(config.n));
    }
    if config.m == 0 {
        return Err(KrcError::InvalidConfig("M must be at least 1".into()));
    }
    let uniform_alpha = || {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed));
        (0..config.n)
            .map(|_| loop {
                let a: f64 = rng.random_range(1.0..3.0);
                if a > 1.0 {
                    break a;
                }
            })
            .collect::<Vec<_>>()
    };
    let truth = match &config.skill {
        SkillFamily::PaperSine => GroundTruth {
            alpha: uniform_alpha(),
            amplitude: 1.0,
            frequency: 5.0,
        },
        SkillFamily::Constant => GroundTruth {
            alpha: uniform_alpha(),
            amplitude: 0.0,
            frequency: 0.0,
        },
        SkillFamily::Custom {
            alpha,
            amplitude,
            frequency,
        } => {
            if alpha.len() != config.n {
                return Err(KrcError::DimensionMismatch {
                    expected: config.n,
                    got: alpha.len(),
                });
            }
            GroundTruth {
                alpha: alpha.clone(),
                amplitude: *amplitude,
                frequency: *frequency,
            }
        }
    };
    for i in 0..truth.n() {
        let low = truth.skill_lower_bound(i);
        if !(low > 0.0) || !low.is_finite() {
            return Err(KrcError::NonPositiveScore { item: i, value: low });
        }
    }
    Ok(truth)
}

/// The `M` comparisons of pair `(i, j)`, `i < j`, from its own stream.
pub fn pair_records(truth: &GroundTruth, seed: u64, i: usize, j: usize, m: usize) -> Vec<ComparisonRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(seed, i, j));
    (0..m)
        .map(|_| {
            let t: f64 = rng.random();
            let pi = truth.skill_of(i, t);
            let pj = truth.skill_of(j, t);
            let j_wins = rng.random::<f64>() < pj / (pi + pj);
            ComparisonRecord::from_bool(i, j, t, j_wins).expect("i < j and t in [0, 1)")
        })
        .collect()
}

pub fn generate(config: &SimConfig) -> Result<(ComparisonDataset, GroundTruth)> {
    let truth = draw_truth(config)?;
    let n = config.n;
    let mut records = Vec::with_capacity(n * (n - 1) / 2 * config.m);
    for i in 0..n {
        for j in i + 1..n {
            records.extend(pair_records(&truth, config.seed, i, j, config.m));
        }
    }
    Ok((ComparisonDataset::from_records(n, records)?, truth))
}
