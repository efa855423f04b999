//! Simulation experiments and the forecasting backtest.
//!
//! Every replication draws from its own seed derived from the base seed, so
//! results do not depend on the thread schedule. `KRC_THREADS` caps the
//! number of worker threads.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::time::Instant;

use krc_core::baselines::{elo_fit, mm_from_fractions, static_rank_centrality, wmle, EloConfig, MMConfig};
use krc_core::data::season_day_time;
use krc_core::group_inverse::group_inverse;
use krc_core::inference::{
    expansion_diagnostic, precision_factors, score_ci, EffectiveCount, PlugInSource,
};
use krc_core::metrics::{evaluate_metrics, metric_grid};
use krc_core::simulation::{derive_seed, draw_truth, pair_records};
use krc_core::spectral::{
    build_ideal_transition, build_transition, default_sigma, estimate_curve, kernel_fractions,
    kernel_rank_centrality, regularize, stationary, transition_from_pair_fractions,
};
use krc_core::{
    ComparisonDataset, DatasetBuilder, GroundTruth, Kernel, RosterPolicy, ScoreVector,
    SimConfig, SolverConfig, TimeEncoding,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{self, AndersonDarling};

/// Worker threads: `KRC_THREADS` if set and positive, otherwise all cores.
pub fn thread_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("KRC_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(k) if k > 0 => k.min(avail),
        _ => avail,
    }
}

/// `f(0), …, f(count − 1)` on the capped pool, in index order.
pub fn run_indexed<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    let threads = thread_count();
    if threads <= 1 {
        return (0..count).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..count).into_par_iter().map(f).collect()),
        Err(_) => (0..count).map(f).collect(),
    }
}

/// Serial generation for a fixed truth; identical to [`simulate`].
pub fn simulate_with_truth(truth: &GroundTruth, seed: u64, m: usize) -> Result<ComparisonDataset> {
    let n = truth.n();
    let mut records = Vec::with_capacity(n * (n - 1) / 2 * m);
    for i in 0..n {
        for j in i + 1..n {
            records.extend(pair_records(truth, seed, i, j, m));
        }
    }
    Ok(ComparisonDataset::from_records(n, records)?)
}

/// Generates the dataset with pairs spread over the pool.
pub fn simulate(config: &SimConfig) -> Result<(ComparisonDataset, GroundTruth)> {
    let truth = draw_truth(config)?;
    let n = config.n;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let chunks = run_indexed(pairs.len(), |k| {
        let (i, j) = pairs[k];
        pair_records(&truth, config.seed, i, j, config.m)
    });
    let records = chunks.into_iter().flatten().collect();
    Ok((ComparisonDataset::from_records(n, records)?, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Krc,
    Wmle,
    Rc,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Krc => "krc",
            Method::Wmle => "wmle",
            Method::Rc => "rc",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "krc" => Ok(Method::Krc),
            "wmle" => Ok(Method::Wmle),
            "rc" | "static-rc" => Ok(Method::Rc),
            other => Err(Error::Invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Estimator knobs shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    pub kernel: Kernel,
    /// `None` means `1/n`.
    pub sigma: Option<f64>,
    pub solver: SolverConfig,
    pub mm: MMConfig,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            kernel: Kernel::gaussian(),
            sigma: None,
            solver: SolverConfig::default(),
            mm: MMConfig::default(),
        }
    }
}

impl EstimatorSettings {
    pub fn sigma_for(&self, n: usize) -> f64 {
        self.sigma.unwrap_or_else(|| default_sigma(n))
    }
}

/// Scores of `method` at every grid point.
pub fn method_curve(
    method: Method,
    data: &ComparisonDataset,
    grid: &[f64],
    h: f64,
    settings: &EstimatorSettings,
) -> Result<Vec<ScoreVector>> {
    let sigma = settings.sigma_for(data.n());
    Ok(match method {
        Method::Krc => estimate_curve(data, grid, h, &settings.kernel, sigma, &settings.solver)?,
        Method::Wmle => grid
            .iter()
            .map(|&t| wmle(data, t, h, &settings.kernel, &settings.mm).map(|f| f.scores))
            .collect::<std::result::Result<_, _>>()?,
        Method::Rc => {
            let s = static_rank_centrality(data, sigma, &settings.solver)?;
            grid.iter().map(|&t| s.clone().at(t)).collect()
        }
    })
}

/// `(rmse_avg, linf_max)` of one method on one simulated dataset.
pub fn method_error(
    method: Method,
    data: &ComparisonDataset,
    truth: &GroundTruth,
    m: usize,
    h: f64,
    settings: &EstimatorSettings,
) -> Result<(f64, f64)> {
    let grid = metric_grid(m);
    let curve = method_curve(method, data, &grid, h, settings)?;
    let r = evaluate_metrics(&curve, |t| truth.normalized_skill(t), m)?;
    Ok((r.rmse_avg, r.linf_max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub reps: usize,
    pub mean_rmse_avg: f64,
    pub sd_rmse_avg: f64,
    pub mean_linf_max: f64,
}

/// KRC error across `(n, M)` settings at a fixed bandwidth.
pub fn trend_experiment(
    points: &[(usize, usize)],
    h: f64,
    reps: usize,
    seed: u64,
    settings: &EstimatorSettings,
) -> Result<Vec<TrendRow>> {
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..reps).map(move |r| (p, r)))
        .collect();
    let results = run_indexed(tasks.len(), |k| {
        let (p, r) = tasks[k];
        let (n, m) = points[p];
        let cfg = SimConfig::new(n, m, derive_seed(derive_seed(seed, (n as u64) << 32 | m as u64), r as u64));
        let truth = draw_truth(&cfg)?;
        let data = simulate_with_truth(&truth, cfg.seed, m)?;
        method_error(Method::Krc, &data, &truth, m, h, settings)
    });
    let mut rows = Vec::with_capacity(points.len());
    for (p, &(n, m)) in points.iter().enumerate() {
        let mut rmse = Vec::with_capacity(reps);
        let mut linf = Vec::with_capacity(reps);
        for r in 0..reps {
            let (a, b) = results[p * reps + r].as_ref().map_err(clone_err)?;
            rmse.push(*a);
            linf.push(*b);
        }
        rows.push(TrendRow {
            n,
            m,
            h,
            reps,
            mean_rmse_avg: stats::mean(&rmse),
            sd_rmse_avg: stats::std_dev(&rmse),
            mean_linf_max: stats::mean(&linf),
        });
    }
    Ok(rows)
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::Core(k) => Error::Core(k.clone()),
        other => Error::Invalid(other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub reps: usize,
    pub h_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub settings: EstimatorSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub h: f64,
    /// Mean over the replications where every fit succeeded.
    pub mean_rmse_avg: f64,
    pub mean_linf_max: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestBandwidth {
    pub method: Method,
    pub h: f64,
    pub mean_rmse_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub n: usize,
    pub m: usize,
    pub reps: usize,
    pub rows: Vec<SweepRow>,
    /// Per method, the grid bandwidth with the smallest mean RMSE among
    /// bandwidths without failed fits.
    pub best: Vec<BestBandwidth>,
}

impl SweepTable {
    pub fn row(&self, method: Method, h: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.method == method && r.h == h)
    }

    pub fn best(&self, method: Method) -> Option<&BestBandwidth> {
        self.best.iter().find(|b| b.method == method)
    }
}

/// Error of each method at each bandwidth, averaged over replications.
pub fn bandwidth_sweep(config: &SweepConfig) -> Result<SweepTable> {
    if config.h_grid.is_empty() {
        return Err(Error::Invalid("empty bandwidth grid".into()));
    }
    if config.reps == 0 {
        return Err(Error::Invalid("at least one replication is needed".into()));
    }
    let cells: Vec<(Method, f64)> = config
        .methods
        .iter()
        .flat_map(|&m| config.h_grid.iter().map(move |&h| (m, h)))
        .collect();
    let per_rep = run_indexed(config.reps, |r| -> Result<Vec<Option<(f64, f64)>>> {
        let cfg = SimConfig::new(config.n, config.m, derive_seed(config.seed, r as u64));
        let truth = draw_truth(&cfg)?;
        let data = simulate_with_truth(&truth, cfg.seed, config.m)?;
        // static RC ignores h, so fit it once
        let rc = if config.methods.contains(&Method::Rc) {
            method_error(Method::Rc, &data, &truth, config.m, 1.0, &config.settings).ok()
        } else {
            None
        };
        Ok(cells
            .iter()
            .map(|&(method, h)| match method {
                Method::Rc => rc,
                _ => method_error(method, &data, &truth, config.m, h, &config.settings).ok(),
            })
            .collect())
    });
    let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cells.len());
    for (c, &(method, h)) in cells.iter().enumerate() {
        let ok: Vec<(f64, f64)> = per_rep.iter().filter_map(|v| v[c]).collect();
        let failures = config.reps - ok.len();
        let rmse: Vec<f64> = ok.iter().map(|x| x.0).collect();
        let linf: Vec<f64> = ok.iter().map(|x| x.1).collect();
        rows.push(SweepRow {
            method,
            h,
            mean_rmse_avg: if ok.is_empty() { f64::NAN } else { stats::mean(&rmse) },
            mean_linf_max: if ok.is_empty() { f64::NAN } else { stats::mean(&linf) },
            successes: ok.len(),
            failures,
        });
    }
    let mut best = Vec::new();
    for &method in &config.methods {
        let winner = rows
            .iter()
            .filter(|r| r.method == method && r.failures == 0)
            .min_by(|a, b| a.mean_rmse_avg.total_cmp(&b.mean_rmse_avg));
        if let Some(r) = winner {
            best.push(BestBandwidth {
                method,
                h: r.h,
                mean_rmse_avg: r.mean_rmse_avg,
            });
        }
    }
    Ok(SweepTable {
        n: config.n,
        m: config.m,
        reps: config.reps,
        rows,
        best,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub repetitions: usize,
    /// Median seconds from raw records to scores.
    pub median_seconds: f64,
    /// Median seconds from the kernel-weighted pair fractions to scores.
    pub median_solve_seconds: f64,
    pub log10_n: f64,
    pub log10_median_seconds: f64,
    pub log10_median_solve_seconds: f64,
}

/// Runs `f` until at least `MIN_SPAN` has elapsed; seconds per call.
fn time_per_call(mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    const MIN_SPAN: f64 = 0.005;
    let mut calls = 0usize;
    let start = Instant::now();
    loop {
        f()?;
        calls += 1;
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed >= MIN_SPAN {
            return Ok(elapsed / calls as f64);
        }
    }
}

/// Median wall time of KRC and WMLE at `t = 0.5`, both for the whole fit
/// and for the estimation step after the shared kernel weighting. Runs
/// serially.
pub fn timing_bench(
    n_grid: &[usize],
    m: usize,
    h: f64,
    repetitions: usize,
    seed: u64,
    settings: &EstimatorSettings,
) -> Result<Vec<TimingRow>> {
    if repetitions == 0 {
        return Err(Error::Invalid("at least one repetition is needed".into()));
    }
    let t = 0.5;
    let mm = MMConfig {
        check_ascent: false,
        ..settings.mm
    };
    let kernel = &settings.kernel;
    let mut rows = Vec::new();
    for &n in n_grid {
        // [krc total, krc solve, wmle total, wmle solve]
        let mut times: [Vec<f64>; 4] = Default::default();
        for r in 0..repetitions {
            let cfg = SimConfig::new(n, m, derive_seed(derive_seed(seed, n as u64), r as u64));
            let truth = draw_truth(&cfg)?;
            let data = simulate_with_truth(&truth, cfg.seed, m)?;
            let sigma = settings.sigma_for(n);
            let fractions = kernel_fractions(&data, t, h, kernel)?;
            let start = vec![1.0; n];
            times[0].push(time_per_call(|| {
                black_box(kernel_rank_centrality(&data, t, h, kernel, sigma, &settings.solver)?);
                Ok(())
            })?);
            times[1].push(time_per_call(|| {
                let p = regularize(&transition_from_pair_fractions(n, &fractions)?, sigma)?;
                black_box(stationary(&p, &settings.solver)?);
                Ok(())
            })?);
            times[2].push(time_per_call(|| {
                black_box(wmle(&data, t, h, kernel, &mm)?);
                Ok(())
            })?);
            times[3].push(time_per_call(|| {
                black_box(mm_from_fractions(n, &fractions, &mm, &start)?);
                Ok(())
            })?);
        }
        for (method, total, solve) in [(Method::Krc, &times[0], &times[1]), (Method::Wmle, &times[2], &times[3])] {
            let med = stats::median(total);
            let med_solve = stats::median(solve);
            rows.push(TimingRow {
                method,
                n,
                m,
                h,
                repetitions,
                median_seconds: med,
                median_solve_seconds: med_solve,
                log10_n: (n as f64).log10(),
                log10_median_seconds: med.log10(),
                log10_median_solve_seconds: med_solve.log10(),
            });
        }
    }
    Ok(rows)
}

/// `t_WMLE / t_KRC` at `n` for whole fits, or for the estimation step alone
/// when `solve_only`.
pub fn speed_ratio(rows: &[TimingRow], n: usize, solve_only: bool) -> Option<f64> {
    let get = |m: Method| {
        rows.iter()
            .find(|r| r.method == m && r.n == n)
            .map(|r| if solve_only { r.median_solve_seconds } else { r.median_seconds })
    };
    Some(get(Method::Wmle)? / get(Method::Krc)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub t: f64,
    pub level: f64,
    pub reps: usize,
    pub seed: u64,
    pub settings: EstimatorSettings,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            n: 100,
            m: 200,
            h: 0.01,
            t: 0.5,
            level: 0.95,
            reps: 500,
            seed: 2024,
            settings: EstimatorSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub t: f64,
    pub level: f64,
    pub reps: usize,
    /// True scores at `t`, normalized.
    pub truth: Vec<f64>,
    /// Per item, share of replications whose interval (plug-in `α̂`)
    /// contains the truth.
    pub per_item_coverage: Vec<f64>,
    /// Same with `α` evaluated at the truth.
    pub oracle_per_item_coverage: Vec<f64>,
    pub band: (f64, f64),
    pub fraction_items_in_band: f64,
    pub oracle_fraction_items_in_band: f64,
    pub mean_coverage: f64,
    pub oracle_mean_coverage: f64,
    /// Mean half-width `z / α̂_i` over items and replications.
    pub mean_half_width: f64,
    /// Mean absolute off-diagonal correlation of the `π̂_i` across
    /// replications.
    pub mean_abs_correlation: f64,
    /// Pooled `α̂_i (π̂_i − π_i)` against `N(0, 1)`.
    pub pooled_z: AndersonDarling,
    pub pooled_z_mean: f64,
    pub pooled_z_sd: f64,
    /// Share of items whose own z-scores pass Anderson–Darling at 0.01.
    pub fraction_items_normal: f64,
    /// Share of replications with `‖E A#‖₂ < 1`.
    pub expansion_condition_rate: f64,
    pub mean_first_order_residual: f64,
}

struct CoverageRep {
    pi_hat: Vec<f64>,
    hit: Vec<bool>,
    oracle_hit: Vec<bool>,
    z: Vec<f64>,
    half_width: Vec<f64>,
    condition: bool,
    residual: f64,
}

/// Repeated fits at one time point under a fixed truth; only the
/// comparisons are redrawn.
pub fn coverage_experiment(config: &CoverageConfig) -> Result<CoverageReport> {
    if config.reps < 2 {
        return Err(Error::Invalid("coverage needs at least two replications".into()));
    }
    let truth = draw_truth(&SimConfig::new(config.n, config.m, config.seed))?;
    let n = config.n;
    let pi_star = ScoreVector::from_weights(truth.normalized_skill(config.t))?;
    let p_star = build_ideal_transition(pi_star.scores())?;
    let ainv_star = group_inverse(&p_star, &pi_star)?;
    let s = &config.settings;
    let sigma = s.sigma_for(n);

    let reps = run_indexed(config.reps, |r| -> Result<CoverageRep> {
        let data = simulate_with_truth(&truth, derive_seed(config.seed, 1 + r as u64), config.m)?;
        let p_hat = regularize(&build_transition(&data, config.t, config.h, &s.kernel)?, sigma)?;
        let pi_hat = stationary(&p_hat, &s.solver)?;
        let est = precision_factors(
            pi_hat.scores(),
            &data,
            config.t,
            config.h,
            &s.kernel,
            EffectiveCount::RawCount,
            PlugInSource::Estimated,
        )?;
        let oracle = precision_factors(
            pi_star.scores(),
            &data,
            config.t,
            config.h,
            &s.kernel,
            EffectiveCount::RawCount,
            PlugInSource::OracleTruth,
        )?;
        let mut hit = Vec::with_capacity(n);
        let mut oracle_hit = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        let mut half_width = Vec::with_capacity(n);
        for i in 0..n {
            let ci = score_ci(&pi_hat, &est, i, config.level)?;
            hit.push(ci.contains(pi_star.get(i)));
            oracle_hit.push(score_ci(&pi_hat, &oracle, i, config.level)?.contains(pi_star.get(i)));
            z.push(est.alpha(i)? * (pi_hat.get(i) - pi_star.get(i)));
            half_width.push(0.5 * ci.width());
        }
        let diag = expansion_diagnostic(&p_hat, &p_star, &ainv_star, &pi_hat, &pi_star)?;
        Ok(CoverageRep {
            pi_hat: pi_hat.into_scores(),
            hit,
            oracle_hit,
            z,
            half_width,
            condition: diag.condition_holds,
            residual: diag.first_order_residual,
        })
    });
    let reps = reps.into_iter().collect::<Result<Vec<_>>>()?;
    let count = reps.len() as f64;
    let share = |f: &dyn Fn(&CoverageRep, usize) -> bool| -> Vec<f64> {
        (0..n)
            .map(|i| reps.iter().filter(|r| f(r, i)).count() as f64 / count)
            .collect()
    };
    let per_item_coverage = share(&|r, i| r.hit[i]);
    let oracle_per_item_coverage = share(&|r, i| r.oracle_hit[i]);
    let band = (0.90, 0.99);
    let in_band = |cov: &[f64]| {
        cov.iter().filter(|&&c| c >= band.0 && c <= band.1).count() as f64 / n as f64
    };
    let pooled: Vec<f64> = reps.iter().flat_map(|r| r.z.iter().copied()).collect();
    let widths: Vec<f64> = reps.iter().flat_map(|r| r.half_width.iter().copied()).collect();
    let samples: Vec<Vec<f64>> = reps.iter().map(|r| r.pi_hat.clone()).collect();
    let residuals: Vec<f64> = reps.iter().map(|r| r.residual).collect();
    Ok(CoverageReport {
        n,
        m: config.m,
        h: config.h,
        t: config.t,
        level: config.level,
        reps: config.reps,
        truth: pi_star.scores().to_vec(),
        fraction_items_in_band: in_band(&per_item_coverage),
        oracle_fraction_items_in_band: in_band(&oracle_per_item_coverage),
        mean_coverage: stats::mean(&per_item_coverage),
        oracle_mean_coverage: stats::mean(&oracle_per_item_coverage),
        per_item_coverage,
        oracle_per_item_coverage,
        band,
        mean_half_width: stats::mean(&widths),
        mean_abs_correlation: stats::mean_abs_correlation(&samples),
        pooled_z: stats::anderson_darling_normal(&pooled),
        pooled_z_mean: stats::mean(&pooled),
        pooled_z_sd: stats::std_dev(&pooled),
        fraction_items_normal: (0..n)
            .filter(|&i| {
                let z: Vec<f64> = reps.iter().map(|r| r.z[i]).collect();
                stats::anderson_darling_normal(&z).p_value > 0.01
            })
            .count() as f64
            / n as f64,
        expansion_condition_rate: reps.iter().filter(|r| r.condition).count() as f64 / count,
        mean_first_order_residual: stats::mean(&residuals),
    })
}

/// How backtest predictions are scored.
#[derive(Debug, Clone, PartialEq)]
pub enum BacktestMethod {
    Krc { h: f64, kernel: Kernel, sigma: Option<f64> },
    StaticRc { sigma: Option<f64> },
    Wmle { h: f64, kernel: Kernel },
    Elo(EloConfig),
}

impl BacktestMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BacktestMethod::Krc { .. } => "krc",
            BacktestMethod::StaticRc { .. } => "rc",
            BacktestMethod::Wmle { .. } => "wmle",
            BacktestMethod::Elo(_) => "elo",
        }
    }

    fn params(&self) -> BTreeMap<String, serde_json::Value> {
        let mut p = BTreeMap::new();
        match self {
            BacktestMethod::Krc { h, kernel, sigma } => {
                p.insert("h".into(), (*h).into());
                p.insert("kernel".into(), kernel.to_string().into());
                p.insert("sigma".into(), sigma.map_or(serde_json::Value::from("1/n"), Into::into));
            }
            BacktestMethod::StaticRc { sigma } => {
                p.insert("sigma".into(), sigma.map_or(serde_json::Value::from("1/n"), Into::into));
            }
            BacktestMethod::Wmle { h, kernel } => {
                p.insert("h".into(), (*h).into());
                p.insert("kernel".into(), kernel.to_string().into());
            }
            BacktestMethod::Elo(c) => {
                p.insert("k_factor".into(), c.k_factor.into());
                p.insert("initial_rating".into(), c.initial_rating.into());
                p.insert("logistic_scale".into(), c.logistic_scale.into());
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeasonAccuracy {
    pub season: u32,
    pub correct: usize,
    pub evaluated: usize,
    pub accuracy: f64,
    /// Games between equally scored items, predicted by label order.
    pub ties: usize,
    /// Games with an item never seen before the game day.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub method: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub base_seasons: u32,
    pub per_season_accuracy: Vec<SeasonAccuracy>,
    pub total_accuracy: f64,
    pub n_games_evaluated: usize,
    pub n_ties: usize,
    pub n_excluded: usize,
    pub n_fit_days: usize,
}

/// [`backtest_with_probe`] without a probe.
pub fn backtest(dataset: &ComparisonDataset, base_seasons: u32, method: &BacktestMethod) -> Result<BacktestReport> {
    backtest_with_probe(dataset, base_seasons, method, |_, _| {})
}

/// Walk-forward evaluation over the seasons after `base_seasons`. Each game
/// day is scored with a fit on the records strictly before it; `probe` sees
/// every training set with its day time.
pub fn backtest_with_probe(
    dataset: &ComparisonDataset,
    base_seasons: u32,
    method: &BacktestMethod,
    mut probe: impl FnMut(f64, &ComparisonDataset),
) -> Result<BacktestReport> {
    if !dataset.encoding().is_season_day() {
        return Err(Error::Invalid("backtest needs season-day data".into()));
    }
    let records = dataset.records();
    let mut test: Vec<usize> = Vec::new();
    for (k, r) in records.iter().enumerate() {
        let stamp = r
            .stamp()
            .ok_or_else(|| Error::Invalid("record without season and day".into()))?;
        if stamp.season > base_seasons {
            test.push(k);
        }
    }
    if test.is_empty() {
        return Err(Error::Invalid(format!("no games after season {base_seasons}")));
    }
    test.sort_by(|&a, &b| records[a].time().total_cmp(&records[b].time()));

    let elo = match method {
        BacktestMethod::Elo(cfg) => Some(elo_fit(dataset, cfg)?),
        _ => None,
    };
    let n = dataset.n();
    let labels = dataset.labels();
    let mut seasons: BTreeMap<u32, SeasonAccuracy> = BTreeMap::new();
    let mut fit_days = 0;
    let mut k = 0;
    while k < test.len() {
        let t = records[test[k]].time();
        let mut end = k;
        while end < test.len() && records[test[end]].time() == t {
            end += 1;
        }
        let train = dataset.before(t);
        assert!(
            train.records().iter().all(|r| r.time() < t),
            "training data must precede the game day"
        );
        probe(t, &train);
        let mut seen = vec![false; n];
        for r in train.records() {
            seen[r.item_i()] = true;
            seen[r.item_j()] = true;
        }
        let scores: Option<Vec<f64>> = if train.is_empty() {
            None
        } else {
            fit_days += 1;
            Some(match method {
                BacktestMethod::Krc { h, kernel, sigma } => {
                    let s = sigma.unwrap_or_else(|| default_sigma(n));
                    kernel_rank_centrality(&train, t, *h, kernel, s, &SolverConfig::default())?
                        .into_scores()
                }
                BacktestMethod::StaticRc { sigma } => {
                    let s = sigma.unwrap_or_else(|| default_sigma(n));
                    static_rank_centrality(&train, s, &SolverConfig::default())?.into_scores()
                }
                BacktestMethod::Wmle { h, kernel } => {
                    wmle(&train, t, *h, kernel, &MMConfig::default())?.scores.into_scores()
                }
                BacktestMethod::Elo(_) => elo.as_ref().expect("fitted above").ratings_before(t),
            })
        };
        for &g in &test[k..end] {
            let r = &records[g];
            let season = r.stamp().expect("checked above").season;
            let entry = seasons.entry(season).or_insert(SeasonAccuracy {
                season,
                correct: 0,
                evaluated: 0,
                accuracy: 0.0,
                ties: 0,
                excluded: 0,
            });
            let (i, j) = (r.item_i(), r.item_j());
            let Some(scores) = scores.as_ref().filter(|_| seen[i] && seen[j]) else {
                entry.excluded += 1;
                continue;
            };
            let predicted = if scores[i] > scores[j] {
                i
            } else if scores[j] > scores[i] {
                j
            } else {
                entry.ties += 1;
                if labels[i] <= labels[j] { i } else { j }
            };
            entry.evaluated += 1;
            if predicted == r.winner() {
                entry.correct += 1;
            }
        }
        k = end;
    }
    let mut per_season: Vec<SeasonAccuracy> = seasons.into_values().collect();
    for s in &mut per_season {
        s.accuracy = if s.evaluated > 0 {
            s.correct as f64 / s.evaluated as f64
        } else {
            f64::NAN
        };
    }
    let evaluated: usize = per_season.iter().map(|s| s.evaluated).sum();
    let correct: usize = per_season.iter().map(|s| s.correct).sum();
    Ok(BacktestReport {
        method: method.name().to_string(),
        params: method.params(),
        base_seasons,
        total_accuracy: if evaluated > 0 { correct as f64 / evaluated as f64 } else { f64::NAN },
        n_games_evaluated: evaluated,
        n_ties: per_season.iter().map(|s| s.ties).sum(),
        n_excluded: per_season.iter().map(|s| s.excluded).sum(),
        n_fit_days: fit_days,
        per_season_accuracy: per_season,
    })
}

/// Synthetic multi-season league with drifting team strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct LeagueConfig {
    /// Even, so every team plays once per game day.
    pub teams: usize,
    pub seasons: u32,
    pub days_per_season: u32,
    pub seed: u64,
    /// Spread of the long-run log-strengths, `U(−spread, spread)`.
    pub base_spread: f64,
    /// Amplitude of the log-strength oscillation.
    pub amplitude: f64,
    /// Oscillation periods are drawn from this range, in seasons.
    pub period_range: (f64, f64),
}

impl Default for LeagueConfig {
    fn default() -> Self {
        Self {
            teams: 16,
            seasons: 10,
            days_per_season: 40,
            seed: 17,
            base_spread: 0.5,
            amplitude: 1.0,
            period_range: (2.0, 5.0),
        }
    }
}

/// `log π_i(s) = θ_i + A sin(2π s / P_i + φ_i)` on the season time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LeagueTruth {
    pub theta: Vec<f64>,
    pub amplitude: f64,
    pub period: Vec<f64>,
    pub phase: Vec<f64>,
}

impl LeagueTruth {
    pub fn strength(&self, i: usize, s: f64) -> f64 {
        let arg = std::f64::consts::TAU * s / self.period[i] + self.phase[i];
        (self.theta[i] + self.amplitude * arg.sin()).exp()
    }

    /// Chance that `j` beats `i` at time `s`.
    pub fn j_wins(&self, i: usize, j: usize, s: f64) -> f64 {
        let (a, b) = (self.strength(i, s), self.strength(j, s));
        b / (a + b)
    }
}

#[derive(Debug, Clone)]
pub struct League {
    pub dataset: ComparisonDataset,
    pub truth: LeagueTruth,
}

impl League {
    /// Expected accuracy of always picking the truly stronger team, over the
    /// games after `base_seasons`.
    pub fn bayes_accuracy(&self, base_seasons: u32) -> f64 {
        let games: Vec<f64> = self
            .dataset
            .records()
            .iter()
            .filter(|r| r.stamp().is_some_and(|s| s.season > base_seasons))
            .map(|r| {
                let p = self.truth.j_wins(r.item_i(), r.item_j(), r.time());
                p.max(1.0 - p)
            })
            .collect();
        stats::mean(&games)
    }
}

pub fn synthetic_league(config: &LeagueConfig) -> Result<League> {
    if config.teams < 2 || !config.teams.is_multiple_of(2) {
        return Err(Error::Invalid("the league needs an even number of teams".into()));
    }
    if config.seasons == 0 || config.days_per_season == 0 {
        return Err(Error::Invalid("the league needs at least one season and day".into()));
    }
    let (lo, hi) = config.period_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::Invalid("invalid period range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.teams;
    let theta = (0..n).map(|_| rng.random_range(-1.0..=1.0) * config.base_spread).collect();
    let period = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let phase = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let truth = LeagueTruth {
        theta,
        amplitude: config.amplitude,
        period,
        phase,
    };
    let labels: Vec<String> = (0..n).map(|i| format!("T{i:02}")).collect();
    let mut builder = DatasetBuilder::new(RosterPolicy::Strict(labels.clone()));
    let mut order: Vec<usize> = (0..n).collect();
    let days = config.days_per_season as usize;
    for season in 1..=config.seasons {
        for day in 1..=config.days_per_season {
            let s = season_day_time(season, day as usize, days);
            order.shuffle(&mut rng);
            for pair in order.chunks_exact(2) {
                let (i, j) = (pair[0], pair[1]);
                let y = u8::from(rng.random::<f64>() < truth.j_wins(i, j, s));
                builder
                    .push_season_day(season, day, &labels[i], &labels[j], y)
                    .map_err(Error::Core)?;
            }
        }
    }
    let dataset = builder.build(&TimeEncoding::SeasonDay {
        season_day_counts: None,
    })?;
    Ok(League { dataset, truth })
}
