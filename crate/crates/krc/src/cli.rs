//! `krc` command line.

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use krc_core::baselines::{bt_mle_mm, static_rank_centrality, wmle, EloConfig};
use krc_core::inference::{pairwise_win_ci, precision_factors, score_ci, EffectiveCount, PlugInSource};
use krc_core::metrics::metric_grid;
use krc_core::online::{OnlineConfig, OnlineState};
use krc_core::spectral::{default_sigma, estimate_curve, kernel_rank_centrality};
use krc_core::{ComparisonDataset, Kernel, SimConfig, SolverConfig};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{
    backtest, bandwidth_sweep, coverage_experiment, simulate, synthetic_league, timing_bench,
    BacktestMethod, CoverageConfig, EstimatorSettings, LeagueConfig, Method, SweepConfig,
};
use crate::io::{self as krc_io, ReadOptions};

/// Bandwidth used by `ci --undersmooth`.
pub const UNDERSMOOTH_H: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(name = "krc", version, about = "Kernel Rank Centrality: time-varying rankings from pairwise comparisons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (dynamic sine skills, or a league with `--seasons`).
    Simulate(SimulateArgs),
    /// Scores at one time point.
    Fit(FitArgs),
    /// Scores on the grid `k/M`, `k = 1..M-1`.
    Curve(CurveArgs),
    /// Fold comparisons read from standard input into a fitted state.
    UpdateStream(StreamArgs),
    /// Confidence intervals for scores or pairwise win probabilities.
    Ci(CiArgs),
    /// Estimation error over a bandwidth grid.
    Sweep(SweepArgs),
    /// Wall time of KRC and WMLE fits.
    Bench(BenchArgs),
    /// Empirical coverage of the score intervals.
    Coverage(CoverageArgs),
    /// Walk-forward forecasting accuracy on season-day data.
    Backtest(BacktestArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Output {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct Input {
    /// Comparison CSV (`time,item_i,item_j,outcome` or `season,day,item_i,item_j,outcome`).
    #[arg(long)]
    pub data: PathBuf,
    /// Map raw times linearly onto [0, 1].
    #[arg(long)]
    pub rescale: bool,
}

impl Input {
    fn load(&self) -> Result<ComparisonDataset> {
        let opts = ReadOptions {
            rescale: self.rescale,
            ..ReadOptions::default()
        };
        krc_io::read_dataset(&self.data, &opts).map_err(|e| match e {
            Error::Io(io) => Error::Invalid(format!("{}: {io}", self.data.display())),
            other => other,
        })
    }
}

#[derive(Debug, Args)]
pub struct Estimator {
    /// Kernel: gaussian, epanechnikov or boxcar.
    #[arg(long, default_value = "gaussian")]
    pub kernel: Kernel,
    /// Teleportation probability; defaults to 1/n.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Convergence tolerance of the power iteration and of MM.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Estimator {
    fn settings(&self) -> EstimatorSettings {
        let mut s = EstimatorSettings {
            kernel: self.kernel,
            sigma: self.sigma,
            ..EstimatorSettings::default()
        };
        if let Some(tol) = self.tol {
            s.solver.tol = tol;
            s.mm.tol = tol;
        }
        s
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Items (teams with `--seasons`).
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Comparisons per pair.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generate a season-day league with this many seasons instead.
    #[arg(long)]
    pub seasons: Option<u32>,
    /// Game days per league season.
    #[arg(long, default_value_t = 40)]
    pub days: u32,
    /// Also write the normalized true scores on the grid `k/M`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitMethod {
    Krc,
    Rc,
    Wmle,
    Mle,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    #[arg(long, value_enum, default_value = "krc")]
    pub method: FitMethod,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    /// Grid resolution.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, value_parser = parse_method, default_value = "krc")]
    pub method: Method,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Initial comparisons; also fixes the roster.
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    /// Full recomputation after this many updates (0 disables).
    #[arg(long, default_value_t = 500)]
    pub refresh_every: usize,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, conflicts_with = "undersmooth")]
    pub h: Option<f64>,
    /// Use the under-smoothing bandwidth h = 0.01.
    #[arg(long)]
    pub undersmooth: bool,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Intervals for every pairwise win probability instead of the scores.
    #[arg(long)]
    pub pairwise: bool,
    /// Effective pair counts: `raw` (M_ij h) or `kernel-mass`.
    #[arg(long, default_value = "raw", value_parser = parse_count)]
    pub count: EffectiveCount,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated bandwidths.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.3,1,5")]
    pub h_grid: Vec<f64>,
    /// Comma-separated methods among krc, wmle, rc.
    #[arg(long = "method", value_delimiter = ',', value_parser = parse_method, default_value = "krc,wmle,rc")]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated item counts.
    #[arg(long, value_delimiter = ',', default_value = "10,20,50,100")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value_t = UNDERSMOOTH_H)]
    pub h: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BacktestKind {
    Krc,
    Rc,
    Wmle,
    Elo,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub input: Input,
    /// Seasons used only for training.
    #[arg(long, default_value_t = 7)]
    pub base_seasons: u32,
    #[arg(long, value_enum, default_value = "krc")]
    pub method: BacktestKind,
    /// Bandwidth on the season time scale.
    #[arg(long, default_value_t = 1.0)]
    pub h: f64,
    /// Elo K-factor.
    #[arg(long, default_value_t = 20.0)]
    pub k_factor: f64,
    #[command(flatten)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub output: Output,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_count(s: &str) -> std::result::Result<EffectiveCount, String> {
    match s {
        "raw" => Ok(EffectiveCount::RawCount),
        "kernel-mass" => Ok(EffectiveCount::KernelMass),
        other => Err(format!("unknown count `{other}`, expected raw or kernel-mass")),
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Fit(a) => run_fit(a),
        Command::Curve(a) => run_curve(a),
        Command::UpdateStream(a) => run_stream(a, io::stdin().lock()),
        Command::Ci(a) => run_ci(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Bench(a) => run_bench(a),
        Command::Coverage(a) => run_coverage(a),
        Command::Backtest(a) => run_backtest(a),
    }
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    if let Some(seasons) = a.seasons {
        if a.truth.is_some() {
            return Err(Error::Invalid("--truth is only available for sine-skill data".into()));
        }
        let league = synthetic_league(&LeagueConfig {
            teams: a.n,
            seasons,
            days_per_season: a.days,
            seed: a.seed,
            ..LeagueConfig::default()
        })?;
        return krc_io::write_dataset(a.output.writer()?, &league.dataset);
    }
    let config = SimConfig::new(a.n, a.m, a.seed);
    let (data, truth) = simulate(&config)?;
    krc_io::write_dataset(a.output.writer()?, &data)?;
    if let Some(path) = &a.truth {
        let grid = metric_grid(a.m.max(2));
        krc_io::write_truth(BufWriter::new(File::create(path)?), &truth, &grid, true)?;
    }
    Ok(())
}

fn run_fit(a: FitArgs) -> Result<()> {
    let data = a.input.load()?;
    let s = a.estimator.settings();
    let sigma = s.sigma_for(data.n());
    let scores = match a.method {
        FitMethod::Krc => kernel_rank_centrality(&data, a.t, a.h, &s.kernel, sigma, &s.solver)?,
        FitMethod::Rc => static_rank_centrality(&data, sigma, &s.solver)?,
        FitMethod::Wmle => wmle(&data, a.t, a.h, &s.kernel, &s.mm)?.scores,
        FitMethod::Mle => bt_mle_mm(&data, &s.mm)?.scores,
    };
    krc_io::write_scores(a.output.writer()?, &scores, data.labels())
}

fn run_curve(a: CurveArgs) -> Result<()> {
    if a.m < 2 {
        return Err(Error::Invalid("--m must be at least 2".into()));
    }
    let data = a.input.load()?;
    let s = a.estimator.settings();
    let grid = metric_grid(a.m);
    let curve = match a.method {
        Method::Krc => estimate_curve(&data, &grid, a.h, &s.kernel, s.sigma_for(data.n()), &s.solver)?,
        other => crate::experiments::method_curve(other, &data, &grid, a.h, &s)?,
    };
    krc_io::write_curve(a.output.writer()?, &curve)
}

/// Streams `time,item_i,item_j,outcome` lines from `input` into the state
/// fitted on `--data` and writes the final scores.
pub fn run_stream(a: StreamArgs, input: impl BufRead) -> Result<()> {
    let data = a.input.load()?;
    let s = a.estimator.settings();
    let config = OnlineConfig {
        refresh_every: a.refresh_every,
        solver: SolverConfig {
            tol: a.estimator.tol.unwrap_or(OnlineConfig::default().solver.tol),
            ..OnlineConfig::default().solver
        },
    };
    let sigma = s.sigma.unwrap_or_else(|| default_sigma(data.n()));
    let mut state = OnlineState::from_dataset(&data, a.t, a.h, s.kernel, sigma, config)?;
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (k == 0 && trimmed.starts_with("time")) {
            continue;
        }
        let record = krc_io::parse_stream_line(trimmed, &data, k as u64 + 1)?;
        state
            .apply_observation(&record)
            .map_err(|e| Error::Row { row: k as u64 + 1, source: e })?;
    }
    krc_io::write_scores(a.output.writer()?, state.scores(), data.labels())
}

fn run_ci(a: CiArgs) -> Result<()> {
    let h = match (a.h, a.undersmooth) {
        (Some(h), _) => h,
        (None, true) => UNDERSMOOTH_H,
        (None, false) => return Err(Error::Invalid("pass --h or --undersmooth".into())),
    };
    let data = a.input.load()?;
    let s = a.estimator.settings();
    let scores = kernel_rank_centrality(&data, a.t, h, &s.kernel, s.sigma_for(data.n()), &s.solver)?;
    let params = precision_factors(
        scores.scores(),
        &data,
        a.t,
        h,
        &s.kernel,
        a.count,
        PlugInSource::Estimated,
    )?;
    let n = data.n();
    let w = a.output.writer()?;
    if a.pairwise {
        let mut cis = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    cis.push((i, j, pairwise_win_ci(&scores, &params, i, j, a.level)?));
                }
            }
        }
        krc_io::write_pairwise_cis(w, &cis)
    } else {
        let cis = (0..n)
            .map(|i| Ok((i, score_ci(&scores, &params, i, a.level)?)))
            .collect::<Result<Vec<_>>>()?;
        krc_io::write_score_cis(w, &cis)
    }
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let table = bandwidth_sweep(&SweepConfig {
        n: a.n,
        m: a.m,
        seed: a.seed,
        reps: a.reps,
        h_grid: a.h_grid,
        methods: a.methods,
        settings: a.estimator.settings(),
    })?;
    a.output.json(&table)
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let rows = timing_bench(&a.n, a.m, a.h, a.reps, a.seed, &a.estimator.settings())?;
    let mut w = csv::Writer::from_writer(a.output.writer()?);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn run_coverage(a: CoverageArgs) -> Result<()> {
    if a.reps < 100 {
        return Err(Error::Invalid("coverage needs at least 100 replications".into()));
    }
    let report = coverage_experiment(&CoverageConfig {
        n: a.n,
        m: a.m,
        h: a.h,
        t: a.t,
        level: a.level,
        reps: a.reps,
        seed: a.seed,
        settings: a.estimator.settings(),
    })?;
    a.output.json(&report)
}

fn run_backtest(a: BacktestArgs) -> Result<()> {
    let data = a.input.load()?;
    let kernel = a.estimator.kernel;
    let method = match a.method {
        BacktestKind::Krc => BacktestMethod::Krc {
            h: a.h,
            kernel,
            sigma: a.estimator.sigma,
        },
        BacktestKind::Rc => BacktestMethod::StaticRc { sigma: a.estimator.sigma },
        BacktestKind::Wmle => BacktestMethod::Wmle { h: a.h, kernel },
        BacktestKind::Elo => BacktestMethod::Elo(EloConfig {
            k_factor: a.k_factor,
            ..EloConfig::default()
        }),
    };
    let report = backtest(&data, a.base_seasons, &method)?;
    a.output.json(&report)
}
