//! Directional backtesting.
//!
//! For every consecutive pair of changes inside a calendar period the model
//! forecasts the direction of the next change from the previous one, and the
//! forecast is scored against what happened: a match counts one right, a
//! mismatch one wrong, and a zero actual change (or a tied forecast) half of
//! each. Periods report the success frequency in percent; the report's
//! skewness is the unweighted mean over periods minus 50.

mod report;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{partition, permute, ChangeSeries, Granularity};
use crate::model::{
    conditional_distribution, forecast_direction_mass, forecast_direction_mc, ConditionalDistribution,
    Direction, ModelError, ModelSpec,
};
use crate::rng;

pub use report::{write_report_csv, write_skewness_summary};
pub use synthetic::{generate, SyntheticKind, SyntheticSpec, SYNTHETIC_START_NS, SYNTHETIC_STEP_NS};

/// Fewest nonzero entries a period needs for a stable success frequency.
pub const MIN_PERIOD_ENTRIES: usize = 5_000;
/// Fewest Monte Carlo repetitions per forecast.
pub const MIN_REALISATIONS: usize = 10;
/// Stream ordinal reserved for the permutation shuffle.
const PERMUTATION_STREAM: u64 = u64::MAX;
/// Coarsening steps tried before a transition is declared unscorable.
const MAX_COARSENING: u32 = 64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("empty change series")]
    EmptySeries,
    #[error("no period has at least 2 changes")]
    NoScorablePeriods,
    #[error("Monte Carlo mode needs at least one repetition")]
    ZeroRepetitions,
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}

/// How a direction forecast is read off the conditional law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastMode {
    /// Compare the probability mass above and below zero.
    Mass,
    /// Majority sign of this many draws.
    MonteCarlo(usize),
}

impl fmt::Display for ForecastMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForecastMode::Mass => f.write_str("mass"),
            ForecastMode::MonteCarlo(r) => write!(f, "mc:{r}"),
        }
    }
}

impl FromStr for ForecastMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mass" {
            return Ok(ForecastMode::Mass);
        }
        let r = s
            .strip_prefix("mc:")
            .ok_or_else(|| format!("unknown mode `{s}` (mass|mc:R)"))?
            .parse::<usize>()
            .map_err(|_| format!("bad repetition count in `{s}`"))?;
        if r == 0 {
            return Err("mc:R needs R >= 1".into());
        }
        Ok(ForecastMode::MonteCarlo(r))
    }
}

/// Right and wrong forecast counts; halves are exact in `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransitionScore {
    pub right: f64,
    pub wrong: f64,
}

impl TransitionScore {
    pub fn total(&self) -> f64 {
        self.right + self.wrong
    }

    /// Success frequency in percent.
    pub fn pct(&self) -> f64 {
        100.0 * self.right / self.total()
    }
}

impl std::ops::Add for TransitionScore {
    type Output = TransitionScore;

    fn add(self, o: TransitionScore) -> TransitionScore {
        TransitionScore { right: self.right + o.right, wrong: self.wrong + o.wrong }
    }
}

impl std::ops::AddAssign for TransitionScore {
    fn add_assign(&mut self, o: TransitionScore) {
        *self = *self + o;
    }
}

/// Score one forecast against the realised change.
pub fn score_transition(predicted: Direction, actual: f64) -> TransitionScore {
    const HIT: TransitionScore = TransitionScore { right: 1.0, wrong: 0.0 };
    const MISS: TransitionScore = TransitionScore { right: 0.0, wrong: 1.0 };
    const HALF: TransitionScore = TransitionScore { right: 0.5, wrong: 0.5 };
    match predicted {
        Direction::Tie => HALF,
        _ if actual == 0.0 => HALF,
        Direction::Up if actual > 0.0 => HIT,
        Direction::Down if actual < 0.0 => HIT,
        _ => MISS,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRow {
    pub label: String,
    pub n_original: usize,
    pub n_nonzero: usize,
    pub pct_success: f64,
    pub pct_success_permuted: Option<f64>,
    pub score: TransitionScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub rows: Vec<PeriodRow>,
    /// Unweighted mean of the rows' success frequencies.
    pub mean_pct: f64,
    /// `mean_pct − 50`, in percentage points.
    pub skewness: f64,
    pub mode: ForecastMode,
    pub seed: u64,
    pub permuted: bool,
    pub warnings: Vec<String>,
}

impl BacktestReport {
    fn from_rows(rows: Vec<PeriodRow>, mode: ForecastMode, seed: u64, permuted: bool) -> Self {
        let mean_pct = rows.iter().map(|r| r.pct_success).sum::<f64>() / rows.len() as f64;
        BacktestReport { rows, mean_pct, skewness: mean_pct - 50.0, mode, seed, permuted, warnings: Vec::new() }
    }

    /// Copy the permuted run's frequencies into `pct_success_permuted`, matching rows by label.
    pub fn with_permuted(mut self, permuted: &BacktestReport) -> Self {
        for row in &mut self.rows {
            row.pct_success_permuted =
                permuted.rows.iter().find(|p| p.label == row.label).map(|p| p.pct_success);
        }
        self
    }

    pub fn total_score(&self) -> TransitionScore {
        self.rows.iter().fold(TransitionScore::default(), |acc, r| acc + r.score)
    }
}

/// Build the conditional law, coarsening the grid unit by powers of two when
/// the model rejects the grid as too small. Returns the number of doublings.
pub fn fitted_distribution(
    spec: &ModelSpec,
    prev_change: f64,
    tick: f64,
) -> Result<(ConditionalDistribution, u32), ModelError> {
    // jump close to a grid that fits: |Δx_prev| ≈ 8 grid units or fewer
    let ratio = prev_change.abs() / tick;
    let mut doublings = if ratio > 8.0 { (ratio / 8.0).log2().floor() as u32 } else { 0 };
    let mut last_err = None;
    for _ in 0..=MAX_COARSENING {
        let unit = tick * 2f64.powi(doublings as i32);
        match conditional_distribution(spec, prev_change, unit) {
            Ok(d) => return Ok((d, doublings)),
            Err(e @ ModelError::GridTooSmall { .. }) => {
                last_err = Some(e);
                doublings += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("loop ran"))
}

fn forecast(dist: &ConditionalDistribution, mode: ForecastMode, seed: u64) -> Direction {
    match mode {
        ForecastMode::Mass => forecast_direction_mass(dist),
        ForecastMode::MonteCarlo(r) => forecast_direction_mc(dist, seed, r),
    }
}

struct PeriodOutcome {
    row: Option<PeriodRow>,
    coarsened: usize,
}

fn score_period(
    label: &str,
    cs: &ChangeSeries,
    spec: &ModelSpec,
    mode: ForecastMode,
    period_seed: u64,
) -> Result<PeriodOutcome, ModelError> {
    if cs.len() < 2 {
        return Ok(PeriodOutcome { row: None, coarsened: 0 });
    }
    let mut score = TransitionScore::default();
    let mut coarsened = 0;
    for (i, w) in cs.values().windows(2).enumerate() {
        let (dist, doublings) = fitted_distribution(spec, w[0], cs.tick_size())?;
        if doublings > 0 {
            coarsened += 1;
        }
        let predicted = forecast(&dist, mode, rng::derive(period_seed, i as u64));
        score += score_transition(predicted, w[1]);
    }
    Ok(PeriodOutcome {
        row: Some(PeriodRow {
            label: label.to_string(),
            n_original: cs.original_len(),
            n_nonzero: cs.nonzero_len(),
            pct_success: score.pct(),
            pct_success_permuted: None,
            score,
        }),
        coarsened,
    })
}

/// Warnings for periods too short to trust and for too few Monte Carlo draws.
pub fn min_sample_check(report: &BacktestReport) -> Vec<String> {
    let mut out: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.n_nonzero < MIN_PERIOD_ENTRIES)
        .map(|r| {
            format!(
                "period {}: {} nonzero entries, fewer than {MIN_PERIOD_ENTRIES}",
                r.label, r.n_nonzero
            )
        })
        .collect();
    if let ForecastMode::MonteCarlo(r) = report.mode {
        if r < MIN_REALISATIONS {
            out.push(format!("Monte Carlo uses {r} realisations, fewer than {MIN_REALISATIONS}"));
        }
    }
    out
}

/// Run the directional backtest over calendar periods.
///
/// Periods are scored in parallel; each uses its own seed stream derived from
/// `seed` and the period ordinal, so output does not depend on scheduling.
pub fn run_backtest(
    cs: &ChangeSeries,
    spec: &ModelSpec,
    mode: ForecastMode,
    granularity: Granularity,
    seed: u64,
) -> Result<BacktestReport, HarnessError> {
    run(cs, spec, mode, granularity, seed, false)
}

/// The same protocol on a seeded random permutation of the changes.
pub fn permutation_baseline(
    cs: &ChangeSeries,
    spec: &ModelSpec,
    mode: ForecastMode,
    granularity: Granularity,
    seed: u64,
) -> Result<BacktestReport, HarnessError> {
    if cs.is_empty() {
        return Err(HarnessError::EmptySeries);
    }
    let shuffled = permute(cs, rng::derive(seed, PERMUTATION_STREAM));
    run(&shuffled, spec, mode, granularity, seed, true)
}

fn run(
    cs: &ChangeSeries,
    spec: &ModelSpec,
    mode: ForecastMode,
    granularity: Granularity,
    seed: u64,
    permuted: bool,
) -> Result<BacktestReport, HarnessError> {
    if cs.is_empty() {
        return Err(HarnessError::EmptySeries);
    }
    if mode == ForecastMode::MonteCarlo(0) {
        return Err(HarnessError::ZeroRepetitions);
    }
    spec.validate()?;
    let periods = partition(cs, granularity);
    let outcomes: Vec<(String, PeriodOutcome)> = periods
        .par_iter()
        .enumerate()
        .map(|(ordinal, (label, part))| {
            score_period(label, part, spec, mode, rng::derive(seed, ordinal as u64)).map(|o| (label.clone(), o))
        })
        .collect::<Result<_, _>>()?;

    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    let mut coarsened = 0;
    for (label, outcome) in outcomes {
        coarsened += outcome.coarsened;
        match outcome.row {
            Some(row) => rows.push(row),
            None => warnings.push(format!("period {label}: fewer than 2 changes, skipped")),
        }
    }
    if rows.is_empty() {
        return Err(HarnessError::NoScorablePeriods);
    }
    let mut report = BacktestReport::from_rows(rows, mode, seed, permuted);
    if coarsened > 0 {
        warnings.push(format!("{coarsened} transitions scored on a coarsened grid"));
    }
    warnings.extend(min_sample_check(&report));
    report.warnings = warnings;
    Ok(report)
}
