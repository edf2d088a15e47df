//! Market-data ingestion: price series, change series, calendar partitioning
//! and seeded shuffles for permutation baselines.
//!
//! Prices are held as scaled integers (`ticks × 10^-decimals`) so that
//! differencing is exact and "nonzero change" is an integer test.

mod csv;
pub mod decimal;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Utc};
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::rng;

pub use self::csv::{
    parse_bar_csv, parse_tick_csv, read_canonical, read_values, write_canonical, PriceRule,
};
use self::decimal::ticks_to_value;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty file")]
    EmptyFile,
    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("non-monotonic timestamp at line {line}")]
    NonMonotonic { line: usize },
    #[error("ask below bid at line {line}")]
    AskBelowBid { line: usize },
    #[error("unparseable timestamp `{raw}` at line {line}")]
    Timestamp { line: usize, raw: String },
    #[error("price rule `mid` needs an ask column")]
    MissingAsk,
    #[error("price at line {line} is not positive")]
    NonPositivePrice { line: usize },
    #[error("timeframe mismatch: expected {expected}, file declares {found}")]
    TimeframeMismatch { expected: Timeframe, found: String },
    #[error("fewer than 2 points")]
    TooShort,
    #[error("tick size must be positive")]
    BadTickSize,
    #[error("decimal overflow")]
    Overflow,
    #[error("series invariant violated: {0}")]
    Invariant(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Timeframe {
    Tick,
    M1,
    M5,
    M10,
    M15,
    M30,
    H1,
    D1,
}

impl Timeframe {
    pub const ALL: [Timeframe; 8] = [
        Timeframe::Tick,
        Timeframe::M1,
        Timeframe::M5,
        Timeframe::M10,
        Timeframe::M15,
        Timeframe::M30,
        Timeframe::H1,
        Timeframe::D1,
    ];

    /// Scale index `j`: one equation of motion per time scale.
    pub fn scale_index(self) -> u32 {
        self as u32
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Timeframe::Tick => "tick",
            Timeframe::M1 => "M1",
            Timeframe::M5 => "M5",
            Timeframe::M10 => "M10",
            Timeframe::M15 => "M15",
            Timeframe::M30 => "M30",
            Timeframe::H1 => "H1",
            Timeframe::D1 => "D1",
        }
    }

    /// Finam `<PER>` column code.
    pub fn from_finam_period(per: &str) -> Option<Timeframe> {
        Some(match per.trim() {
            "0" | "T" | "tick" => Timeframe::Tick,
            "1" => Timeframe::M1,
            "5" => Timeframe::M5,
            "10" => Timeframe::M10,
            "15" => Timeframe::M15,
            "30" => Timeframe::M30,
            "60" | "H" => Timeframe::H1,
            "D" | "1440" => Timeframe::D1,
            _ => return None,
        })
    }

    pub fn is_intraday_minutes(self) -> bool {
        matches!(
            self,
            Timeframe::M1 | Timeframe::M5 | Timeframe::M10 | Timeframe::M15 | Timeframe::M30
        )
    }
}

impl fmt::Display for Timeframe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Timeframe {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timeframe::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown timeframe `{s}`"))
    }
}

/// Timestamped price observations for one instrument at one time frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    instrument: String,
    timeframe: Timeframe,
    decimals: u32,
    timestamps: Vec<i64>,
    ticks: Vec<i64>,
}

impl PriceSeries {
    /// Build from scaled-integer prices. Timestamps are UTC nanoseconds.
    pub fn new(
        instrument: impl Into<String>,
        timeframe: Timeframe,
        decimals: u32,
        timestamps: Vec<i64>,
        ticks: Vec<i64>,
    ) -> Result<Self, IngestError> {
        if timestamps.len() != ticks.len() {
            return Err(IngestError::Invariant("timestamp and price counts differ"));
        }
        if ticks.is_empty() {
            return Err(IngestError::EmptyFile);
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] < w[0]) {
            return Err(IngestError::NonMonotonic { line: i + 1 });
        }
        if let Some(i) = ticks.iter().position(|&t| t <= 0) {
            return Err(IngestError::NonPositivePrice { line: i });
        }
        Ok(PriceSeries {
            instrument: instrument.into(),
            timeframe,
            decimals,
            timestamps,
            ticks,
        })
    }

    pub fn instrument(&self) -> &str {
        &self.instrument
    }

    pub fn timeframe(&self) -> Timeframe {
        self.timeframe
    }

    pub fn decimals(&self) -> u32 {
        self.decimals
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    /// Prices in units of the smallest quote increment.
    pub fn ticks(&self) -> &[i64] {
        &self.ticks
    }

    pub fn price(&self, i: usize) -> f64 {
        ticks_to_value(self.ticks[i], self.decimals)
    }

    pub fn tick_size(&self) -> f64 {
        ticks_to_value(1, self.decimals)
    }

    /// Successive differences in ticks.
    pub fn tick_differences(&self) -> Vec<i64> {
        self.ticks.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Inverse of [`PriceSeries::tick_differences`].
pub fn cumulate(first: i64, differences: &[i64]) -> Vec<i64> {
    let mut out = Vec::with_capacity(differences.len() + 1);
    out.push(first);
    let mut level = first;
    for d in differences {
        level += d;
        out.push(level);
    }
    out
}

/// Successive price changes at one time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSeries {
    scale: u32,
    timestamps: Vec<i64>,
    values: Vec<f64>,
    zero_filtered: bool,
    tick_size: f64,
    /// Timestamps of zero changes removed by filtering; period rows count them
    /// towards the original sample length.
    dropped_zeros: Vec<i64>,
}

impl ChangeSeries {
    pub fn new(
        scale: u32,
        timestamps: Vec<i64>,
        values: Vec<f64>,
        tick_size: f64,
    ) -> Result<Self, IngestError> {
        if timestamps.len() != values.len() {
            return Err(IngestError::Invariant("timestamp and value counts differ"));
        }
        if !(tick_size > 0.0 && tick_size.is_finite()) {
            return Err(IngestError::BadTickSize);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IngestError::Invariant("non-finite change"));
        }
        Ok(ChangeSeries {
            scale,
            timestamps,
            values,
            zero_filtered: false,
            tick_size,
            dropped_zeros: Vec::new(),
        })
    }

    /// Remove zero changes; the remaining ones are re-paired consecutively.
    pub fn drop_zeros(mut self) -> ChangeSeries {
        let mut kept_ts = Vec::with_capacity(self.values.len());
        let mut kept = Vec::with_capacity(self.values.len());
        for (&t, &v) in self.timestamps.iter().zip(&self.values) {
            if v == 0.0 {
                self.dropped_zeros.push(t);
            } else {
                kept_ts.push(t);
                kept.push(v);
            }
        }
        self.dropped_zeros.sort_unstable();
        self.timestamps = kept_ts;
        self.values = kept;
        self.zero_filtered = true;
        self
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_filtered(&self) -> bool {
        self.zero_filtered
    }

    pub fn tick_size(&self) -> f64 {
        self.tick_size
    }

    pub fn dropped_zeros(&self) -> &[i64] {
        &self.dropped_zeros
    }

    /// Length before zero filtering.
    pub fn original_len(&self) -> usize {
        self.values.len() + self.dropped_zeros.len()
    }

    pub fn nonzero_len(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// Difference a price series. Each change carries the timestamp of the later point.
pub fn to_changes(series: &PriceSeries, drop_zeros: bool) -> Result<ChangeSeries, IngestError> {
    if series.len() < 2 {
        return Err(IngestError::TooShort);
    }
    let values = series
        .tick_differences()
        .into_iter()
        .map(|d| ticks_to_value(d, series.decimals))
        .collect();
    let cs = ChangeSeries::new(
        series.timeframe.scale_index(),
        series.timestamps[1..].to_vec(),
        values,
        series.tick_size(),
    )?;
    Ok(if drop_zeros { cs.drop_zeros() } else { cs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Month,
    Year,
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "month" => Ok(Granularity::Month),
            "year" => Ok(Granularity::Year),
            other => Err(format!("unknown granularity `{other}` (month|year)")),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Month => "month",
            Granularity::Year => "year",
        })
    }
}

pub fn utc(ns: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(ns.div_euclid(1_000_000_000), ns.rem_euclid(1_000_000_000) as u32)
        .expect("timestamp within chrono range")
}

fn bucket_key(ns: i64, granularity: Granularity) -> (i32, u32) {
    let t = utc(ns);
    match granularity {
        Granularity::Month => (t.year(), t.month()),
        Granularity::Year => (t.year(), 0),
    }
}

fn bucket_label((year, month): (i32, u32)) -> String {
    if month == 0 {
        format!("{year}")
    } else {
        format!("{year}-{month:02}")
    }
}

/// Split a change series into calendar buckets, chronologically ordered.
/// Empty buckets are omitted.
pub fn partition(cs: &ChangeSeries, granularity: Granularity) -> Vec<(String, ChangeSeries)> {
    let mut buckets: BTreeMap<(i32, u32), ChangeSeries> = BTreeMap::new();
    let empty = |cs: &ChangeSeries| ChangeSeries {
        scale: cs.scale,
        timestamps: Vec::new(),
        values: Vec::new(),
        zero_filtered: cs.zero_filtered,
        tick_size: cs.tick_size,
        dropped_zeros: Vec::new(),
    };
    for (&t, &v) in cs.timestamps.iter().zip(&cs.values) {
        let b = buckets.entry(bucket_key(t, granularity)).or_insert_with(|| empty(cs));
        b.timestamps.push(t);
        b.values.push(v);
    }
    for &t in &cs.dropped_zeros {
        buckets
            .entry(bucket_key(t, granularity))
            .or_insert_with(|| empty(cs))
            .dropped_zeros
            .push(t);
    }
    buckets
        .into_iter()
        .map(|(k, v)| (bucket_label(k), v))
        .collect()
}

/// Uniform random permutation of the values; timestamps stay in place.
pub fn permute(cs: &ChangeSeries, seed: u64) -> ChangeSeries {
    let mut out = cs.clone();
    out.values.shuffle(&mut rng::seeded(seed));
    out
}
