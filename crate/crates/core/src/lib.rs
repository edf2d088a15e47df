//! Conditional price-change models and the tooling around them.
//!
//! The crate is organized the way a study flows:
//!
//! * [`ingest`] turns bar and tick files into price and change series, splits
//!   them into calendar periods and shuffles them for null baselines.
//! * [`model`] defines `Pr(Δx_next | Δx_prev)` on a tick grid: an energy-based
//!   reference model plus a few baselines.
//! * [`stats`] holds the property suite: stable-law fitting, lag correlation,
//!   the correlation field and the scaling diagnostic.
//! * [`harness`] runs the directional backtest and its permutation baseline.

pub mod harness;
pub mod ingest;
pub mod model;
pub mod rng;
pub mod stats;

pub use harness::{
    BacktestReport, ForecastMode, PeriodRow, SyntheticKind, SyntheticSpec, TransitionScore,
};
pub use ingest::{ChangeSeries, Granularity, PriceSeries, Timeframe};
pub use model::{ConditionalDistribution, Direction, ModelKind, ModelSpec};
pub use stats::{CorrelationField, LagCorrelation, StableParams};
