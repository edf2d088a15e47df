//! Statistical property suite: stable-law fitting and generation, lag
//! correlation, the correlation field of successive changes, and the scaling
//! diagnostic.

mod acf;
mod field;
mod scaling;
mod stable;

use thiserror::Error;

use crate::model::ModelError;

pub use acf::{autocorrelation, autocorrelation_of, LagCorrelation, MIN_OVERLAP};
pub use field::{correlation_field, correlation_field_of, CorrelationField, MIN_PAIRS};
pub use scaling::{aggregate_to_coarse, cdf_distance, scaling_distance, MAX_FINE_CELLS};
pub use stable::{
    estimate_stable_kogon_williams, estimate_stable_koutrouvelis, sample_stable_cms, StableParams,
    MIN_SAMPLE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample too short: {got} values, at least {needed} required")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate sample: scale estimate is zero")]
    ZeroScale,
    #[error("zero-variance series")]
    ZeroVariance,
    #[error("stable parameters out of range: {0}")]
    InvalidParams(String),
    #[error("regression failed: {0}")]
    Regression(&'static str),
    #[error("fine grid of {cells} cells exceeds the {limit}-cell budget")]
    MemoryBudget { cells: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}
