use std::io::Write;

use rayon::prelude::*;

use super::StatsError;
use crate::ingest::ChangeSeries;

/// Lags with fewer overlapping points than this are reported as missing.
pub const MIN_OVERLAP: usize = 30;

/// Pearson coefficients between a series and its lagged copy.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCorrelation {
    pub lags: Vec<usize>,
    pub values: Vec<Option<f64>>,
    /// Computed on squared changes.
    pub squared: bool,
}

impl LagCorrelation {
    pub fn get(&self, lag: usize) -> Option<f64> {
        self.lags.iter().position(|l| *l == lag).and_then(|i| self.values[i])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lag,rho")?;
        for (lag, v) in self.lags.iter().zip(&self.values) {
            match v {
                Some(r) => writeln!(out, "{lag},{r}")?,
                None => writeln!(out, "{lag},NA")?,
            }
        }
        Ok(())
    }
}

/// Pearson correlation of two equal-length slices, each centred on its own mean.
fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub fn autocorrelation_of(values: &[f64], max_lag: usize, squared: bool) -> Result<LagCorrelation, StatsError> {
    if values.len() <= max_lag + 10 {
        return Err(StatsError::TooShort { needed: max_lag + 11, got: values.len() });
    }
    let x: Vec<f64> = if squared { values.iter().map(|v| v * v).collect() } else { values.to_vec() };
    let first = x[0];
    if x.iter().all(|v| *v == first) {
        return Err(StatsError::ZeroVariance);
    }
    let lags: Vec<usize> = (1..=max_lag).collect();
    let values = lags
        .par_iter()
        .map(|&lag| {
            let overlap = x.len() - lag;
            if overlap < MIN_OVERLAP {
                None
            } else {
                pearson(&x[..overlap], &x[lag..])
            }
        })
        .collect();
    Ok(LagCorrelation { lags, values, squared })
}

/// Lag-τ autocorrelation of the changes (or their squares), τ = 1..=max_lag.
pub fn autocorrelation(cs: &ChangeSeries, max_lag: usize, squared: bool) -> Result<LagCorrelation, StatsError> {
    autocorrelation_of(cs.values(), max_lag, squared)
}
