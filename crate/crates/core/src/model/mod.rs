//! Conditional transition models `Pr(Δx_next | Δx_prev)` on a tick grid.
//!
//! [`ModelKind::EnergyReference`] is the reference model: each candidate next
//! change `k·δ` is assigned an energy cost relative to the previous change,
//! probability falls off as a power of that cost, and a cosine factor adds
//! price-level structure. Its constants are fixed before any data is seen.
//! The other kinds are baselines; only [`ModelKind::EmpiricalHistogram`] reads
//! data, and it exists as the calibrated contrast.

mod distribution;
mod empirical;
mod energy;
mod path;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

pub use distribution::{
    conditional_distribution, conditional_distribution_on_grid, forecast_direction_mass,
    forecast_direction_mc, sample, ConditionalDistribution, Direction, Sampler, TIE_THRESHOLD,
};
pub use empirical::EmpiricalHistogram;
pub use energy::{energy, truncated_mass, TRUNCATION_BUDGET};
pub use path::simulate_path;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("tick size must be positive and finite, got {0}")]
    BadTickSize(f64),
    #[error("grid too small: {mass:.4} of the mass lies beyond ±K={half_width} ticks; increase K")]
    GridTooSmall { mass: f64, half_width: usize },
    #[error("invalid model constant: {0}")]
    InvalidSpec(String),
    #[error("empirical_histogram model has not been calibrated")]
    Uncalibrated,
    #[error("empirical histogram was built with tick {built}, requested {requested}")]
    TickMismatch { built: f64, requested: f64 },
    #[error("model spec line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    EnergyReference,
    GaussianWalk,
    /// Mass `p` on a repeat of the previous sign, `1 − p` on a reversal.
    SignPersistent { p: f64 },
    /// `None` until calibrated from data.
    EmpiricalHistogram(Option<Arc<EmpiricalHistogram>>),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::EnergyReference => "energy_reference",
            ModelKind::GaussianWalk => "gaussian_walk",
            ModelKind::SignPersistent { .. } => "sign_persistent",
            ModelKind::EmpiricalHistogram(_) => "empirical_histogram",
        }
    }
}

/// Model kind plus structural constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Tail index of the energy kernel, in (0, 2).
    pub alpha0: f64,
    /// Inertia: the energy minimum sits at `c·Δx_prev`.
    pub inertia: f64,
    /// Amplitude of the price-level wave, in [0, 1).
    pub wave_amplitude: f64,
    /// Wave period in ticks.
    pub level_spacing: u32,
    /// Grid half-width `K`; the grid is `k = −K..=K`.
    pub half_width: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ModelKind::EnergyReference,
            alpha0: 0.8,
            inertia: 0.5,
            wave_amplitude: 0.25,
            level_spacing: 5,
            half_width: 600,
        }
    }
}

impl ModelSpec {
    pub fn with_kind(kind: ModelKind) -> Self {
        ModelSpec { kind, ..Default::default() }
    }

    pub fn gaussian_walk() -> Self {
        Self::with_kind(ModelKind::GaussianWalk)
    }

    pub fn sign_persistent(p: f64) -> Self {
        Self::with_kind(ModelKind::SignPersistent { p })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidSpec(m));
        if !(self.alpha0 > 0.0 && self.alpha0 < 2.0) {
            return bad(format!("alpha0 must lie in (0, 2), got {}", self.alpha0));
        }
        if !(0.0..1.0).contains(&self.wave_amplitude) {
            return bad(format!("a must lie in [0, 1), got {}", self.wave_amplitude));
        }
        if self.level_spacing < 1 {
            return bad("L_ticks must be at least 1".into());
        }
        if self.half_width < 10 {
            return bad(format!("K must be at least 10, got {}", self.half_width));
        }
        if !self.inertia.is_finite() {
            return bad("c must be finite".into());
        }
        if let ModelKind::SignPersistent { p } = self.kind {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("p must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// Fit the empirical baseline from a change series; other kinds are left untouched.
    pub fn calibrate(&mut self, cs: &crate::ingest::ChangeSeries) -> Result<(), ModelError> {
        if let ModelKind::EmpiricalHistogram(slot) = &mut self.kind {
            *slot = Some(Arc::new(EmpiricalHistogram::fit(cs, self.half_width)?));
        }
        Ok(())
    }

    /// Parse a `key=value` block (`#` starts a comment). Missing keys keep defaults.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut spec = ModelSpec::default();
        let mut p = None;
        let mut kind = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| ModelError::Parse { line: i + 1, reason };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key=value, found `{line}`")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("bad number `{v}` for {key}")));
            let int = |v: &str| v.parse::<u64>().map_err(|_| err(format!("bad integer `{v}` for {key}")));
            match key {
                "kind" => kind = Some(value.to_string()),
                "alpha0" => spec.alpha0 = num(value)?,
                "c" => spec.inertia = num(value)?,
                "a" => spec.wave_amplitude = num(value)?,
                "L_ticks" => spec.level_spacing = int(value)? as u32,
                "K" => spec.half_width = int(value)? as usize,
                "p" => p = Some(num(value)?),
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        spec.kind = match kind.as_deref().unwrap_or("energy_reference") {
            "energy_reference" => ModelKind::EnergyReference,
            "gaussian_walk" => ModelKind::GaussianWalk,
            "sign_persistent" => ModelKind::SignPersistent {
                p: p.ok_or_else(|| ModelError::InvalidSpec("sign_persistent needs p".into()))?,
            },
            "empirical_histogram" => ModelKind::EmpiricalHistogram(None),
            other => return Err(ModelError::InvalidSpec(format!("unknown kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind={}", self.kind.name())?;
        if let ModelKind::SignPersistent { p } = self.kind {
            writeln!(f, "p={p}")?;
        }
        writeln!(f, "alpha0={}", self.alpha0)?;
        writeln!(f, "c={}", self.inertia)?;
        writeln!(f, "a={}", self.wave_amplitude)?;
        writeln!(f, "L_ticks={}", self.level_spacing)?;
        writeln!(f, "K={}", self.half_width)
    }
}

impl FromStr for ModelSpec {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelSpec::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let s = ModelSpec::default();
        s.validate().unwrap();
        assert_eq!(s.alpha0, 0.8);
        assert_eq!(s.level_spacing, 5);
    }

    #[test]
    fn text_round_trip() {
        for spec in [ModelSpec::default(), ModelSpec::sign_persistent(0.52), ModelSpec::gaussian_walk()] {
            let text = spec.to_string();
            assert_eq!(ModelSpec::parse(&text).unwrap(), spec, "{text}");
        }
        let s = ModelSpec::parse("# reference\nkind = energy_reference\nK=300 # wider\n").unwrap();
        assert_eq!(s.half_width, 300);
    }

    #[test]
    fn text_errors() {
        assert!(matches!(ModelSpec::parse("alpha0=2.5"), Err(ModelError::InvalidSpec(_))));
        assert!(matches!(ModelSpec::parse("a=1"), Err(ModelError::InvalidSpec(_))));
        assert!(matches!(ModelSpec::parse("K=5"), Err(ModelError::InvalidSpec(_))));
        assert!(matches!(ModelSpec::parse("kind=sign_persistent"), Err(ModelError::InvalidSpec(_))));
        assert!(matches!(ModelSpec::parse("\nfoo=1"), Err(ModelError::Parse { line: 2, .. })));
        assert!(matches!(ModelSpec::parse("c=abc"), Err(ModelError::Parse { line: 1, .. })));
        assert!(matches!(ModelSpec::parse("kind=magic"), Err(ModelError::InvalidSpec(_))));
    }
}
