use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::{ModelKind, ModelSpec};

/// Largest tail mass the grid may cut off before the distribution is rejected.
pub const TRUNCATION_BUDGET: f64 = 0.05;

/// Energy scale: the previous change's size, floored at one tick.
pub(crate) fn energy_scale(prev_change: f64, tick: f64) -> f64 {
    prev_change.abs().max(tick)
}

/// Energy of moving by `next_k` ticks after a change of `prev_change`:
/// `(k·δ − c·Δx_prev)² / s²` with `s = max(|Δx_prev|, δ)`.
///
/// Only the structural constants of `spec` are used; the model kind is ignored.
pub fn energy(next_k: i64, prev_change: f64, tick: f64, spec: &ModelSpec) -> f64 {
    let s = energy_scale(prev_change, tick);
    let d = next_k as f64 * tick - spec.inertia * prev_change;
    d * d / (s * s)
}

/// Unnormalized energy-model weights over `k = −K..=K`.
pub(crate) fn energy_weights(spec: &ModelSpec, prev_change: f64, tick: f64) -> Vec<f64> {
    let k_max = spec.half_width as i64;
    let exponent = -(1.0 + spec.alpha0) / 2.0;
    // cos(2π|k|/L) only takes L distinct values
    let period = spec.level_spacing as usize;
    let wave: Vec<f64> = (0..period)
        .map(|r| 1.0 + spec.wave_amplitude * (std::f64::consts::TAU * r as f64 / period as f64).cos())
        .collect();
    (-k_max..=k_max)
        .map(|k| {
            let e = energy(k, prev_change, tick, spec);
            (1.0 + e).powf(exponent) * wave[k.unsigned_abs() as usize % period]
        })
        .collect()
}

/// Mass of the continuous analogue lying outside `±(K + ½)·δ`.
///
/// The energy kernel `(1 + ((x − cΔx_prev)/s)²)^(−(1+α₀)/2)` is a Student-t
/// density with `α₀` degrees of freedom, location `cΔx_prev` and scale `s/√α₀`;
/// the wave factor averages to one and is left out. The Gaussian baseline uses
/// the normal tail. Other kinds put no mass off the grid.
pub fn truncated_mass(spec: &ModelSpec, prev_change: f64, tick: f64) -> f64 {
    let edge = (spec.half_width as f64 + 0.5) * tick;
    let s = energy_scale(prev_change, tick);
    match spec.kind {
        ModelKind::EnergyReference => {
            let t = StudentsT::new(spec.inertia * prev_change, s / spec.alpha0.sqrt(), spec.alpha0)
                .expect("validated constants");
            t.cdf(-edge) + t.sf(edge)
        }
        ModelKind::GaussianWalk => {
            let n = Normal::new(0.0, s).expect("positive scale");
            n.cdf(-edge) + n.sf(edge)
        }
        ModelKind::SignPersistent { .. } | ModelKind::EmpiricalHistogram(_) => 0.0,
    }
}
