use std::fmt;
use std::io::Write;

use rand::Rng;

use super::energy::{energy_scale, energy_weights, truncated_mass, TRUNCATION_BUDGET};
use super::{ModelError, ModelKind, ModelSpec};
use crate::rng;

/// Direction decisions closer than this are ties.
pub const TIE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Tie,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Tie => "tie",
        })
    }
}

/// Discrete law of the next change on the grid `{k·δ : k = −K..=K}`,
/// given a fixed previous change.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    prev_change: f64,
    tick: f64,
    half_width: usize,
    probabilities: Vec<f64>,
}

impl ConditionalDistribution {
    /// Build from raw non-negative weights over `−K..=K`.
    pub fn from_weights(prev_change: f64, tick: f64, weights: Vec<f64>) -> Result<Self, ModelError> {
        if !(tick > 0.0 && tick.is_finite()) {
            return Err(ModelError::BadTickSize(tick));
        }
        if weights.len().is_multiple_of(2) || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(ModelError::InvalidSpec("weights must be finite, non-negative, odd-length".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(ModelError::InvalidSpec("weights sum to zero".into()));
        }
        Ok(ConditionalDistribution {
            prev_change,
            tick,
            half_width: weights.len() / 2,
            probabilities: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Unit mass at grid index `k`.
    pub fn point_mass(prev_change: f64, tick: f64, half_width: usize, k: i64) -> Result<Self, ModelError> {
        let mut w = vec![0.0; 2 * half_width + 1];
        let idx = usize::try_from(k + half_width as i64)
            .ok()
            .filter(|i| *i < w.len())
            .ok_or_else(|| ModelError::InvalidSpec(format!("k={k} outside ±{half_width}")))?;
        w[idx] = 1.0;
        Self::from_weights(prev_change, tick, w)
    }

    pub fn prev_change(&self) -> f64 {
        self.prev_change
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Probability of `k` ticks; zero off the grid.
    pub fn prob(&self, k: i64) -> f64 {
        let idx = k + self.half_width as i64;
        if idx < 0 {
            return 0.0;
        }
        self.probabilities.get(idx as usize).copied().unwrap_or(0.0)
    }

    pub fn grid_index(&self, i: usize) -> i64 {
        i as i64 - self.half_width as i64
    }

    pub fn value(&self, k: i64) -> f64 {
        k as f64 * self.tick
    }

    /// `(P⁺, P⁻)`, both summed outward from zero so a mirror-symmetric law
    /// yields bitwise-equal masses.
    pub fn directional_masses(&self) -> (f64, f64) {
        let c = self.half_width;
        let (mut up, mut down) = (0.0, 0.0);
        for j in 1..=c {
            up += self.probabilities[c + j];
            down += self.probabilities[c - j];
        }
        (up, down)
    }

    /// Write `k,delta_x,probability` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,delta_x,probability")?;
        for (i, p) in self.probabilities.iter().enumerate() {
            let k = self.grid_index(i);
            writeln!(out, "{k},{},{p}", self.value(k))?;
        }
        Ok(())
    }
}

fn weights(spec: &ModelSpec, prev_change: f64, tick: f64) -> Result<Vec<f64>, ModelError> {
    let k_max = spec.half_width;
    Ok(match &spec.kind {
        ModelKind::EnergyReference => energy_weights(spec, prev_change, tick),
        ModelKind::GaussianWalk => {
            let sd = energy_scale(prev_change, tick);
            let half: Vec<f64> = (0..=k_max)
                .map(|k| {
                    let z = k as f64 * tick / sd;
                    (-0.5 * z * z).exp()
                })
                .collect();
            half[1..].iter().rev().chain(half.iter()).copied().collect()
        }
        ModelKind::SignPersistent { p } => {
            let mut w = vec![0.0; 2 * k_max + 1];
            let (up, down) = if prev_change > 0.0 {
                (*p, 1.0 - p)
            } else if prev_change < 0.0 {
                (1.0 - p, *p)
            } else {
                (0.5, 0.5)
            };
            w[k_max + 1] = up;
            w[k_max - 1] = down;
            w
        }
        ModelKind::EmpiricalHistogram(hist) => {
            let hist = hist.as_ref().ok_or(ModelError::Uncalibrated)?;
            if hist.tick() != tick {
                return Err(ModelError::TickMismatch { built: hist.tick(), requested: tick });
            }
            if hist.half_width() != k_max {
                return Err(ModelError::InvalidSpec("histogram built with a different K".into()));
            }
            hist.probabilities(prev_change)
        }
    })
}

/// Law of the next change given `prev_change` at tick size `tick`.
///
/// Fails with [`ModelError::GridTooSmall`] when the grid would cut off more
/// than [`TRUNCATION_BUDGET`] of the untruncated law.
pub fn conditional_distribution(
    spec: &ModelSpec,
    prev_change: f64,
    tick: f64,
) -> Result<ConditionalDistribution, ModelError> {
    if !(tick > 0.0 && tick.is_finite()) {
        return Err(ModelError::BadTickSize(tick));
    }
    spec.validate()?;
    let mass = truncated_mass(spec, prev_change, tick);
    if mass > TRUNCATION_BUDGET {
        return Err(ModelError::GridTooSmall { mass, half_width: spec.half_width });
    }
    ConditionalDistribution::from_weights(prev_change, tick, weights(spec, prev_change, tick)?)
}

/// The law restricted to the grid and renormalized, with no truncation check.
///
/// For simulations whose state space is the grid itself.
pub fn conditional_distribution_on_grid(
    spec: &ModelSpec,
    prev_change: f64,
    tick: f64,
) -> Result<ConditionalDistribution, ModelError> {
    if !(tick > 0.0 && tick.is_finite()) {
        return Err(ModelError::BadTickSize(tick));
    }
    spec.validate()?;
    ConditionalDistribution::from_weights(prev_change, tick, weights(spec, prev_change, tick)?)
}

/// Inverse-CDF sampler over grid indices.
#[derive(Debug, Clone)]
pub struct Sampler {
    cdf: Vec<f64>,
    last: usize,
    half_width: i64,
}

impl Sampler {
    pub fn new(dist: &ConditionalDistribution) -> Self {
        let mut acc = 0.0;
        let cdf: Vec<f64> = dist
            .probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last = dist.probabilities.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        Sampler { cdf, last, half_width: dist.half_width as i64 }
    }

    /// Draw a grid index `k`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|c| *c <= u).min(self.last);
        i as i64 - self.half_width
    }
}

/// `n` independent draws (as values `k·δ`), deterministic in `seed`.
pub fn sample(dist: &ConditionalDistribution, seed: u64, n: usize) -> Vec<f64> {
    let sampler = Sampler::new(dist);
    let mut rng = rng::seeded(seed);
    (0..n).map(|_| dist.value(sampler.draw(&mut rng))).collect()
}

/// Direction carrying more probability mass.
pub fn forecast_direction_mass(dist: &ConditionalDistribution) -> Direction {
    let (up, down) = dist.directional_masses();
    if up - down > TIE_THRESHOLD {
        Direction::Up
    } else if down - up > TIE_THRESHOLD {
        Direction::Down
    } else {
        Direction::Tie
    }
}

/// Majority sign among `repetitions` nonzero draws; equal counts tie.
pub fn forecast_direction_mc(dist: &ConditionalDistribution, seed: u64, repetitions: usize) -> Direction {
    let sampler = Sampler::new(dist);
    let mut rng = rng::seeded(seed);
    let mut balance: i64 = 0;
    for _ in 0..repetitions {
        balance += sampler.draw(&mut rng).signum();
    }
    match balance.signum() {
        1 => Direction::Up,
        -1 => Direction::Down,
        _ => Direction::Tie,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> ModelSpec {
        ModelSpec::default()
    }

    #[test]
    fn flat_prev_is_exactly_symmetric() {
        let d = conditional_distribution(&reference(), 0.0, 0.01).unwrap();
        let k = d.half_width() as i64;
        for j in 1..=k {
            assert_eq!(d.prob(j), d.prob(-j));
        }
        assert_eq!(forecast_direction_mass(&d), Direction::Tie);
    }

    #[test]
    fn mode_follows_previous_change() {
        let tick = 1e-4;
        let d = conditional_distribution(&reference(), 10.0 * tick, tick).unwrap();
        let (imax, _) = d
            .probabilities()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let mode = d.grid_index(imax);
        // energy minimum at c·10 = 5 ticks, wave crest at multiples of L = 5
        assert_eq!(mode, 5);
        assert_eq!(forecast_direction_mass(&d), Direction::Up);
        let (up, down) = d.directional_masses();
        assert!(up > down + 0.1, "{up} {down}");
    }

    #[test]
    fn gaussian_walk_is_balanced() {
        for prev in [-3.7, -0.01, 0.0, 0.2, 4.5] {
            let d = conditional_distribution(&ModelSpec::gaussian_walk(), prev, 0.1).unwrap();
            let (up, down) = d.directional_masses();
            assert!((up - down).abs() <= 1e-12);
            assert_eq!(forecast_direction_mass(&d), Direction::Tie);
        }
    }

    #[test]
    fn sign_persistent_forecasts_repeat() {
        let spec = ModelSpec::sign_persistent(0.52);
        let d = conditional_distribution(&spec, 0.3, 0.1).unwrap();
        assert_eq!(forecast_direction_mass(&d), Direction::Up);
        assert!((d.prob(1) - 0.52).abs() < 1e-15);
        let d = conditional_distribution(&spec, -0.3, 0.1).unwrap();
        assert_eq!(forecast_direction_mass(&d), Direction::Down);
        let d = conditional_distribution(&spec, 0.0, 0.1).unwrap();
        assert_eq!(forecast_direction_mass(&d), Direction::Tie);
    }

    #[test]
    fn grid_too_small_is_reported() {
        let err = conditional_distribution(&reference(), 100.0, 1.0).unwrap_err();
        assert!(matches!(err, ModelError::GridTooSmall { half_width: 600, .. }));
        assert!(err.to_string().contains("increase K"));
        // the unchecked variant still builds it
        assert!(conditional_distribution_on_grid(&reference(), 100.0, 1.0).is_ok());
        assert!(matches!(conditional_distribution(&reference(), 1.0, 0.0), Err(ModelError::BadTickSize(_))));
        let uncalibrated = ModelSpec::with_kind(ModelKind::EmpiricalHistogram(None));
        assert_eq!(conditional_distribution(&uncalibrated, 1.0, 1.0).unwrap_err(), ModelError::Uncalibrated);
    }

    #[test]
    fn point_mass_sampling() {
        let d = ConditionalDistribution::point_mass(0.0, 0.5, 10, -3).unwrap();
        assert!(sample(&d, 1, 1000).iter().all(|v| *v == -1.5));
        assert_eq!(forecast_direction_mc(&d, 9, 1), Direction::Down);
        let up = ConditionalDistribution::point_mass(0.0, 1.0, 10, 1).unwrap();
        assert_eq!(forecast_direction_mc(&up, 3, 1), Direction::Up);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = conditional_distribution(&reference(), 3.0, 1.0).unwrap();
        assert_eq!(sample(&d, 11, 500), sample(&d, 11, 500));
        assert_ne!(sample(&d, 11, 500), sample(&d, 12, 500));
    }

    #[test]
    fn two_draw_split_is_a_tie() {
        // half the mass on each of ±δ: find a seed whose first two draws split
        let d = ConditionalDistribution::from_weights(0.0, 1.0, vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let seed = (0..100u64)
            .find(|s| {
                let v = sample(&d, *s, 2);
                v[0] != v[1]
            })
            .unwrap();
        assert_eq!(forecast_direction_mc(&d, seed, 2), Direction::Tie);
    }

    #[test]
    fn sample_frequencies_within_binomial_bound() {
        let d = conditional_distribution(&reference(), 2.0, 1.0).unwrap();
        let n = 100_000;
        let mut counts = vec![0usize; d.probabilities().len()];
        let sampler = Sampler::new(&d);
        let mut r = crate::rng::seeded(2024);
        for _ in 0..n {
            counts[(sampler.draw(&mut r) + d.half_width() as i64) as usize] += 1;
        }
        let within = d
            .probabilities()
            .iter()
            .zip(&counts)
            .filter(|(p, c)| {
                let f = **c as f64 / n as f64;
                (f - **p).abs() <= 4.0 * (**p * (1.0 - **p) / n as f64).sqrt()
            })
            .count();
        assert!(within as f64 >= 0.99 * counts.len() as f64, "{within}/{}", counts.len());
    }

    #[test]
    fn csv_export() {
        let d = ConditionalDistribution::point_mass(0.0, 0.5, 1, 1).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,delta_x,probability\n-1,-0.5,0\n0,0,0\n1,0.5,1\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn normalized_for_every_kind(prev in -20.0f64..20.0, kind in 0usize..3) {
            let spec = match kind {
                0 => reference(),
                1 => ModelSpec::gaussian_walk(),
                _ => ModelSpec::sign_persistent(0.7),
            };
            let d = conditional_distribution(&spec, prev, 1.0).unwrap();
            let total: f64 = d.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(d.probabilities().iter().all(|p| *p >= 0.0));
        }

        #[test]
        fn mirror_invariance(prev in -20.0f64..20.0) {
            let spec = reference();
            let a = conditional_distribution(&spec, prev, 1.0).unwrap();
            let b = conditional_distribution(&spec, -prev, 1.0).unwrap();
            let k = spec.half_width as i64;
            for j in -k..=k {
                prop_assert!((a.prob(j) - b.prob(-j)).abs() <= 1e-12);
            }
        }
    }
}
