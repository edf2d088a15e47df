use rand::Rng;
use rand_distr::StandardNormal;

use super::HarnessError;
use crate::ingest::ChangeSeries;
use crate::rng;
use crate::stats::sample_stable_cms;

/// 2000-01-01T00:00:00Z in nanoseconds.
pub const SYNTHETIC_START_NS: i64 = 946_684_800_000_000_000;
pub const SYNTHETIC_STEP_NS: i64 = 60_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// i.i.d. standard normal changes.
    GaussianWalk,
    /// i.i.d. symmetric stable changes with unit scale.
    StableWalk { alpha: f64 },
    /// ±1 changes; each repeats the previous sign with probability `p`.
    SignPersistent { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub length: usize,
    pub seed: u64,
}

/// Generate a synthetic change series on a one-minute clock.
pub fn generate(spec: &SyntheticSpec) -> Result<ChangeSeries, HarnessError> {
    let bad = |m: String| Err(HarnessError::InvalidSynthetic(m));
    if spec.length < 2 {
        return bad(format!("length must be at least 2, got {}", spec.length));
    }
    let n = spec.length;
    let (values, tick) = match spec.kind {
        SyntheticKind::GaussianWalk => {
            let mut r = rng::seeded(spec.seed);
            ((0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect(), 0.01)
        }
        SyntheticKind::StableWalk { alpha } => {
            if !(alpha > 0.0 && alpha <= 2.0) {
                return bad(format!("alpha must lie in (0, 2], got {alpha}"));
            }
            let v = sample_stable_cms(alpha, 0.0, 1.0, 0.0, spec.seed, n)
                .map_err(|e| HarnessError::InvalidSynthetic(e.to_string()))?;
            (v, 0.01)
        }
        SyntheticKind::SignPersistent { p } => {
            if !(p > 0.0 && p <= 1.0) {
                return bad(format!("p must lie in (0, 1], got {p}"));
            }
            let mut r = rng::seeded(spec.seed);
            let mut sign = if r.random::<bool>() { 1.0 } else { -1.0 };
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                v.push(sign);
                if r.random::<f64>() >= p {
                    sign = -sign;
                }
            }
            (v, 1.0)
        }
    };
    let ts = (0..n as i64).map(|i| SYNTHETIC_START_NS + i * SYNTHETIC_STEP_NS).collect();
    Ok(ChangeSeries::new(0, ts, values, tick)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::utc;

    #[test]
    fn clock_and_determinism() {
        let s = SyntheticSpec { kind: SyntheticKind::GaussianWalk, length: 100, seed: 3 };
        let a = generate(&s).unwrap();
        assert_eq!(a, generate(&s).unwrap());
        assert_eq!(utc(a.timestamps()[0]).to_rfc3339(), "2000-01-01T00:00:00+00:00");
        assert_eq!(a.timestamps()[1] - a.timestamps()[0], SYNTHETIC_STEP_NS);
        assert_ne!(a, generate(&SyntheticSpec { seed: 4, ..s }).unwrap());
    }

    #[test]
    fn sign_persistence_rate() {
        let p = 0.6;
        let cs = generate(&SyntheticSpec { kind: SyntheticKind::SignPersistent { p }, length: 100_000, seed: 1 }).unwrap();
        let v = cs.values();
        assert!(v.iter().all(|x| x.abs() == 1.0));
        let repeats = v.windows(2).filter(|w| w[0] == w[1]).count() as f64 / (v.len() - 1) as f64;
        let sd = (p * (1.0 - p) / (v.len() - 1) as f64).sqrt();
        assert!((repeats - p).abs() < 4.0 * sd, "{repeats}");
        let all_same = generate(&SyntheticSpec { kind: SyntheticKind::SignPersistent { p: 1.0 }, length: 50, seed: 2 }).unwrap();
        assert!(all_same.values().windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rejects_bad_specs() {
        for kind in [SyntheticKind::SignPersistent { p: 0.0 }, SyntheticKind::StableWalk { alpha: 2.5 }] {
            assert!(generate(&SyntheticSpec { kind, length: 10, seed: 0 }).is_err());
        }
        assert!(generate(&SyntheticSpec { kind: SyntheticKind::GaussianWalk, length: 1, seed: 0 }).is_err());
    }
}
