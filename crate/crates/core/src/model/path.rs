use std::collections::hash_map::Entry;
use std::collections::HashMap;

use super::{conditional_distribution_on_grid, ModelError, ModelSpec, Sampler};
use crate::rng;

/// Simulate `n` successive changes by iterating the model from `start_k` ticks.
///
/// The grid is the state space: each step draws from the law restricted to
/// `−K..=K` without the truncation budget check. Returned values are in ticks
/// of `tick`.
pub fn simulate_path(spec: &ModelSpec, tick: f64, start_k: i64, n: usize, seed: u64) -> Result<Vec<f64>, ModelError> {
    let k_max = spec.half_width as i64;
    let mut samplers: HashMap<i64, Sampler> = HashMap::new();
    let mut rng = rng::seeded(seed);
    let mut state = start_k.clamp(-k_max, k_max);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let sampler = match samplers.entry(state) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let d = conditional_distribution_on_grid(spec, state as f64 * tick, tick)?;
                e.insert(Sampler::new(&d))
            }
        };
        state = sampler.draw(&mut rng);
        out.push(state as f64 * tick);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_on_grid() {
        let spec = ModelSpec { half_width: 50, ..Default::default() };
        let a = simulate_path(&spec, 0.5, 2, 2_000, 3).unwrap();
        assert_eq!(a, simulate_path(&spec, 0.5, 2, 2_000, 3).unwrap());
        assert!(a.iter().all(|v| (v / 0.5).fract() == 0.0 && v.abs() <= 25.0));
    }

    #[test]
    fn sign_persistent_path_keeps_unit_steps() {
        let a = simulate_path(&ModelSpec::sign_persistent(1.0), 1.0, 1, 100, 0).unwrap();
        assert!(a.iter().all(|v| *v == 1.0));
    }
}
