use super::StatsError;
use crate::model::{conditional_distribution, ConditionalDistribution, ModelSpec};

/// Largest fine grid `scaling_distance` will build.
pub const MAX_FINE_CELLS: usize = 20_000_001;

/// Fold a fine-grid law (tick `δ/factor`) onto the coarse grid `−K..=K`:
/// each fine cell goes to the nearest coarse node, exact midpoints split evenly.
pub fn aggregate_to_coarse(fine: &ConditionalDistribution, factor: usize, coarse_half_width: usize) -> Vec<f64> {
    let f = factor as i64;
    let k = coarse_half_width as i64;
    let mut out = vec![0.0; 2 * coarse_half_width + 1];
    let mut put = |node: i64, mass: f64| out[(node.clamp(-k, k) + k) as usize] += mass;
    for (i, &p) in fine.probabilities().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let m = fine.grid_index(i);
        let (q, r) = (m.div_euclid(f), m.rem_euclid(f));
        match (2 * r).cmp(&f) {
            std::cmp::Ordering::Less => put(q, p),
            std::cmp::Ordering::Greater => put(q + 1, p),
            std::cmp::Ordering::Equal => {
                put(q, 0.5 * p);
                put(q + 1, 0.5 * p);
            }
        }
    }
    out
}

/// Sup-norm distance between the CDFs of two laws on the same grid, each
/// renormalized first.
pub fn cdf_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "grids differ");
    let (ta, tb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
    let (mut ca, mut cb, mut worst) = (0.0, 0.0, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        ca += x / ta;
        cb += y / tb;
        worst = worst.max((ca - cb).abs());
    }
    worst
}

/// Compare the law at tick `δ` with the law at `δ/factor` folded back onto
/// the coarse grid. The fine grid spans the same range (`factor·K` cells each side).
pub fn scaling_distance(spec: &ModelSpec, prev_change: f64, tick: f64, factor: usize) -> Result<f64, StatsError> {
    if factor < 2 {
        return Err(StatsError::InvalidParams(format!("factor must be at least 2, got {factor}")));
    }
    let cells = 2 * spec.half_width * factor + 1;
    if cells > MAX_FINE_CELLS {
        return Err(StatsError::MemoryBudget { cells, limit: MAX_FINE_CELLS });
    }
    let coarse = conditional_distribution(spec, prev_change, tick)?;
    let fine_spec = ModelSpec { half_width: spec.half_width * factor, ..spec.clone() };
    let fine = conditional_distribution(&fine_spec, prev_change, tick / factor as f64)?;
    let folded = aggregate_to_coarse(&fine, factor, spec.half_width);
    Ok(cdf_distance(coarse.probabilities(), &folded))
}
