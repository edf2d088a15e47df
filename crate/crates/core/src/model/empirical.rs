use crate::ingest::ChangeSeries;

use super::ModelError;

/// Observed next-change frequencies, one histogram per sign of the previous
/// change (down, flat, up). Next changes are rounded to whole ticks and
/// clamped onto the outermost grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalHistogram {
    tick: f64,
    half_width: usize,
    counts: [Vec<f64>; 3],
    pooled: Vec<f64>,
}

fn sign_class(x: f64) -> usize {
    if x < 0.0 {
        0
    } else if x == 0.0 {
        1
    } else {
        2
    }
}

impl EmpiricalHistogram {
    pub fn fit(cs: &ChangeSeries, half_width: usize) -> Result<Self, ModelError> {
        let tick = cs.tick_size();
        let cells = 2 * half_width + 1;
        let mut counts = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
        let mut pooled = vec![0.0; cells];
        let k_max = half_width as i64;
        for w in cs.values().windows(2) {
            let k = ((w[1] / tick).round() as i64).clamp(-k_max, k_max);
            let idx = (k + k_max) as usize;
            counts[sign_class(w[0])][idx] += 1.0;
            pooled[idx] += 1.0;
        }
        if pooled.iter().sum::<f64>() == 0.0 {
            return Err(ModelError::InvalidSpec("empirical_histogram needs at least 2 changes".into()));
        }
        Ok(EmpiricalHistogram { tick, half_width, counts, pooled })
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Normalized frequencies for the given previous change; falls back to the
    /// pooled histogram when that sign class was never observed.
    pub(crate) fn probabilities(&self, prev_change: f64) -> Vec<f64> {
        let row = &self.counts[sign_class(prev_change)];
        let row = if row.iter().any(|c| *c > 0.0) { row } else { &self.pooled };
        let total: f64 = row.iter().sum();
        row.iter().map(|c| c / total).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_rows() {
        let cs = ChangeSeries::new(0, (0..5).collect(), vec![1.0, 2.0, -1.0, 1.0, 900.0], 1.0).unwrap();
        let h = EmpiricalHistogram::fit(&cs, 10).unwrap();
        let up = h.probabilities(3.0);
        // after positive changes: 2, -1, and 900 clamped to +10
        assert_eq!(up[12], 1.0 / 3.0);
        assert_eq!(up[9], 1.0 / 3.0);
        assert_eq!(up[20], 1.0 / 3.0);
        let down = h.probabilities(-0.5);
        assert_eq!(down[11], 1.0);
        // no flat previous change observed → pooled
        assert_eq!(h.probabilities(0.0).iter().sum::<f64>(), 1.0);
    }
}
