use std::io::Write;

use super::StatsError;
use crate::ingest::ChangeSeries;

pub const MIN_PAIRS: usize = 100;

/// 2-D histogram of successive change pairs `(Δx_prev, Δx_next)`.
///
/// Rows index the previous change, columns the next one.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationField {
    pub prev_edges: Vec<f64>,
    pub next_edges: Vec<f64>,
    pub counts: Vec<Vec<f64>>,
    pub smoothed: Vec<Vec<f64>>,
}

impl CorrelationField {
    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    /// Smoothed values rescaled to [0, 1] (min-max); all zeros when flat.
    pub fn rescaled(&self) -> Vec<Vec<f64>> {
        let (lo, hi) = self
            .smoothed
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let span = hi - lo;
        self.smoothed
            .iter()
            .map(|row| row.iter().map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 }).collect())
            .collect()
    }

    /// One header line with both edge lists, then the rescaled grid.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let join = |e: &[f64]| e.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "# prev_edges={};next_edges={}", join(&self.prev_edges), join(&self.next_edges))?;
        for row in self.rescaled() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Quantile edges `[min, q₁, …, max]`. Repeated inner quantiles collapse, so
/// heavily tied data gets fewer bins; the top bin may hold a single value.
fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let mut edges = vec![min];
    for i in 1..bins {
        let pos = (i as f64 / bins as f64 * (n - 1) as f64).round() as usize;
        let e = sorted[pos];
        if e > *edges.last().expect("non-empty") {
            edges.push(e);
        }
    }
    edges.push(max);
    edges
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    let inner = &edges[1..edges.len() - 1];
    inner.partition_point(|e| *e <= x)
}

/// One binomial (¼, ½, ¼) pass along a line; mass leaving an end is
/// reflected back so the total is preserved.
fn smooth_line(line: &mut [f64]) {
    let n = line.len();
    if n < 2 {
        return;
    }
    let mut out = vec![0.0; n];
    for (i, &m) in line.iter().enumerate() {
        out[i] += 0.5 * m;
        out[if i == 0 { 0 } else { i - 1 }] += 0.25 * m;
        out[if i + 1 == n { i } else { i + 1 }] += 0.25 * m;
    }
    line.copy_from_slice(&out);
}

fn smooth(grid: &mut [Vec<f64>], passes: usize) {
    let cols = grid.first().map_or(0, Vec::len);
    for _ in 0..passes {
        for row in grid.iter_mut() {
            smooth_line(row);
        }
        for c in 0..cols {
            let mut col: Vec<f64> = grid.iter().map(|r| r[c]).collect();
            smooth_line(&mut col);
            for (r, v) in grid.iter_mut().zip(col) {
                r[c] = v;
            }
        }
    }
}

pub fn correlation_field_of(values: &[f64], bins: usize, smoothing_passes: usize) -> Result<CorrelationField, StatsError> {
    let pairs = values.len().saturating_sub(1);
    if pairs < MIN_PAIRS {
        return Err(StatsError::TooShort { needed: MIN_PAIRS + 1, got: values.len() });
    }
    let bins = bins.max(1);
    let prev_edges = quantile_edges(&values[..pairs], bins);
    let next_edges = quantile_edges(&values[1..], bins);
    let mut counts = vec![vec![0.0; next_edges.len() - 1]; prev_edges.len() - 1];
    for w in values.windows(2) {
        counts[bin_of(&prev_edges, w[0])][bin_of(&next_edges, w[1])] += 1.0;
    }
    let mut smoothed = counts.clone();
    smooth(&mut smoothed, smoothing_passes);
    Ok(CorrelationField { prev_edges, next_edges, counts, smoothed })
}

/// Correlation field over quantile bins, smoothed by repeated separable
/// binomial passes.
pub fn correlation_field(cs: &ChangeSeries, bins: usize, smoothing_passes: usize) -> Result<CorrelationField, StatsError> {
    correlation_field_of(cs.values(), bins, smoothing_passes)
}
