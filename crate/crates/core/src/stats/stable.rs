//! Lévy-stable laws: Chambers–Mallows–Stuck generation and two
//! characteristic-function regression estimators.
//!
//! Parameters are reported in the S1 parameterization,
//! `log φ(t) = −γ^α|t|^α (1 − iβ sign(t) tan(πα/2)) + iδt` for `α ≠ 1`.
//! Internally both estimators regress in the S0 form, which stays continuous
//! through `α = 1`, and convert the location at the end.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use rand_distr::Exp1;

use super::StatsError;
use crate::rng;

/// Smallest sample either estimator accepts.
pub const MIN_SAMPLE: usize = 200;
const MAX_ITERATIONS: usize = 10;
const TOLERANCE: f64 = 1e-4;
const ALPHA_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl StableParams {
    /// Plain `key=value` lines.
    pub fn to_key_values(&self) -> String {
        self.to_string()
    }

    /// Location in the S0 parameterization, which stays continuous through α = 1
    /// where the S1 location is ill-conditioned.
    pub fn location_s0(&self) -> f64 {
        if self.alpha == 2.0 || self.beta == 0.0 {
            self.delta
        } else if (self.alpha - 1.0).abs() < 1e-6 {
            self.delta + self.beta * (2.0 / PI) * self.gamma * self.gamma.ln()
        } else {
            self.delta + self.beta * self.gamma * (PI * self.alpha / 2.0).tan()
        }
    }
}

impl fmt::Display for StableParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha={}", self.alpha)?;
        writeln!(f, "beta={}", self.beta)?;
        writeln!(f, "gamma={}", self.gamma)?;
        writeln!(f, "delta={}", self.delta)?;
        writeln!(f, "converged={}", self.converged)?;
        writeln!(f, "iterations={}", self.iterations)
    }
}

fn check_params(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<(), StatsError> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(StatsError::InvalidParams(format!("alpha={alpha} outside (0, 2]")));
    }
    if !(-1.0..=1.0).contains(&beta) {
        return Err(StatsError::InvalidParams(format!("beta={beta} outside [-1, 1]")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(StatsError::InvalidParams(format!("gamma={gamma} must be positive")));
    }
    if !delta.is_finite() {
        return Err(StatsError::InvalidParams("delta must be finite".into()));
    }
    Ok(())
}

/// `n` S1 stable variates by the Chambers–Mallows–Stuck construction.
pub fn sample_stable_cms(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    seed: u64,
    n: usize,
) -> Result<Vec<f64>, StatsError> {
    check_params(alpha, beta, gamma, delta)?;
    let mut rng = rng::seeded(seed);
    let unit_one = |v: f64, w: f64| {
        let a = FRAC_PI_2 + beta * v;
        (2.0 / PI) * (a * v.tan() - beta * ((FRAC_PI_2 * w * v.cos()) / a).ln())
    };
    let zeta = beta * (PI * alpha / 2.0).tan();
    let b = zeta.atan() / alpha;
    let s = (1.0 + zeta * zeta).powf(1.0 / (2.0 * alpha));
    let unit = |v: f64, w: f64| {
        s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
            * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha)
    };
    Ok((0..n)
        .map(|_| {
            // open interval (−π/2, π/2)
            let v = loop {
                let v = PI * (rng.random::<f64>() - 0.5);
                if v > -FRAC_PI_2 {
                    break v;
                }
            };
            let w: f64 = rng.sample(Exp1);
            if alpha == 1.0 {
                gamma * unit_one(v, w) + (2.0 / PI) * beta * gamma * gamma.ln() + delta
            } else {
                gamma * unit(v, w) + delta
            }
        })
        .collect())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Quantile-based starting point: Fama–Roll scale `(x.72 − x.28)/1.654`
/// and the median as centre.
fn initial_scale_location(sample: &[f64]) -> Result<(f64, f64), StatsError> {
    if sample.len() < MIN_SAMPLE {
        return Err(StatsError::TooShort { needed: MIN_SAMPLE, got: sample.len() });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::InvalidParams("sample contains non-finite values".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile(&sorted, 0.5);
    let mut scale = (quantile(&sorted, 0.72) - quantile(&sorted, 0.28)) / 1.654;
    if scale <= 0.0 {
        // heavy ties (e.g. tick data): fall back to mean absolute deviation
        scale = sorted.iter().map(|x| (x - median).abs()).sum::<f64>() / sorted.len() as f64;
    }
    if scale.is_nan() || scale <= 0.0 {
        return Err(StatsError::ZeroScale);
    }
    Ok((scale, median))
}

/// Empirical characteristic function of `(x − centre)/scale` at `t`.
fn ecf(sample: &[f64], centre: f64, scale: f64, t: f64) -> (f64, f64) {
    let (mut re, mut im) = (0.0, 0.0);
    for x in sample {
        let (s, c) = (t * (x - centre) / scale).sin_cos();
        re += c;
        im += s;
    }
    let n = sample.len() as f64;
    (re / n, im / n)
}

/// Ordinary least squares for `y = a + b·x`.
fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return Err(StatsError::Regression("fewer than two usable frequencies"));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(StatsError::Regression("degenerate frequency grid"));
    }
    let b = sxy / sxx;
    Ok((my - b * mx, b))
}

/// Least squares for `z = p·u + q·h` (no intercept).
fn fit_two(u: &[f64], h: &[f64], z: &[f64]) -> Result<(f64, f64), StatsError> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (uu, uh, hh) = (dot(u, u), dot(u, h), dot(h, h));
    let (uz, hz) = (dot(u, z), dot(h, z));
    let det = uu * hh - uh * uh;
    if det.abs() <= 1e-14 * uu * hh {
        // skew regressor vanishes (α = 2): location only
        return Ok((uz / uu, 0.0));
    }
    Ok(((hh * uz - uh * hz) / det, (uu * hz - uh * uz) / det))
}

/// Step 1: `ln(−ln|φ(t)|²) = ln(2γ^α) + α ln t` on standardized data.
/// Returns `(α, γ)` in standardized units.
fn regress_alpha(sample: &[f64], centre: f64, scale: f64, ts: &[f64]) -> Result<(f64, f64), StatsError> {
    let (mut x, mut y) = (Vec::with_capacity(ts.len()), Vec::with_capacity(ts.len()));
    for &t in ts {
        let (re, im) = ecf(sample, centre, scale, t);
        let m2 = re * re + im * im;
        if m2 > 0.0 && m2 < 1.0 {
            x.push(t.ln());
            y.push((-m2.ln()).ln());
        }
    }
    let (intercept, slope) = fit_line(&x, &y)?;
    let alpha = slope.clamp(ALPHA_FLOOR, 2.0);
    let gamma = (intercept.exp() / 2.0).powf(1.0 / alpha);
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(StatsError::Regression("scale estimate not finite"));
    }
    Ok((alpha, gamma))
}

/// `tan(πα/2)(|u|^α − |u|)·sign(u)`, continuous through α = 1.
fn skew_regressor(alpha: f64, u: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-6 {
        -(2.0 / PI) * u * u.abs().ln()
    } else {
        (PI * alpha / 2.0).tan() * (u.abs().powf(alpha) - u.abs()) * u.signum()
    }
}

/// Step 2: unwrapped phase `arg φ(u) = δ₀u + β·tan(πα/2)(u^α − u)` on data
/// standardized to unit scale. Returns `(β, δ₀)` in standardized units (S0).
fn regress_skew(sample: &[f64], centre: f64, scale: f64, alpha: f64, us: &[f64]) -> Result<(f64, f64), StatsError> {
    let mut z = Vec::with_capacity(us.len());
    let mut offset = 0.0;
    let mut last = 0.0;
    for &u in us {
        let (re, im) = ecf(sample, centre, scale, u);
        let mut phase = im.atan2(re) + offset;
        while phase - last > PI {
            phase -= 2.0 * PI;
            offset -= 2.0 * PI;
        }
        while phase - last < -PI {
            phase += 2.0 * PI;
            offset += 2.0 * PI;
        }
        last = phase;
        z.push(phase);
    }
    let h: Vec<f64> = us.iter().map(|&u| skew_regressor(alpha, u)).collect();
    let (location, beta) = fit_two(us, &h, &z)?;
    Ok((beta.clamp(-1.0, 1.0), location))
}

/// S0 location → S1 location.
fn s0_to_s1(alpha: f64, beta: f64, gamma: f64, delta0: f64) -> f64 {
    if alpha == 2.0 || beta == 0.0 {
        delta0
    } else if (alpha - 1.0).abs() < 1e-6 {
        delta0 - beta * (2.0 / PI) * gamma * gamma.ln()
    } else {
        delta0 - beta * gamma * (PI * alpha / 2.0).tan()
    }
}

/// Regression grid sizes from Koutrouvelis' tables: rows are α, columns are
/// sample sizes 200, 800, 1600.
const K_ALPHAS: [f64; 8] = [1.9, 1.5, 1.3, 1.1, 0.9, 0.7, 0.5, 0.3];
const K_TABLE: [[f64; 3]; 8] = [
    [9.0, 9.0, 10.0],
    [11.0, 11.0, 11.0],
    [22.0, 16.0, 14.0],
    [24.0, 18.0, 15.0],
    [28.0, 22.0, 18.0],
    [30.0, 24.0, 20.0],
    [86.0, 68.0, 56.0],
    [134.0, 124.0, 118.0],
];
const L_ALPHAS: [f64; 7] = [1.9, 1.5, 1.1, 0.9, 0.7, 0.5, 0.3];
const L_TABLE: [[f64; 3]; 7] = [
    [9.0, 10.0, 11.0],
    [12.0, 14.0, 15.0],
    [16.0, 18.0, 17.0],
    [14.0, 14.0, 14.0],
    [24.0, 16.0, 16.0],
    [40.0, 38.0, 36.0],
    [70.0, 68.0, 62.0],
];
const TABLE_SIZES: [f64; 3] = [200.0, 800.0, 1600.0];

/// Bilinear interpolation in (α, n), clamped to the table.
fn table_points(alphas: &[f64], table: &[[f64; 3]], alpha: f64, n: usize) -> usize {
    let interp = |xs: &[f64], x: f64| -> (usize, usize, f64) {
        // xs may be ascending or descending
        let lo_val = xs[0].min(xs[xs.len() - 1]);
        let hi_val = xs[0].max(xs[xs.len() - 1]);
        let x = x.clamp(lo_val, hi_val);
        for i in 0..xs.len() - 1 {
            let (a, b) = (xs[i], xs[i + 1]);
            if (a <= x && x <= b) || (b <= x && x <= a) {
                let w = if a == b { 0.0 } else { (x - a) / (b - a) };
                return (i, i + 1, w);
            }
        }
        (xs.len() - 1, xs.len() - 1, 0.0)
    };
    let (r0, r1, wr) = interp(alphas, alpha);
    let (c0, c1, wc) = interp(&TABLE_SIZES, n as f64);
    let row = |r: usize| table[r][c0] * (1.0 - wc) + table[r][c1] * wc;
    (row(r0) * (1.0 - wr) + row(r1) * wr).round() as usize
}

const KW_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

fn finish(alpha: f64, beta: f64, gamma: f64, delta0: f64, converged: bool, iterations: usize) -> StableParams {
    let beta = if alpha >= 2.0 { 0.0 } else { beta };
    StableParams {
        alpha,
        beta,
        gamma,
        delta: s0_to_s1(alpha, beta, gamma, delta0),
        converged,
        iterations,
    }
}

/// Iterative regression on the empirical characteristic function
/// (Koutrouvelis). Frequencies `πk/25`, `k = 1..K` for `α, γ` and `πl/50`,
/// `l = 1..L` for `β, δ`, with `K, L` read from the published tables.
pub fn estimate_stable_koutrouvelis(sample: &[f64]) -> Result<StableParams, StatsError> {
    let (mut scale, mut centre) = initial_scale_location(sample)?;
    let n = sample.len();
    let (mut alpha, _) = regress_alpha(sample, centre, scale, &KW_GRID)?;
    let mut beta = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let k = table_points(&K_ALPHAS, &K_TABLE, alpha, n);
        let ts: Vec<f64> = (1..=k).map(|i| PI * i as f64 / 25.0).collect();
        let (new_alpha, g1) = regress_alpha(sample, centre, scale, &ts)?;
        let new_scale = scale * g1;

        let l = table_points(&L_ALPHAS, &L_TABLE, new_alpha, n);
        let us: Vec<f64> = (1..=l).map(|i| PI * i as f64 / 50.0).collect();
        let (b, d0) = regress_skew(sample, centre, new_scale, new_alpha, &us)?;
        let new_centre = centre + new_scale * d0;

        let done = (new_alpha - alpha).abs() < TOLERANCE && ((new_scale - scale) / scale).abs() < TOLERANCE;
        alpha = new_alpha;
        beta = b;
        scale = new_scale;
        centre = new_centre;
        if done {
            converged = true;
            break;
        }
    }
    Ok(finish(alpha, beta, scale, centre, converged, iterations))
}

/// Single-pass characteristic-function regression (Kogon–Williams) on
/// `t = 0.1, 0.2, …, 1.0`, after quantile-based standardization.
pub fn estimate_stable_kogon_williams(sample: &[f64]) -> Result<StableParams, StatsError> {
    let (scale0, centre0) = initial_scale_location(sample)?;
    let (alpha, g1) = regress_alpha(sample, centre0, scale0, &KW_GRID)?;
    let scale = scale0 * g1;
    let (beta, d0) = regress_skew(sample, centre0, scale, alpha, &KW_GRID)?;
    Ok(finish(alpha, beta, scale, centre0 + scale * d0, true, 1))
}
