//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its PASS/FAIL line; exits nonzero if any fails.

use std::f64::consts::TAU;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;
use swing_core::harness::{
    generate, permutation_baseline, run_backtest, write_report_csv, SYNTHETIC_START_NS,
};
use swing_core::ingest::{
    cumulate, parse_bar_csv, partition, read_canonical, to_changes, write_canonical,
};
use swing_core::model::{conditional_distribution, forecast_direction_mass, sample, simulate_path};
use swing_core::rng::seeded;
use swing_core::stats::{
    autocorrelation_of, correlation_field_of, estimate_stable_kogon_williams,
    estimate_stable_koutrouvelis, sample_stable_cms, scaling_distance, StableParams, StatsError,
};
use swing_core::{
    ChangeSeries, Direction, ForecastMode, Granularity, ModelKind, ModelSpec, PriceSeries,
    SyntheticKind, SyntheticSpec, Timeframe, TransitionScore,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn null_control() -> Outcome {
    let start = Instant::now();
    let cs = generate(&SyntheticSpec { kind: SyntheticKind::GaussianWalk, length: 300_000, seed: 2024 })
        .map_err(err)?
        .drop_zeros();
    let spec = ModelSpec::default();
    let orig = run_backtest(&cs, &spec, ForecastMode::Mass, Granularity::Month, 2024).map_err(err)?;
    let perm = permutation_baseline(&cs, &spec, ForecastMode::Mass, Granularity::Month, 2024).map_err(err)?;
    let elapsed = start.elapsed();
    let detail = format!(
        "skewness {:+.4} / permuted {:+.4} pp in {:.1}s",
        orig.skewness,
        perm.skewness,
        elapsed.as_secs_f64()
    );
    ensure(orig.skewness.abs() <= 0.3 && perm.skewness.abs() <= 0.3, detail.clone())?;
    ensure(elapsed <= Duration::from_secs(300), detail.clone())?;
    Ok(detail)
}

fn permutation_null() -> Outcome {
    let cs = generate(&SyntheticSpec { kind: SyntheticKind::SignPersistent { p: 0.6 }, length: 100_000, seed: 7 })
        .map_err(err)?;
    let spec = ModelSpec::default();
    let orig = run_backtest(&cs, &spec, ForecastMode::Mass, Granularity::Month, 7).map_err(err)?;
    let perm = permutation_baseline(&cs, &spec, ForecastMode::Mass, Granularity::Month, 7).map_err(err)?;
    let detail = format!("permuted skewness {:+.4} pp (original {:+.4})", perm.skewness, orig.skewness);
    ensure(perm.skewness.abs() <= 0.3, detail.clone())?;
    Ok(detail)
}

fn sensitivity() -> Outcome {
    let spec = ModelSpec::sign_persistent(0.52);
    let mut skews = Vec::new();
    for seed in 0..10u64 {
        let cs = generate(&SyntheticSpec { kind: SyntheticKind::SignPersistent { p: 0.52 }, length: 100_000, seed })
            .map_err(err)?;
        let r = run_backtest(&cs, &spec, ForecastMode::Mass, Granularity::Month, seed).map_err(err)?;
        skews.push(r.skewness);
    }
    let mean = skews.iter().sum::<f64>() / skews.len() as f64;
    let detail = format!("mean skewness {mean:+.4} pp over 10 seeds (expected +2.0)");
    ensure((mean - 2.0).abs() <= 0.3, detail.clone())?;
    Ok(detail)
}

/// Up/down masses of the energy model written out directly: kernel
/// `(1 + ((k − c·Δ)/s)²)^(−(1+α₀)/2)` times `1 + a·cos(2π|k|/L)` on the unit grid.
fn energy_oracle_direction(prev: f64) -> Direction {
    let (alpha0, c, a, l, k_max) = (0.8, 0.5, 0.25, 5.0, 600);
    let s = prev.abs().max(1.0);
    let w = |k: i64| {
        let d = (k as f64 - c * prev) / s;
        (1.0 + d * d).powf(-(1.0 + alpha0) / 2.0) * (1.0 + a * (TAU * k.abs() as f64 / l).cos())
    };
    let (mut up, mut down) = (0.0, 0.0);
    for k in 1..=k_max {
        up += w(k);
        down += w(-k);
    }
    let total = up + down + w(0);
    let diff = (up - down) / total;
    if diff > 1e-12 {
        Direction::Up
    } else if diff < -1e-12 {
        Direction::Down
    } else {
        Direction::Tie
    }
}

fn brute_force(values: &[f64], predict: impl Fn(f64) -> Direction) -> TransitionScore {
    let mut s = TransitionScore::default();
    for i in 1..values.len() {
        let (prev, next) = (values[i - 1], values[i]);
        let p = predict(prev);
        if p == Direction::Tie || next == 0.0 {
            s.right += 0.5;
            s.wrong += 0.5;
        } else if (p == Direction::Up) == (next > 0.0) {
            s.right += 1.0;
        } else {
            s.wrong += 1.0;
        }
    }
    s
}

fn scoring_oracle() -> Outcome {
    let mut rng = seeded(99);
    let same_sign = |prev: f64| {
        if prev > 0.0 {
            Direction::Up
        } else if prev < 0.0 {
            Direction::Down
        } else {
            Direction::Tie
        }
    };
    let models: [(ModelSpec, &dyn Fn(f64) -> Direction); 3] = [
        (ModelSpec::sign_persistent(0.7), &same_sign),
        (ModelSpec::default(), &energy_oracle_direction),
        (ModelSpec::gaussian_walk(), &|_| Direction::Tie),
    ];
    let mut halves = 0;
    for case in 0..100 {
        let n = rng.random_range(2..=12);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-3i64..=3) as f64).collect();
        let ts = (0..n as i64).map(|i| SYNTHETIC_START_NS + i * 1_000_000_000).collect();
        let cs = ChangeSeries::new(0, ts, values.clone(), 1.0).map_err(err)?;
        for (spec, oracle) in &models {
            let expected = brute_force(&values, oracle);
            let r = run_backtest(&cs, spec, ForecastMode::Mass, Granularity::Month, case).map_err(err)?;
            ensure(r.rows.len() == 1, "expected one period")?;
            let got = r.rows[0].score;
            ensure(
                got == expected,
                format!("case {case} {}: {values:?} gave {got:?}, oracle {expected:?}", spec.kind.name()),
            )?;
            ensure(got.total() == (n - 1) as f64, format!("case {case}: conservation"))?;
            if got.right.fract() != 0.0 {
                halves += 1;
            }
        }
    }
    Ok(format!("300 series-model pairs match exactly ({halves} with half counts)"))
}

fn estimator_recovery() -> Outcome {
    type Estimator = fn(&[f64]) -> Result<StableParams, StatsError>;
    let estimators: [(&str, Estimator); 2] = [
        ("koutrouvelis", estimate_stable_koutrouvelis),
        ("kogon_williams", estimate_stable_kogon_williams),
    ];
    // (alpha, seed, accepted range)
    let cases = [(2.0, 1, 1.9, 2.0), (1.0, 2, 0.95, 1.05), (1.5, 3, 1.4, 1.6), (0.8, 4, 0.68, 0.92)];
    let mut lines = Vec::new();
    let mut slowest = Duration::ZERO;
    for (alpha, seed, lo, hi) in cases {
        let x = sample_stable_cms(alpha, 0.0, 1.0, 0.0, seed, 10_000).map_err(err)?;
        for (name, est) in estimators {
            let t = Instant::now();
            let p = est(&x).map_err(err)?;
            slowest = slowest.max(t.elapsed());
            ensure((lo..=hi).contains(&p.alpha), format!("{name} α={alpha}: got {:.4}", p.alpha))?;
            lines.push(format!("{name}({alpha})={:.3}", p.alpha));
        }
    }
    ensure(slowest < Duration::from_secs(10), format!("slowest fit {slowest:?}"))?;
    Ok(format!("{}; slowest fit {:.3}s", lines.join(" "), slowest.as_secs_f64()))
}

fn model_properties() -> Outcome {
    let spec = ModelSpec::default();
    let k_max = spec.half_width as i64;
    let l = spec.level_spacing as i64;
    let mut notes = Vec::new();

    for prev in [-12.0, -10.0, -3.0, -1.0, 0.0, 0.5, 1.0, 10.0, 12.5] {
        let d = conditional_distribution(&spec, prev, 1.0).map_err(err)?;
        let m = conditional_distribution(&spec, -prev, 1.0).map_err(err)?;
        let total: f64 = d.probabilities().iter().sum();
        ensure((total - 1.0).abs() <= 1e-12, format!("normalization at {prev}: {total}"))?;
        let worst = (-k_max..=k_max).map(|k| (d.prob(k) - m.prob(-k)).abs()).fold(0.0, f64::max);
        ensure(worst <= 1e-12, format!("mirror at {prev}: {worst:e}"))?;
    }
    for kind in [ModelKind::GaussianWalk, ModelKind::SignPersistent { p: 0.6 }] {
        let d = conditional_distribution(&ModelSpec::with_kind(kind), 3.0, 1.0).map_err(err)?;
        let total: f64 = d.probabilities().iter().sum();
        ensure((total - 1.0).abs() <= 1e-12, "normalization of baseline kinds")?;
    }

    let zero = conditional_distribution(&spec, 0.0, 1.0).map_err(err)?;
    ensure((1..=k_max).all(|k| zero.prob(k) == zero.prob(-k)), "asymmetric at Δ=0")?;
    ensure(forecast_direction_mass(&zero) == Direction::Tie, "no tie at Δ=0")?;

    let d = conditional_distribution(&spec, 10.0, 1.0).map_err(err)?;
    let xs = sample(&d, 17, 100_000);
    for (name, a) in [
        ("koutrouvelis", estimate_stable_koutrouvelis(&xs).map_err(err)?.alpha),
        ("kogon_williams", estimate_stable_kogon_williams(&xs).map_err(err)?.alpha),
    ] {
        ensure(a > 0.4 && a < 1.3, format!("{name} α̂={a:.4} outside (0.4, 1.3)"))?;
        notes.push(format!("α̂ {name} {a:.3}"));
    }

    let asym = (2 * k_max / 3..=k_max)
        .map(|k| ((d.prob(k) - d.prob(-k)) / d.prob(k)).abs())
        .fold(0.0, f64::max);
    ensure(asym <= 0.05, format!("outer-third asymmetry {asym:.4}"))?;
    notes.push(format!("asymmetry {asym:.4}"));

    // multiples of L keep the wave factor equal in both cells of the ratio
    let target = 1.0 + spec.alpha0;
    for k in (k_max / 3..=k_max / 2).filter(|k| k % l == 0) {
        for sign in [1, -1] {
            let exp = (d.prob(sign * k) / d.prob(sign * 2 * k)).log2();
            ensure((exp - target).abs() <= 0.1 * target, format!("tail exponent at k={}: {exp:.4}", sign * k))?;
        }
    }

    for prev in [0.0, 10.0, -7.0] {
        let d = conditional_distribution(&spec, prev, 1.0).map_err(err)?;
        let half = l / 2;
        let ratio = |k: i64| {
            let ma: f64 = (k - half..=k + half).map(|j| d.prob(j)).sum::<f64>() / l as f64;
            d.prob(k) / ma
        };
        let lo = -k_max + half + 1;
        let hi = k_max - half - 1;
        let mut maxima = 0;
        for k in lo..=hi {
            let r = ratio(k);
            if r > ratio(k - 1) && r > ratio(k + 1) {
                maxima += 1;
                let off = k.rem_euclid(l).min(l - k.rem_euclid(l));
                ensure(off <= 1, format!("wave maximum at k={k} for Δ={prev}"))?;
            }
        }
        ensure(maxima > 0, "no wave maxima found")?;
    }

    let n = 100_000;
    let path = simulate_path(&spec, 1.0, 10, n, 31).map_err(err)?;
    let acf = autocorrelation_of(&path, 20, false).map_err(err)?;
    let worst = (5..=20).filter_map(|t| acf.get(t)).fold(0.0, |m: f64, r| m.max(r.abs()));
    ensure(worst <= 0.05, format!("path |ρ(τ≥5)| = {worst:.4}"))?;
    let sq = autocorrelation_of(&path, 1, true).map_err(err)?.get(1).ok_or("missing lag 1")?;
    let bound = 3.0 / (n as f64).sqrt();
    ensure(sq > bound, format!("squared lag-1 {sq:.4} ≤ {bound:.4}"))?;
    notes.push(format!("path max|ρ(τ≥5)| {worst:.4}, squared ρ(1) {sq:.4}"));

    let dist = scaling_distance(&spec, 10.0, 1.0, 2).map_err(err)?;
    ensure(dist <= 0.05, format!("scaling distance {dist:.4}"))?;
    notes.push(format!("scaling {dist:.4}"));
    Ok(notes.join(", "))
}

fn d1_file() -> String {
    use chrono::{Duration as Days, NaiveDate};
    let mut rng = seeded(364);
    let mut text = String::from("<TICKER>,<PER>,<DATE>,<TIME>,<OPEN>,<HIGH>,<LOW>,<CLOSE>,<VOL>\n");
    let mut close: i64 = 13_184;
    let mut row = |date: NaiveDate, close: i64| {
        let px = format!("{}.{:04}", close / 10_000, close % 10_000);
        text.push_str(&format!("EURUSD,D,{},000000,{px},{px},{px},{px},0\n", date.format("%Y%m%d")));
    };
    row(NaiveDate::from_ymd_opt(2012, 12, 31).expect("date"), close);
    let first = NaiveDate::from_ymd_opt(2013, 1, 1).expect("date");
    let repeats = [40, 97, 150, 222, 301];
    for i in 0..364 {
        if !repeats.contains(&i) {
            let step = rng.random_range(1..=80) * if rng.random::<bool>() { 1 } else { -1 };
            close += step;
        }
        row(first + Days::days(i), close);
    }
    text
}

fn ingestion_fidelity() -> Outcome {
    let mut rng = seeded(5);
    for trial in 0..50 {
        let n = rng.random_range(2..500);
        let mut level: i64 = rng.random_range(1_000..1_000_000);
        let ticks: Vec<i64> = (0..n)
            .map(|_| {
                level = (level + rng.random_range(-50..=50)).max(1);
                level
            })
            .collect();
        let ts: Vec<i64> = (0..n as i64).map(|i| SYNTHETIC_START_NS + i * 60_000_000_000).collect();
        let decimals = rng.random_range(0..=6);
        let ps = PriceSeries::new("X", Timeframe::M1, decimals, ts, ticks.clone()).map_err(err)?;
        ensure(cumulate(ticks[0], &ps.tick_differences()) == ticks, format!("trial {trial}: cumsum"))?;
        let cs = to_changes(&ps, false).map_err(err)?;
        let mut buf = Vec::new();
        write_canonical(&cs, &mut buf).map_err(err)?;
        let back = read_canonical(buf.as_slice(), 0, Some(ps.tick_size())).map_err(err)?;
        ensure(back.values() == cs.values(), format!("trial {trial}: canonical round trip"))?;
        let rebuilt: Vec<i64> =
            cumulate(ticks[0], &back.values().iter().map(|v| (v / ps.tick_size()).round() as i64).collect::<Vec<_>>());
        ensure(rebuilt == ticks, format!("trial {trial}: rebuild from file"))?;
    }

    let ps = parse_bar_csv(d1_file().as_bytes(), Some(Timeframe::D1)).map_err(err)?;
    let cs = to_changes(&ps, true).map_err(err)?;
    let parts = partition(&cs, Granularity::Year);
    ensure(parts.len() == 1 && parts[0].0 == "2013", format!("periods {:?}", parts.iter().map(|p| &p.0).collect::<Vec<_>>()))?;
    let (n_orig, n_nz) = (parts[0].1.original_len(), parts[0].1.nonzero_len());
    ensure((n_orig, n_nz) == (364, 359), format!("2013: {n_orig}/{n_nz}"))?;
    let r = run_backtest(&cs, &ModelSpec::default(), ForecastMode::Mass, Granularity::Year, 1).map_err(err)?;
    ensure(r.warnings.iter().any(|w| w.contains("359")), "no small-sample warning for 359 entries")?;
    Ok(format!("50 random round trips exact; D1 2013 row {n_orig}/{n_nz}"))
}

fn determinism() -> Outcome {
    let run_all = || -> Result<Vec<Vec<u8>>, String> {
        let mut out = Vec::new();
        let cs = generate(&SyntheticSpec { kind: SyntheticKind::GaussianWalk, length: 50_000, seed: 8 }).map_err(err)?;
        let mut sim = Vec::new();
        write_canonical(&cs, &mut sim).map_err(err)?;
        out.push(sim);
        let spec = ModelSpec::default();
        for mode in [ForecastMode::Mass, ForecastMode::MonteCarlo(25)] {
            let a = run_backtest(&cs, &spec, mode, Granularity::Month, 8).map_err(err)?;
            let p = permutation_baseline(&cs, &spec, mode, Granularity::Month, 8).map_err(err)?;
            let mut buf = Vec::new();
            write_report_csv(&a, Some(&p), &mut buf).map_err(err)?;
            out.push(buf);
        }
        let d = conditional_distribution(&spec, 10.0, 1.0).map_err(err)?;
        let mut buf = Vec::new();
        d.write_csv(&mut buf).map_err(err)?;
        out.push(buf);
        let path = simulate_path(&spec, 1.0, 10, 20_000, 8).map_err(err)?;
        let mut buf = Vec::new();
        autocorrelation_of(&path, 20, true).map_err(err)?.write_csv(&mut buf).map_err(err)?;
        correlation_field_of(&path, 16, 2).map_err(err)?.write_csv(&mut buf).map_err(err)?;
        buf.extend(estimate_stable_koutrouvelis(&path).map_err(err)?.to_key_values().bytes());
        out.push(buf);
        Ok(out)
    };
    let pool = |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(err);
    let first = run_all()?;
    let again = run_all()?;
    let single = pool(1)?.install(run_all)?;
    let wide = pool(7)?.install(run_all)?;
    ensure(first == again, "repeat run differs")?;
    ensure(first == single && first == wide, "output depends on thread count")?;
    Ok(format!("{} artifacts byte-identical across repeats and 1/7/default threads", first.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("null control (gaussian walk)", null_control),
        ("permutation null", permutation_null),
        ("sensitivity (sign persistence 0.52)", sensitivity),
        ("scoring oracle", scoring_oracle),
        ("estimator recovery", estimator_recovery),
        ("model property suite", model_properties),
        ("ingestion fidelity", ingestion_fidelity),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
