use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use swing_core::harness::{
    generate, permutation_baseline, run_backtest, write_report_csv, write_skewness_summary,
};
use swing_core::ingest::{parse_bar_csv, parse_tick_csv, read_canonical, read_values, to_changes, PriceRule};
use swing_core::model::{conditional_distribution, sample, simulate_path};
use swing_core::rng::derive;
use swing_core::stats::{
    autocorrelation, autocorrelation_of, correlation_field, correlation_field_of,
    estimate_stable_kogon_williams, estimate_stable_koutrouvelis, scaling_distance, LagCorrelation, StableParams,
    StatsError,
};
use swing_core::{ChangeSeries, ModelSpec, SyntheticSpec, Timeframe};

use crate::config::{input_error, InputFormat, RunConfig};

const PATH_STREAM: u64 = 1 << 32;

/// Output directory plus the bookkeeping that ends up in the manifest.
struct Run {
    out: PathBuf,
    artifacts: Vec<String>,
    notes: Vec<String>,
    warnings: Vec<String>,
}

impl Run {
    fn create(out: &Path) -> anyhow::Result<Run> {
        std::fs::create_dir_all(out)
            .map_err(|e| input_error(format!("cannot create output directory {}: {e}", out.display())))?;
        Ok(Run { out: out.to_path_buf(), artifacts: Vec::new(), notes: Vec::new(), warnings: Vec::new() })
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        body(&mut buf)?;
        let path = self.out.join(name);
        std::fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    /// Manifest: the resolved config as `key=value` (usable as `--config`),
    /// everything else as `#` lines.
    fn finish(mut self, command: &str, cfg: &RunConfig) -> anyhow::Result<()> {
        let mut m = String::new();
        m.push_str(&format!("# command={command}\n# version={}\n", env!("CARGO_PKG_VERSION")));
        let mut entries = cfg.entries.clone();
        for line in cfg.model.to_string().lines() {
            if let Some((k, v)) = line.split_once('=') {
                entries.insert(format!("model.{k}"), v.to_string());
            }
        }
        for (k, v) in &entries {
            m.push_str(&format!("{k}={v}\n"));
        }
        for n in &self.notes {
            m.push_str(&format!("# {n}\n"));
        }
        for a in &self.artifacts {
            m.push_str(&format!("# artifact={a}\n"));
        }
        for w in &self.warnings {
            m.push_str(&format!("# warning={w}\n"));
        }
        let path = self.out.join("manifest.txt");
        std::fs::write(&path, m).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.clear();
        Ok(())
    }
}

struct Dataset {
    name: String,
    cs: ChangeSeries,
    timeframe: Option<Timeframe>,
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn load(cfg: &RunConfig, path: &Path) -> anyhow::Result<Dataset> {
    let file = File::open(path).map_err(|e| input_error(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let bad = |e: swing_core::ingest::IngestError| input_error(format!("{}: {e}", path.display()));
    let changes = |ps: &swing_core::PriceSeries| to_changes(ps, !cfg.keep_zeros).map_err(bad);
    let (name, cs, timeframe) = match cfg.format {
        InputFormat::FinamBar => {
            let ps = parse_bar_csv(reader, None).map_err(bad)?;
            let name = if ps.instrument().is_empty() { file_stem(path) } else { ps.instrument().to_string() };
            (name, changes(&ps)?, Some(ps.timeframe()))
        }
        InputFormat::TickBid | InputFormat::TickMid => {
            let rule = if cfg.format == InputFormat::TickMid { PriceRule::Mid } else { PriceRule::Bid };
            let ps = parse_tick_csv(reader, &file_stem(path), rule).map_err(bad)?;
            (file_stem(path), changes(&ps)?, Some(Timeframe::Tick))
        }
        InputFormat::Canonical => {
            let cs = read_canonical(reader, 0, cfg.tick).map_err(bad)?;
            let cs = if cfg.keep_zeros { cs } else { cs.drop_zeros() };
            (file_stem(path), cs, None)
        }
    };
    Ok(Dataset { name: sanitize(&name), cs, timeframe })
}

/// Input files, or the configured synthetic series when there are none.
fn datasets(cfg: &RunConfig, seed: u64) -> anyhow::Result<Vec<Dataset>> {
    let mut out: Vec<Dataset> = Vec::new();
    for path in &cfg.inputs {
        let mut ds = load(cfg, path)?;
        let base = ds.name.clone();
        let mut i = 2;
        while out.iter().any(|d| d.name == ds.name) {
            ds.name = format!("{base}-{i}");
            i += 1;
        }
        out.push(ds);
    }
    if out.is_empty() {
        if let Some((kind, length)) = cfg.synthetic {
            let cs = generate(&SyntheticSpec { kind, length, seed }).map_err(|e| input_error(e.to_string()))?;
            let cs = if cfg.keep_zeros { cs } else { cs.drop_zeros() };
            out.push(Dataset { name: "synthetic".into(), cs, timeframe: None });
        }
    }
    Ok(out)
}

fn calibrated(cfg: &RunConfig, cs: &ChangeSeries) -> anyhow::Result<ModelSpec> {
    let mut spec = cfg.model.clone();
    spec.calibrate(cs)?;
    Ok(spec)
}

pub fn backtest(cfg: &RunConfig) -> anyhow::Result<()> {
    let seed = cfg.require_seed()?;
    let data = datasets(cfg, seed)?;
    if data.is_empty() {
        return Err(input_error("nothing to backtest: give --input or set synthetic.kind"));
    }
    let mut run = Run::create(&cfg.out)?;
    let mut results = Vec::new();
    for ds in &data {
        let spec = calibrated(cfg, &ds.cs)?;
        let mode = cfg.mode.resolve(ds.timeframe);
        let original = run_backtest(&ds.cs, &spec, mode, cfg.granularity, seed)
            .with_context(|| format!("backtest of {}", ds.name))?;
        let permuted = permutation_baseline(&ds.cs, &spec, mode, cfg.granularity, seed)
            .with_context(|| format!("permutation baseline of {}", ds.name))?;
        let name = &ds.name;
        run.write(&format!("{name}.original.csv"), |w| write_report_csv(&original, None, w))?;
        run.write(&format!("{name}.permuted.csv"), |w| write_report_csv(&permuted, None, w))?;
        run.write(&format!("{name}.report.csv"), |w| write_report_csv(&original, Some(&permuted), w))?;
        run.notes.push(format!("{name}.mode={mode}"));
        for w in &original.warnings {
            run.warn(format!("{name}: {w}"));
        }
        for w in &permuted.warnings {
            run.warn(format!("{name} (permuted): {w}"));
        }
        println!("{name}: skewness {:+.4} pp, permuted {:+.4} pp", original.skewness, permuted.skewness);
        results.push((name.clone(), original, permuted));
    }
    let rows: Vec<_> = results.iter().map(|(n, o, p)| (n.clone(), o, p)).collect();
    run.write("summary.csv", |w| write_skewness_summary(&rows, w))?;
    run.finish("backtest", cfg)
}

fn prev_tag(prev: f64) -> String {
    let body = format!("{}", prev.abs());
    match prev.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Greater) => format!("p{body}"),
        Some(std::cmp::Ordering::Less) => format!("m{body}"),
        _ => "0".into(),
    }
}

fn stable_block(out: &mut String, label: &str, sample: &[f64], warnings: &mut Vec<String>) {
    type Estimator = fn(&[f64]) -> Result<StableParams, StatsError>;
    let estimators: [(&str, Estimator); 2] = [
        ("koutrouvelis", estimate_stable_koutrouvelis),
        ("kogon_williams", estimate_stable_kogon_williams),
    ];
    for (name, est) in estimators {
        out.push_str(&format!("# {label} estimator={name}\n"));
        match est(sample) {
            Ok(p) => out.push_str(&p.to_key_values()),
            Err(e) => {
                out.push_str(&format!("# failed: {e}\n"));
                warnings.push(format!("{label} {name}: {e}"));
            }
        }
    }
}

pub fn diagnose(cfg: &RunConfig) -> anyhow::Result<()> {
    let seed = cfg.require_seed()?;
    let data = datasets(cfg, seed)?;
    let d = &cfg.diagnose;
    let tick = cfg.tick.or(data.first().map(|ds| ds.cs.tick_size())).unwrap_or(1.0);
    let spec = match data.first() {
        Some(ds) => calibrated(cfg, &ds.cs)?,
        None => cfg.model.clone(),
    };
    let mut run = Run::create(&cfg.out)?;
    run.notes.push(format!("tick={tick}"));
    let mut stable = String::new();
    let mut warnings = Vec::new();
    let mut scaling = String::from("prev_ticks,factor,distance\n");

    for (i, &prev) in d.prev.iter().enumerate() {
        let dist = conditional_distribution(&spec, prev * tick, tick)
            .with_context(|| format!("conditional distribution at {prev} ticks"))?;
        run.write(&format!("model_dist_{}.csv", prev_tag(prev)), |w| dist.write_csv(w))?;
        let xs = sample(&dist, derive(seed, i as u64), d.samples);
        stable_block(&mut stable, &format!("model prev_ticks={prev}"), &xs, &mut warnings);
        match scaling_distance(&spec, prev * tick, tick, d.factor) {
            Ok(v) => scaling.push_str(&format!("{prev},{},{v}\n", d.factor)),
            Err(e) => {
                scaling.push_str(&format!("{prev},{},NA\n", d.factor));
                warnings.push(format!("scaling at {prev} ticks: {e}"));
            }
        }
    }

    let start = d.prev.iter().find(|p| **p != 0.0).map_or(1, |p| p.round() as i64);
    let path = simulate_path(&spec, tick, start, d.path_length, derive(seed, PATH_STREAM))?;
    for (squared, suffix) in [(false, ""), (true, "_squared")] {
        let acf = autocorrelation_of(&path, d.max_lag, squared)?;
        run.write(&format!("lag_model{suffix}.csv"), |w| acf.write_csv(w))?;
    }
    let field = correlation_field_of(&path, d.bins, d.passes)?;
    run.write("field_model.csv", |w| field.write_csv(w))?;

    for ds in &data {
        let name = &ds.name;
        for (squared, suffix) in [(false, ""), (true, "_squared")] {
            let acf = match autocorrelation(&ds.cs, d.max_lag, squared) {
                Err(StatsError::ZeroVariance) => {
                    warnings.push(format!("lag_{name}{suffix}: zero variance, all lags NA"));
                    LagCorrelation { lags: (1..=d.max_lag).collect(), values: vec![None; d.max_lag], squared }
                }
                other => other.with_context(|| format!("lags of {name}"))?,
            };
            run.write(&format!("lag_{name}{suffix}.csv"), |w| acf.write_csv(w))?;
        }
        let field = correlation_field(&ds.cs, d.bins, d.passes).with_context(|| format!("field of {name}"))?;
        run.write(&format!("field_{name}.csv"), |w| field.write_csv(w))?;
        stable_block(&mut stable, &format!("data {name}"), ds.cs.values(), &mut warnings);
    }

    run.write("scaling.csv", |w| w.write_all(scaling.as_bytes()))?;
    run.write("stable.txt", |w| w.write_all(stable.as_bytes()))?;
    for w in warnings {
        run.warn(w);
    }
    run.finish("diagnose", cfg)
}

pub fn estimate(cfg: &RunConfig) -> anyhow::Result<()> {
    let path = cfg.inputs.first().ok_or_else(|| input_error("estimate needs a sample file (--input)"))?;
    let file = File::open(path).map_err(|e| input_error(format!("cannot open {}: {e}", path.display())))?;
    let values = read_values(BufReader::new(file)).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let k = estimate_stable_koutrouvelis(&values).context("koutrouvelis")?;
    let w = estimate_stable_kogon_williams(&values).context("kogon_williams")?;
    let mut table = String::from("param,koutrouvelis,kogon_williams\n");
    for (name, a, b) in [
        ("alpha", k.alpha, w.alpha),
        ("beta", k.beta, w.beta),
        ("gamma", k.gamma, w.gamma),
        ("delta", k.delta, w.delta),
    ] {
        table.push_str(&format!("{name},{a:.6},{b:.6}\n"));
    }
    table.push_str(&format!("converged,{},{}\niterations,{},{}\n", k.converged, w.converged, k.iterations, w.iterations));
    print!("{table}");
    let mut run = Run::create(&cfg.out)?;
    run.write("estimate.csv", |o| o.write_all(table.as_bytes()))?;
    let text = format!("# koutrouvelis\n{}# kogon_williams\n{}", k.to_key_values(), w.to_key_values());
    run.write("estimate.txt", |o| o.write_all(text.as_bytes()))?;
    run.finish("estimate", cfg)
}

pub fn simulate(cfg: &RunConfig) -> anyhow::Result<()> {
    let seed = cfg.require_seed()?;
    let (kind, length) = cfg
        .synthetic
        .ok_or_else(|| input_error("simulate needs a series kind: --kind or synthetic.kind"))?;
    let cs = generate(&SyntheticSpec { kind, length, seed }).map_err(|e| input_error(e.to_string()))?;
    let mut run = Run::create(&cfg.out)?;
    run.write("changes.csv", |w| swing_core::ingest::write_canonical(&cs, w))?;
    println!("wrote {} changes to {}", cs.len(), cfg.out.join("changes.csv").display());
    run.finish("simulate", cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_and_names() {
        assert_eq!(prev_tag(10.0), "p10");
        assert_eq!(prev_tag(-2.5), "m2.5");
        assert_eq!(prev_tag(0.0), "0");
        assert_eq!(sanitize("EUR/USD"), "EUR_USD");
    }
}
