mod commands;
mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{input_error, InputError, RunConfig};

#[derive(Parser)]
#[command(name = "swing", version, about = "Conditional price-change models: backtests, diagnostics, estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Directional backtest plus permutation baseline
    Backtest(Common),
    /// Plot-ready model and data diagnostics
    Diagnose(Common),
    /// Fit stable parameters to a sample with both estimators
    Estimate(Common),
    /// Write a synthetic change series
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// Flat key=value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// mass | mc | mc:R
    #[arg(long)]
    mode: Option<String>,
    /// month | year
    #[arg(long)]
    granularity: Option<String>,
    /// finam-bar | tick-bid | tick-mid | canonical
    #[arg(long)]
    format: Option<String>,
    /// Input file; repeat for several instruments
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Score zero changes instead of filtering them out
    #[arg(long)]
    keep_zeros: bool,
    /// Tick size for canonical input and model diagnostics
    #[arg(long)]
    tick: Option<f64>,
    /// Any config key, e.g. --set model.alpha0=0.9
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// gaussian_walk | stable_walk | sign_persistent
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
}

impl Common {
    fn entries(&self) -> anyhow::Result<BTreeMap<String, String>> {
        let mut e = match &self.config {
            Some(path) => config::read_file(path)?,
            None => BTreeMap::new(),
        };
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                e.insert(k.to_string(), v);
            }
        };
        put("seed", self.seed.map(|s| s.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("mode", self.mode.clone());
        put("granularity", self.granularity.clone());
        put("format", self.format.clone());
        put("tick", self.tick.map(|t| t.to_string()));
        if !self.input.is_empty() {
            let joined: Vec<String> = self.input.iter().map(|p| p.display().to_string()).collect();
            put("input", Some(joined.join(",")));
        }
        if self.keep_zeros {
            put("keep_zeros", Some("true".into()));
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| input_error(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            e.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(e)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Backtest(c) => commands::backtest(&RunConfig::from_entries(c.entries()?)?),
        Command::Diagnose(c) => commands::diagnose(&RunConfig::from_entries(c.entries()?)?),
        Command::Estimate(c) => commands::estimate(&RunConfig::from_entries(c.entries()?)?),
        Command::Simulate(s) => {
            let mut e = s.common.entries()?;
            let pairs = [
                ("synthetic.kind", s.kind),
                ("synthetic.length", s.length.map(|v| v.to_string())),
                ("synthetic.alpha", s.alpha.map(|v| v.to_string())),
                ("synthetic.p", s.p.map(|v| v.to_string())),
            ];
            for (k, v) in pairs {
                if let Some(v) = v {
                    e.insert(k.into(), v);
                }
            }
            commands::simulate(&RunConfig::from_entries(e)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
