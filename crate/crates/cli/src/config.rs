//! Run configuration: a flat `key=value` file (`#` comments) overlaid by flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use swing_core::harness::ForecastMode;
use swing_core::{Granularity, ModelSpec, SyntheticKind, Timeframe};

/// Configuration or input problem; reported with exit status 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

const KEYS: &[&str] = &[
    "input",
    "format",
    "seed",
    "out",
    "mode",
    "granularity",
    "keep_zeros",
    "tick",
    "synthetic.kind",
    "synthetic.length",
    "synthetic.alpha",
    "synthetic.p",
    "diagnose.prev",
    "diagnose.max_lag",
    "diagnose.bins",
    "diagnose.passes",
    "diagnose.factor",
    "diagnose.path_length",
    "diagnose.samples",
];

const MODEL_KEYS: &[&str] = &["kind", "p", "alpha0", "c", "a", "L_ticks", "K"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    FinamBar,
    TickBid,
    TickMid,
    Canonical,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "finam-bar" => Ok(InputFormat::FinamBar),
            "tick-bid" => Ok(InputFormat::TickBid),
            "tick-mid" => Ok(InputFormat::TickMid),
            "canonical" => Ok(InputFormat::Canonical),
            other => Err(format!("unknown format `{other}` (finam-bar|tick-bid|tick-mid|canonical)")),
        }
    }
}

/// `mc` without a count picks the default for the data's time frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSetting {
    Mass,
    MonteCarlo(Option<usize>),
}

impl ModeSetting {
    pub fn resolve(self, timeframe: Option<Timeframe>) -> ForecastMode {
        match self {
            ModeSetting::Mass => ForecastMode::Mass,
            ModeSetting::MonteCarlo(Some(r)) => ForecastMode::MonteCarlo(r),
            ModeSetting::MonteCarlo(None) => match timeframe {
                Some(Timeframe::H1 | Timeframe::D1) => ForecastMode::MonteCarlo(100_000),
                _ => ForecastMode::MonteCarlo(100),
            },
        }
    }
}

impl FromStr for ModeSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mc" {
            return Ok(ModeSetting::MonteCarlo(None));
        }
        match s.parse::<ForecastMode>()? {
            ForecastMode::Mass => Ok(ModeSetting::Mass),
            ForecastMode::MonteCarlo(r) => Ok(ModeSetting::MonteCarlo(Some(r))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiagnoseSettings {
    /// Previous changes in ticks.
    pub prev: Vec<f64>,
    pub max_lag: usize,
    pub bins: usize,
    pub passes: usize,
    pub factor: usize,
    pub path_length: usize,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub format: InputFormat,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub mode: ModeSetting,
    pub granularity: Granularity,
    pub keep_zeros: bool,
    pub tick: Option<f64>,
    pub model: ModelSpec,
    pub synthetic: Option<(SyntheticKind, usize)>,
    pub diagnose: DiagnoseSettings,
    /// Every resolved key, for the manifest.
    pub entries: BTreeMap<String, String>,
}

/// Read a config file into raw entries.
pub fn read_file(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read config {}: {e}", path.display())))?;
    parse_entries(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, found `{line}`", i + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn parse<T: FromStr>(entries: &BTreeMap<String, String>, key: &str) -> anyhow::Result<Option<T>>
where
    T::Err: fmt::Display,
{
    entries
        .get(key)
        .map(|v| v.parse::<T>().map_err(|e| input_error(format!("{key}: bad value `{v}`: {e}"))))
        .transpose()
}

fn synthetic_kind(entries: &BTreeMap<String, String>) -> anyhow::Result<Option<SyntheticKind>> {
    let Some(kind) = entries.get("synthetic.kind") else {
        return Ok(None);
    };
    let need = |key: &str| -> anyhow::Result<f64> {
        parse::<f64>(entries, key)?.ok_or_else(|| input_error(format!("synthetic.kind={kind} needs {key}")))
    };
    Ok(Some(match kind.as_str() {
        "gaussian_walk" => SyntheticKind::GaussianWalk,
        "stable_walk" => SyntheticKind::StableWalk { alpha: need("synthetic.alpha")? },
        "sign_persistent" => SyntheticKind::SignPersistent { p: need("synthetic.p")? },
        other => return Err(input_error(format!("unknown synthetic.kind `{other}`"))),
    }))
}

impl RunConfig {
    pub fn from_entries(entries: BTreeMap<String, String>) -> anyhow::Result<Self> {
        let mut model_text = String::new();
        for (k, v) in &entries {
            match k.strip_prefix("model.") {
                Some(m) if MODEL_KEYS.contains(&m) => model_text.push_str(&format!("{m}={v}\n")),
                _ if KEYS.contains(&k.as_str()) => {}
                _ => return Err(input_error(format!("unknown config key `{k}`"))),
            }
        }
        let model = ModelSpec::parse(&model_text).map_err(|e| input_error(format!("model: {e}")))?;

        let inputs: Vec<PathBuf> = entries
            .get("input")
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect())
            .unwrap_or_default();
        for p in &inputs {
            if !p.is_file() {
                return Err(input_error(format!("input file not found: {}", p.display())));
            }
        }

        let synthetic = match synthetic_kind(&entries)? {
            Some(kind) => Some((kind, parse::<usize>(&entries, "synthetic.length")?.unwrap_or(100_000))),
            None => None,
        };
        let prev = match entries.get("diagnose.prev") {
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| input_error(format!("diagnose.prev: bad value `{s}`"))))
                .collect::<anyhow::Result<Vec<_>>>()?,
            None => vec![-10.0, 0.0, 10.0],
        };
        let diagnose = DiagnoseSettings {
            prev,
            max_lag: parse(&entries, "diagnose.max_lag")?.unwrap_or(50),
            bins: parse(&entries, "diagnose.bins")?.unwrap_or(20),
            passes: parse(&entries, "diagnose.passes")?.unwrap_or(2),
            factor: parse(&entries, "diagnose.factor")?.unwrap_or(2),
            path_length: parse(&entries, "diagnose.path_length")?.unwrap_or(100_000),
            samples: parse(&entries, "diagnose.samples")?.unwrap_or(100_000),
        };
        let tick: Option<f64> = parse(&entries, "tick")?;
        if let Some(t) = tick {
            if !(t > 0.0 && t.is_finite()) {
                return Err(input_error(format!("tick must be positive, got {t}")));
            }
        }
        let keep_zeros = parse::<bool>(&entries, "keep_zeros")?.unwrap_or(false);

        Ok(RunConfig {
            inputs,
            format: parse(&entries, "format")?.unwrap_or(InputFormat::FinamBar),
            seed: parse(&entries, "seed")?,
            out: entries.get("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out")),
            mode: parse(&entries, "mode")?.unwrap_or(ModeSetting::Mass),
            granularity: parse(&entries, "granularity")?.unwrap_or(Granularity::Month),
            keep_zeros,
            tick,
            model,
            synthetic,
            diagnose,
            entries,
        })
    }

    pub fn require_seed(&self) -> anyhow::Result<u64> {
        self.seed
            .ok_or_else(|| input_error("a seed is required: pass --seed or set seed= in the config"))
    }
}
