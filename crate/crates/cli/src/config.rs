//! Experiment configuration: a preset, then an optional JSON config file,
//! then `--set key=value` overrides, then the dedicated flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use polymerlab_core::presets::{preset, Preset};
use polymerlab_core::schedule::{Horizon, ParameterTuple, ScheduleMode};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Moments,
    SecondMomentScan,
    Schedule,
    Poisson,
    PairProb,
    Hitting,
    Lclt,
    Qlarge,
    Confinement,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::SecondMomentScan => "second-moment-scan",
            Command::Schedule => "schedule",
            Command::Poisson => "poisson",
            Command::PairProb => "pair-prob",
            Command::Hitting => "hitting",
            Command::Lclt => "lclt",
            Command::Qlarge => "qlarge",
            Command::Confinement => "confinement",
        }
    }

    /// Whether the command simulates or enumerates walks up to `N`.
    pub fn needs_finite_horizon(self) -> bool {
        !matches!(self, Command::Schedule | Command::Hitting | Command::Lclt)
    }
}

/// Every tunable quantity. Commands read the fields they need and ignore the
/// rest, so one record format serves all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub gamma: f64,
    pub epsilon0: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub nu1: u64,
    pub nu2: u64,
    pub alpha: u64,
    /// Step count, or `{"ln": x}` for horizons beyond 64 bits.
    #[serde(rename = "N")]
    pub n: Horizon,
    pub q: u64,
    pub beta_hat: f64,
    pub schedule_mode: ScheduleMode,
    /// Block index for `pair-prob` and `poisson`.
    pub k: u64,
    #[serde(rename = "N_values")]
    pub n_values: Vec<u64>,
    pub t_values: Vec<u64>,
    /// Disc radius, start radius and window for `hitting`.
    pub a: f64,
    pub r: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Parameters {
    fn from_preset(p: &Preset) -> Self {
        let t = p.params;
        Self {
            gamma: t.gamma,
            epsilon0: t.epsilon0,
            delta: t.delta,
            m: t.m,
            nu1: t.nu1,
            nu2: t.nu2,
            alpha: t.alpha,
            n: t.n,
            q: t.q,
            beta_hat: p.beta_hat,
            schedule_mode: ScheduleMode::LogN,
            k: 2,
            n_values: vec![100, 1_000, 10_000],
            t_values: vec![100, 1_000],
            a: 0.5,
            r: 0.0,
            t1: 100.0,
            t2: 10_000.0,
        }
    }

    pub fn tuple(&self) -> ParameterTuple {
        ParameterTuple {
            gamma: self.gamma,
            epsilon0: self.epsilon0,
            delta: self.delta,
            m: self.m,
            nu1: self.nu1,
            nu2: self.nu2,
            alpha: self.alpha,
            n: self.n,
            q: self.q,
        }
    }

    /// `N` as a step count, for commands that walk up to it.
    pub fn steps(&self) -> CliResult<u64> {
        self.n.steps().ok_or_else(|| {
            CliError::Core(polymerlab_core::Error::InvalidParameter(
                "this command needs an integer horizon N, not a log horizon".into(),
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub preset: String,
    pub parameters: Parameters,
    pub replicates: u64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    /// Worker threads. Never affects results.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Equality of everything that determines the results.
    pub fn same_experiment(&self, other: &Self) -> bool {
        self.command == other.command
            && self.parameters == other.parameters
            && self.replicates == other.replicates
            && self.seed == other.seed
    }
}

/// Command-line overrides, in the order they apply.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub set: Vec<String>,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_PRESET: &str = "desk-small";
pub const DEFAULT_SEED: u64 = 1;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// Values in `--set` are JSON when they parse as JSON, strings otherwise.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn apply_parameters(params: &mut Map<String, Value>, updates: &Map<String, Value>) -> CliResult<()> {
    for (k, v) in updates {
        if !params.contains_key(k) {
            return Err(config_err(format!("unknown parameter {k:?}")));
        }
        params.insert(k.clone(), v.clone());
    }
    Ok(())
}

fn preset_defaults(name: &str) -> CliResult<(Preset, Map<String, Value>)> {
    let p = preset(name)?;
    let Value::Object(m) = serde_json::to_value(Parameters::from_preset(&p)).expect("parameters serialize") else {
        unreachable!("parameters serialize to an object")
    };
    Ok((p, m))
}

/// Builds the configuration for a fresh run of `command`.
pub fn resolve(command: Command, o: &Overrides) -> CliResult<ExperimentConfig> {
    let file = match &o.config {
        Some(path) => match read_json(path)? {
            Value::Object(m) => m,
            _ => return Err(config_err("config file must hold a JSON object")),
        },
        None => Map::new(),
    };
    for key in file.keys() {
        if !["command", "preset", "parameters", "replicates", "seed", "output_path", "threads"].contains(&key.as_str()) {
            return Err(config_err(format!("unknown config field {key:?}")));
        }
    }
    if let Some(c) = file.get("command") {
        let named: Command =
            serde_json::from_value(c.clone()).map_err(|_| CliError::Usage(format!("unknown command {c}")))?;
        if named != command {
            return Err(config_err(format!(
                "config file is for {}, not {}",
                named.name(),
                command.name()
            )));
        }
    }
    let preset_name = match (&o.preset, file.get("preset")) {
        (Some(p), _) => p.clone(),
        (None, Some(Value::String(p))) => p.clone(),
        (None, Some(other)) => return Err(config_err(format!("preset must be a string, got {other}"))),
        (None, None) => DEFAULT_PRESET.to_string(),
    };
    let (pre, mut params) = preset_defaults(&preset_name)?;
    if !pre.simulatable && command.needs_finite_horizon() {
        return Err(CliError::Core(polymerlab_core::Error::InvalidParameter(format!(
            "preset {} is for schedule validation only",
            pre.name
        ))));
    }
    match file.get("parameters") {
        Some(Value::Object(m)) => apply_parameters(&mut params, m)?,
        Some(_) => return Err(config_err("parameters must be a JSON object")),
        None => {}
    }
    let base = Base {
        replicates: field(&file, "replicates")?.unwrap_or(pre.replicates),
        seed: field(&file, "seed")?.unwrap_or(DEFAULT_SEED),
        output_path: field(&file, "output_path")?,
        threads: field(&file, "threads")?,
    };
    finish(command, pre.name.to_string(), params, base, o)
}

/// Builds the configuration for replaying `recorded`, with overrides on top.
pub fn resolve_replay(recorded: &ExperimentConfig, o: &Overrides) -> CliResult<ExperimentConfig> {
    if o.preset.is_some() || o.config.is_some() {
        return Err(CliError::Usage("replay takes --set, --seed, --replicates, --threads and --out only".into()));
    }
    let Value::Object(params) = serde_json::to_value(&recorded.parameters).expect("parameters serialize") else {
        unreachable!("parameters serialize to an object")
    };
    let base = Base {
        replicates: recorded.replicates,
        seed: recorded.seed,
        output_path: None,
        threads: recorded.threads,
    };
    finish(recorded.command, recorded.preset.clone(), params, base, o)
}

struct Base {
    replicates: u64,
    seed: u64,
    output_path: Option<PathBuf>,
    threads: Option<usize>,
}

fn field<T: serde::de::DeserializeOwned>(m: &Map<String, Value>, key: &str) -> CliResult<Option<T>> {
    match m.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| config_err(format!("{key}: {e}"))),
    }
}

fn finish(
    command: Command,
    preset: String,
    mut params: Map<String, Value>,
    base: Base,
    o: &Overrides,
) -> CliResult<ExperimentConfig> {
    let mut sets = Map::new();
    for s in &o.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {s:?}")))?;
        sets.insert(k.trim().to_string(), parse_value(v.trim()));
    }
    apply_parameters(&mut params, &sets)?;
    let parameters: Parameters =
        serde_json::from_value(Value::Object(params)).map_err(|e| config_err(format!("parameters: {e}")))?;
    let threads = o.threads.or(base.threads);
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(ExperimentConfig {
        command,
        preset,
        parameters,
        replicates: o.replicates.unwrap_or(base.replicates),
        seed: o.seed.unwrap_or(base.seed),
        output_path: o.out.clone().or(base.output_path),
        threads,
    })
}
