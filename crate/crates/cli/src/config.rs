use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Simulate,
    GeneratorGap,
    MassGeneratorGap,
    CrtMoments,
    QnTable,
    Duality,
    Mixing,
    Identities,
    DistanceMatrix,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Simulate,
        Experiment::GeneratorGap,
        Experiment::MassGeneratorGap,
        Experiment::CrtMoments,
        Experiment::QnTable,
        Experiment::Duality,
        Experiment::Mixing,
        Experiment::Identities,
        Experiment::DistanceMatrix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::GeneratorGap => "generator-gap",
            Experiment::MassGeneratorGap => "mass-generator-gap",
            Experiment::CrtMoments => "crt-moments",
            Experiment::QnTable => "qn-table",
            Experiment::Duality => "duality",
            Experiment::Mixing => "mixing",
            Experiment::Identities => "identities",
            Experiment::DistanceMatrix => "distance-matrix",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                CliError::Usage(format!(
                    "unknown experiment {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl Serialize for Experiment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

pub const DEFAULT_SEED: u64 = 1;
pub const THREADS_ENV: &str = "CLADOFLOW_THREADS";

/// Effective configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Experiment parameters as given; defaults are filled in by the runner.
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
    /// File stem for the reports; experiment and timestamp when absent.
    pub output_name: Option<String>,
}

/// Command-line values, all optional so that a config file can supply them.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub name: Option<String>,
    pub params: Vec<String>,
}

/// A key set both in the config file and on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conflict {
    pub key: String,
    pub file: Value,
    pub flag: Value,
}

const RESERVED: [&str; 5] = ["experiment", "seed", "threads", "output_dir", "output_name"];

fn parse_error(key: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        key: key.to_string(),
        message: message.into(),
    }
}

/// `--param` value: JSON when it parses, a list when it has commas, else a
/// bare string.
pub fn param_value(text: &str) -> Value {
    let text = text.trim();
    if let Ok(v) = serde_json::from_str::<Value>(text) {
        return v;
    }
    if text.contains(',') {
        return Value::Array(text.split(',').map(param_value).collect());
    }
    Value::String(text.to_string())
}

fn split_param(p: &str) -> Result<(String, Value), CliError> {
    let (k, v) = p
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--param expects key=value, got {p:?}")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(CliError::Usage(format!("--param {p:?} has an empty key")));
    }
    Ok((k.to_string(), param_value(v)))
}

fn as_u64(key: &str, v: &Value) -> Result<u64, CliError> {
    v.as_u64()
        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| parse_error(key, format!("expected a nonnegative integer, got {v}")))
}

/// Merge an optional JSON config file with flags; flags win. `env_threads`
/// is the fallback thread count when neither sets one.
pub fn parse_config(
    file: Option<&str>,
    flags: &Flags,
    env_threads: Option<&str>,
) -> Result<(ExperimentConfig, Vec<Conflict>), CliError> {
    let mut top = serde_json::Map::new();
    if let Some(text) = file {
        let v: Value = serde_json::from_str(text).map_err(|e| {
            parse_error(
                "config",
                format!("line {} column {}: {e}", e.line(), e.column()),
            )
        })?;
        match v {
            Value::Object(m) => top = m,
            _ => return Err(parse_error("config", "expected a JSON object")),
        }
    }
    let mut file_params = BTreeMap::new();
    if let Some(nested) = top.remove("params") {
        match nested {
            Value::Object(m) => file_params.extend(m),
            _ => return Err(parse_error("params", "expected an object")),
        }
    }
    for (k, v) in &top {
        if !RESERVED.contains(&k.as_str()) {
            file_params.insert(k.clone(), v.clone());
        }
    }

    let mut conflicts = vec![];
    let mut note = |key: &str, file: Option<&Value>, flag: Value| {
        if let Some(f) = file {
            if *f != flag {
                conflicts.push(Conflict {
                    key: key.to_string(),
                    file: f.clone(),
                    flag,
                });
            }
        }
    };

    let experiment = match (&flags.experiment, top.get("experiment")) {
        (Some(e), f) => {
            note("experiment", f, Value::String(e.clone()));
            e.clone()
        }
        (None, Some(Value::String(e))) => e.clone(),
        (None, Some(v)) => {
            return Err(parse_error(
                "experiment",
                format!("expected a name, got {v}"),
            ))
        }
        (None, None) => return Err(CliError::Usage("no experiment given".into())),
    };
    let experiment: Experiment = experiment.parse()?;

    let seed = match (flags.seed, top.get("seed")) {
        (Some(s), f) => {
            note("seed", f, Value::from(s));
            s
        }
        (None, Some(v)) => as_u64("seed", v)?,
        (None, None) => DEFAULT_SEED,
    };

    let threads = match (flags.threads, top.get("threads")) {
        (Some(t), f) => {
            note("threads", f, Value::from(t));
            t
        }
        (None, Some(v)) => as_u64("threads", v)? as usize,
        (None, None) => match env_threads {
            Some(s) => s
                .trim()
                .parse()
                .map_err(|_| parse_error(THREADS_ENV, format!("expected an integer, got {s:?}")))?,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if threads == 0 {
        return Err(parse_error("threads", "must be at least 1"));
    }

    let output_dir = match (&flags.out, top.get("output_dir")) {
        (Some(p), f) => {
            note("output_dir", f, Value::String(p.display().to_string()));
            p.clone()
        }
        (None, Some(Value::String(p))) => PathBuf::from(p),
        (None, Some(v)) => {
            return Err(parse_error(
                "output_dir",
                format!("expected a path, got {v}"),
            ))
        }
        (None, None) => PathBuf::from("."),
    };

    let output_name = match (&flags.name, top.get("output_name")) {
        (Some(n), f) => {
            note("output_name", f, Value::String(n.clone()));
            Some(n.clone())
        }
        (None, Some(Value::String(n))) => Some(n.clone()),
        (None, Some(v)) => {
            return Err(parse_error(
                "output_name",
                format!("expected a string, got {v}"),
            ))
        }
        (None, None) => None,
    };
    if let Some(n) = &output_name {
        if n.is_empty() || n.contains(['/', '\\']) {
            return Err(parse_error(
                "output_name",
                format!("{n:?} is not a file stem"),
            ));
        }
    }

    let mut params = file_params.clone();
    for p in &flags.params {
        let (k, v) = split_param(p)?;
        note(&k, file_params.get(&k), v.clone());
        params.insert(k, v);
    }

    Ok((
        ExperimentConfig {
            experiment,
            params,
            seed,
            threads,
            output_dir,
            output_name,
        },
        conflicts,
    ))
}
