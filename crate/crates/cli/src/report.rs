use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Conflict, ExperimentConfig};
use crate::experiments::{Assertion, Outcome};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    params: &'a BTreeMap<String, Value>,
    seed: u64,
    metrics: &'a Map<String, Value>,
    assertions: &'a [Assertion],
    pass: bool,
    version: &'static str,
    rng: &'static str,
    config: &'a ExperimentConfig,
    conflicts: &'a [Conflict],
    started_at: String,
    wall_clock_seconds: f64,
    files: Vec<String>,
}

/// Paths of everything written for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub extra: Vec<PathBuf>,
}

/// CSV body as bytes; depends only on the outcome.
pub fn csv_bytes(outcome: &Outcome) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(&outcome.header)?;
    for row in &outcome.rows {
        w.write_record(row)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

pub fn file_stem(config: &ExperimentConfig, started: &DateTime<Utc>) -> String {
    match &config.output_name {
        Some(n) => n.clone(),
        None => format!(
            "{}-{}",
            config.experiment,
            started.format("%Y%m%dT%H%M%S%3fZ")
        ),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn write(
    config: &ExperimentConfig,
    params: &BTreeMap<String, Value>,
    conflicts: &[Conflict],
    outcome: &Outcome,
    started: DateTime<Utc>,
    seconds: f64,
) -> Result<Written, CliError> {
    fs::create_dir_all(&config.output_dir)?;
    let stem = file_stem(config, &started);
    let csv = config.output_dir.join(format!("{stem}.csv"));
    fs::write(&csv, csv_bytes(outcome)?)?;
    let mut extra = vec![];
    for (ext, bytes) in &outcome.extra {
        let path = config.output_dir.join(format!("{stem}.{ext}"));
        fs::write(&path, bytes)?;
        extra.push(path);
    }
    let name = |p: &PathBuf| p.file_name().map(|s| s.to_string_lossy().into_owned());
    let files = std::iter::once(&csv)
        .chain(&extra)
        .filter_map(name)
        .collect();
    let mut echo = config.clone();
    echo.params = params.clone();
    let summary = Summary {
        experiment: config.experiment.name(),
        params,
        seed: config.seed,
        metrics: &outcome.metrics,
        assertions: &outcome.assertions,
        pass: outcome.assertions.iter().all(|a| a.pass),
        version: VERSION,
        rng: cladoflow_core::rng::ALGORITHM,
        config: &echo,
        conflicts,
        started_at: started.to_rfc3339(),
        wall_clock_seconds: seconds,
        files,
    };
    let json = config.output_dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(Written { csv, json, extra })
}
