//! JSON run configuration. Values come from `--config FILE` first and are then
//! overridden by explicit command-line flags.

use std::path::{Path, PathBuf};

use qmedley::datasets::{
    binarize_target_at_median, bundled, load_csv, make_planted, stratified_subsample, PlantedRule, RawTable,
};
use qmedley::Hyperparams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<String>,
    pub target: Option<String>,
    pub noise: Option<usize>,
    pub redundant: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub test_fraction: Option<f64>,
    pub binarize_target: Option<bool>,
    pub max_rows: Option<usize>,
    pub model: Option<String>,
    pub model_type: Option<String>,
    pub model_file: Option<PathBuf>,
    pub repeats: Option<usize>,
    pub adaptive: Option<bool>,
    pub interaction_pi: Option<bool>,
    pub interaction_partners: Option<usize>,
    pub no_chart: Option<bool>,
    pub datasets: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    pub models: Option<Vec<String>>,
    pub hyperparams: Option<Hyperparams>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }
}

pub const DEFAULT_NOISE: usize = 2;
pub const DEFAULT_REDUNDANT: usize = 2;
pub const DEFAULT_TARGET: &str = "target";

/// Everything that determines the prepared dataset besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub data: String,
    pub target: String,
    pub noise: usize,
    pub redundant: usize,
    pub test_fraction: f64,
    pub binarize_target: bool,
    pub max_rows: Option<usize>,
}

/// Parse `planted:<rule>:<informative>:<noise>[:<rows>]`.
fn planted_table(spec: &str, seed: u64) -> Result<RawTable, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::usage(format!("bad planted spec '{spec}'; expected planted:<rule>:<informative>:<noise>[:<rows>]"));
    if !(parts.len() == 4 || parts.len() == 5) {
        return Err(bad());
    }
    let rule: PlantedRule = parts[1].parse().map_err(|e: qmedley::Error| CliError::usage(e.to_string()))?;
    let n_inf: usize = parts[2].parse().map_err(|_| bad())?;
    let n_noise: usize = parts[3].parse().map_err(|_| bad())?;
    let rows: usize = match parts.get(4) {
        Some(r) => r.parse().map_err(|_| bad())?,
        None => 200,
    };
    make_planted(rows, n_inf, n_noise, rule, seed).map_err(CliError::data)
}

/// Resolve a dataset name: a bundled name (`iris`, `wine`), a planted spec,
/// or a CSV path.
pub fn load_table(dc: &DataConfig, seed: u64) -> Result<RawTable, CliError> {
    let mut t = if dc.data.starts_with("planted:") {
        planted_table(&dc.data, seed)?
    } else if !Path::new(&dc.data).exists() {
        match bundled(&dc.data) {
            Some(t) => t,
            None => {
                return Err(CliError::data(format!(
                    "dataset '{}' is neither a bundled dataset (iris, wine) nor an existing file",
                    dc.data
                )))
            }
        }
    } else {
        load_csv(&dc.data, &dc.target).map_err(CliError::data)?
    };
    if dc.binarize_target {
        t = binarize_target_at_median(&t).map_err(CliError::data)?;
    }
    if let Some(max) = dc.max_rows {
        t = stratified_subsample(&t, max, seed);
    }
    Ok(t)
}

/// Split a comma-separated flag value.
pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    split_list(s)
        .iter()
        .map(|p| p.parse().map_err(|_| CliError::usage(format!("invalid seed '{p}'"))))
        .collect()
}
