//! Experiment configuration file.
//!
//! A TOML document with the sections `substrate`, `stream`,
//! `algorithm.lbhga`, `algorithm.tga` and `experiment`. Every parameter has a
//! default except the keys listed in [`REQUIRED_KEYS`].

use std::path::{Path, PathBuf};

use lbhga_core::sim::{Algorithm, AlgorithmParams};
use lbhga_core::topology::{ConfigError, SubstrateConfig, VnrStreamConfig};
use lbhga_core::{LbhgaParams, TgaParams};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use toml::{Table, Value};

use crate::CliError;

/// Keys that must be present in every configuration file.
pub const REQUIRED_KEYS: &[&str] = &["substrate.domain_count", "substrate.nodes_per_domain", "experiment.seeds"];

const SECTIONS: &[&str] = &["substrate", "stream", "algorithm", "experiment"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub seeds: Vec<u64>,
    #[serde(default = "all_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn all_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub substrate: SubstrateConfig,
    pub stream: VnrStreamConfig,
    pub params: AlgorithmParams,
    pub experiment: ExperimentSection,
}

/// Command-line values that replace the file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub algorithm: Option<Algorithm>,
    pub out_dir: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(CliError::Config)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::new("<file>", e.message()))?;
        for key in root.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                return Err(ConfigError::new(key.as_str(), "unknown section"));
            }
        }
        for key in REQUIRED_KEYS {
            if lookup(&root, key).is_none() {
                return Err(ConfigError::new(*key, "required key is missing"));
            }
        }

        let algorithm = section(&root, "algorithm")?;
        for key in algorithm.keys() {
            if !matches!(key.as_str(), "lbhga" | "tga") {
                return Err(ConfigError::new(format!("algorithm.{key}"), "unknown section"));
            }
        }
        let lbhga: LbhgaParams = decode(&algorithm, "lbhga", "algorithm.lbhga")?;
        let tga: TgaParams = decode(&algorithm, "tga", "algorithm.tga")?;
        let cfg = Config {
            substrate: decode(&root, "substrate", "substrate")?,
            stream: decode(&root, "stream", "stream")?,
            params: AlgorithmParams { lbhga, tga },
            experiment: decode(&root, "experiment", "experiment")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.substrate.validate()?;
        self.stream.validate()?;
        self.params
            .lbhga
            .validate()
            .map_err(|(k, why)| ConfigError::new(format!("algorithm.lbhga.{k}"), why))?;
        self.params
            .tga
            .validate()
            .map_err(|(k, why)| ConfigError::new(format!("algorithm.tga.{k}"), why))?;
        if self.experiment.seeds.is_empty() {
            return Err(ConfigError::new("experiment.seeds", "at least one seed is needed"));
        }
        if self.experiment.algorithms.is_empty() {
            return Err(ConfigError::new("experiment.algorithms", "at least one algorithm is needed"));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.experiment.seeds = vec![seed];
        }
        if let Some(alg) = o.algorithm {
            self.experiment.algorithms = vec![alg];
        }
        if let Some(dir) = &o.out_dir {
            self.experiment.out_dir = dir.clone();
        }
    }
}

fn lookup<'a>(root: &'a Table, dotted: &str) -> Option<&'a Value> {
    let mut parts = dotted.split('.');
    let mut cur = root.get(parts.next()?)?;
    for p in parts {
        cur = cur.as_table()?.get(p)?;
    }
    Some(cur)
}

fn section(root: &Table, name: &str) -> Result<Table, ConfigError> {
    match root.get(name) {
        None => Ok(Table::new()),
        Some(Value::Table(t)) => Ok(t.clone()),
        Some(_) => Err(ConfigError::new(name, "expected a table")),
    }
}

/// Deserializes `parent[name]` (an empty table when absent), naming the
/// offending key on failure.
fn decode<T: DeserializeOwned>(parent: &Table, name: &str, path: &str) -> Result<T, ConfigError> {
    let table = section(parent, name).map_err(|e| ConfigError::new(path, e.reason))?;
    Value::Table(table).try_into().map_err(|e: toml::de::Error| {
        let msg = e.message().to_string();
        let key = offending_field(&msg).map_or_else(|| path.to_string(), |f| format!("{path}.{f}"));
        ConfigError::new(key, msg)
    })
}

/// Extracts the field name from serde messages such as
/// "unknown field `x`, expected ..." or "invalid type: ..., for key `x`".
fn offending_field(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}
