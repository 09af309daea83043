//! Dataset sources: CSV files and simulation scenarios.

use std::path::PathBuf;

use sha2::{Digest, Sha256};
use vimkit::data::csv_string;
use vimkit::simgen::{augment_with_noise, Scenario, ScenarioMetadata, ScenarioSpec};
use vimkit::{read_csv, Dataset, Task};

use crate::error::{io_err, BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSource {
    pub scenario: Scenario,
    pub n: Option<usize>,
    pub noise_sd: Option<f64>,
    /// Wide scenario width.
    pub features: Option<usize>,
    /// Independent standard normal columns appended after generation.
    pub extra_noise: usize,
}

/// `path/to/file.csv` or `scenario:NAME[:key=value,...]`.
///
/// Scenario keys: `n`, `noise_sd`, `p` (wide only) and `extra_noise`.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv { path: PathBuf, task: Task },
    Scenario(ScenarioSource),
}

/// A materialized dataset and the hash of its CSV bytes.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset,
    pub sha256: String,
    pub metadata: Option<ScenarioMetadata>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn default_n(s: Scenario) -> usize {
    match s {
        Scenario::Correlated => 100,
        Scenario::Redundant => 1000,
        Scenario::Wide => 79,
    }
}

pub const WIDE_FEATURES: usize = 500;

impl DataSource {
    /// `task` is required for CSV input and ignored for scenarios.
    pub fn parse(spec: &str, task: Option<Task>) -> Result<Self> {
        let Some(rest) = spec.strip_prefix("scenario:") else {
            let task = task.ok_or_else(|| BenchError::Config("--task is required for CSV input".into()))?;
            return Ok(DataSource::Csv { path: PathBuf::from(spec), task });
        };
        let (name, params) = rest.split_once(':').unwrap_or((rest, ""));
        let mut src =
            ScenarioSource { scenario: name.parse()?, n: None, noise_sd: None, features: None, extra_noise: 0 };
        for kv in params.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("expected key=value in scenario spec, got '{kv}'")))?;
            let bad = || BenchError::Config(format!("cannot parse scenario setting {k}='{v}'"));
            match k {
                "n" => src.n = Some(v.parse().map_err(|_| bad())?),
                "noise_sd" => src.noise_sd = Some(v.parse().map_err(|_| bad())?),
                "p" => src.features = Some(v.parse().map_err(|_| bad())?),
                "extra_noise" => src.extra_noise = v.parse().map_err(|_| bad())?,
                _ => return Err(BenchError::Config(format!("unknown scenario setting '{k}'"))),
            }
        }
        Ok(DataSource::Scenario(src))
    }

    /// Scenario data is regenerated from `seed`; CSV data ignores it.
    pub fn load(&self, seed: u64) -> Result<LoadedData> {
        match self {
            DataSource::Csv { path, task } => {
                let bytes = std::fs::read(path).map_err(io_err(path))?;
                let data = read_csv(bytes.as_slice(), *task)?;
                Ok(LoadedData { data, sha256: sha256_hex(&bytes), metadata: None })
            }
            DataSource::Scenario(s) => {
                let sim = s.spec(seed).generate()?;
                let data =
                    if s.extra_noise > 0 { augment_with_noise(&sim.data, s.extra_noise, seed)? } else { sim.data };
                let sha256 = sha256_hex(csv_string(&data).as_bytes());
                Ok(LoadedData { data, sha256, metadata: Some(sim.metadata) })
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DataSource::Csv { path, .. } => path.display().to_string(),
            DataSource::Scenario(s) => format!("scenario:{}", s.scenario),
        }
    }
}

impl ScenarioSource {
    pub fn spec(&self, seed: u64) -> ScenarioSpec {
        let n = self.n.unwrap_or_else(|| default_n(self.scenario));
        let mut spec = match self.scenario {
            Scenario::Correlated => ScenarioSpec::correlated(n, seed),
            Scenario::Redundant => ScenarioSpec::redundant(n, seed),
            Scenario::Wide => ScenarioSpec::wide(n, self.features.unwrap_or(WIDE_FEATURES), seed),
        };
        if let Some(sd) = self.noise_sd {
            spec.noise_sd = sd;
        }
        spec
    }
}
