//! Run configuration for the command-line pipeline.
//!
//! Precedence is flag > config file > default. The resolved form is
//! embedded verbatim in every output file, so two runs with identical
//! embedded configurations are byte-identical; the thread count is
//! deliberately excluded because it must not influence results.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DistanceMetric;
use crate::dlm::DlmConfig;
use crate::error::{Error, Result};
use crate::hyper::DEFAULT_D_MAX;
use crate::solver::Limits;
use crate::synthetic::Dynamics;

/// Which joint problem a fit or sweep runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Fixed,
    Joint,
    Cluster,
}

impl ModeName {
    pub fn parse(text: &str) -> Result<ModeName> {
        match text {
            "fixed" => Ok(ModeName::Fixed),
            "joint" => Ok(ModeName::Joint),
            "cluster" => Ok(ModeName::Cluster),
            other => Err(Error::input(format!(
                "unknown mode {other:?}; expected fixed, joint or cluster"
            ))),
        }
    }
}

pub fn parse_metric(text: &str) -> Result<DistanceMetric> {
    match text {
        "shd" => Ok(DistanceMetric::Shd),
        "xor" => Ok(DistanceMetric::Xor),
        other => Err(Error::input(format!(
            "unknown metric {other:?}; expected shd or xor"
        ))),
    }
}

/// Synthetic-generation parameters as they appear in the config file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub p: usize,
    pub subjects: usize,
    pub steps: usize,
    pub divergence: f64,
    pub obs_noise: f64,
    pub coef_drift: f64,
    pub coef_scale: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        let d = Dynamics::default();
        SyntheticParams {
            p: 4,
            subjects: 3,
            steps: 100,
            divergence: 1.0,
            obs_noise: d.obs_noise,
            coef_drift: d.coef_drift,
            coef_scale: d.coef_scale,
        }
    }
}

impl SyntheticParams {
    pub fn dynamics(&self) -> Dynamics {
        Dynamics {
            obs_noise: self.obs_noise,
            coef_drift: self.coef_drift,
            coef_scale: self.coef_scale,
        }
    }
}

/// The optional structured config file (TOML). Every field can also be
/// given as a flag, which wins.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub manifest: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub hyper: Option<PathBuf>,
    pub mode: Option<String>,
    pub network: Option<PathBuf>,
    pub clusters: Option<usize>,
    pub grid: Option<Vec<f64>>,
    pub metric: Option<String>,
    pub time_limit: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub d_max: Option<usize>,
    pub dlm: Option<DlmConfig>,
    pub synthetic: Option<SyntheticParams>,
    pub solution: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
    pub p: Option<usize>,
    pub subjects: Option<usize>,
    pub steps: Option<usize>,
    pub divergence: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {display}"), e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: display,
            record: 0,
            message: e.to_string(),
        })
    }
}

/// Flag values as collected by the CLI; `None` defers to the file.
#[derive(Clone, Debug, Default)]
pub struct FlagOverrides {
    pub manifest: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub hyper: Option<PathBuf>,
    pub mode: Option<String>,
    pub network: Option<PathBuf>,
    pub clusters: Option<usize>,
    pub grid: Option<Vec<f64>>,
    pub metric: Option<String>,
    pub time_limit: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub d_max: Option<usize>,
    pub solution: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
    pub p: Option<usize>,
    pub subjects: Option<usize>,
    pub steps: Option<usize>,
    pub divergence: Option<f64>,
}

/// Fully resolved configuration with defaults expanded. This is the
/// exact structure embedded in output files.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub tool_version: String,
    pub manifest: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub hyper: Option<PathBuf>,
    pub mode: Option<ModeName>,
    pub network: Option<PathBuf>,
    pub clusters: Option<usize>,
    pub grid: Option<Vec<f64>>,
    pub metric: DistanceMetric,
    pub time_limit: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub d_max: usize,
    pub dlm: DlmConfig,
    pub synthetic: SyntheticParams,
    pub solution: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
    /// Worker threads (0 = all available); never serialized because the
    /// thread count must not affect any output byte.
    #[serde(skip)]
    pub threads: usize,
}

impl ResolvedConfig {
    pub fn resolve(
        command: &str,
        file: Option<FileConfig>,
        flags: FlagOverrides,
    ) -> Result<ResolvedConfig> {
        let file = file.unwrap_or_default();
        let mode = match flags.mode.or(file.mode) {
            Some(text) => Some(ModeName::parse(&text)?),
            None => None,
        };
        let metric = match flags.metric.or(file.metric) {
            Some(text) => parse_metric(&text)?,
            None => DistanceMetric::Shd,
        };
        let mut synthetic = file.synthetic.unwrap_or_default();
        if let Some(p) = flags.p.or(file.p) {
            synthetic.p = p;
        }
        if let Some(s) = flags.subjects.or(file.subjects) {
            synthetic.subjects = s;
        }
        if let Some(s) = flags.steps.or(file.steps) {
            synthetic.steps = s;
        }
        if let Some(d) = flags.divergence.or(file.divergence) {
            synthetic.divergence = d;
        }
        Ok(ResolvedConfig {
            command: command.to_string(),
            tool_version: crate::VERSION.to_string(),
            manifest: flags.manifest.or(file.manifest),
            cache_dir: flags.cache_dir.or(file.cache_dir),
            hyper: flags.hyper.or(file.hyper),
            mode,
            network: flags.network.or(file.network),
            clusters: flags.clusters.or(file.clusters),
            grid: flags.grid.or(file.grid),
            metric,
            time_limit: flags.time_limit.or(file.time_limit),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            d_max: flags.d_max.or(file.d_max).unwrap_or(DEFAULT_D_MAX),
            dlm: file.dlm.unwrap_or_default(),
            synthetic,
            solution: flags.solution.or(file.solution),
            sweep: flags.sweep.or(file.sweep),
            threads: flags.threads.or(file.threads).unwrap_or(0),
        })
    }

    pub fn limits(&self) -> Limits {
        Limits {
            time: self.time_limit.map(Duration::from_secs_f64),
            ..Limits::default()
        }
    }

    pub fn require_manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::input("a manifest is required (--manifest)"))
    }

    pub fn require_cache_dir(&self) -> Result<&Path> {
        self.cache_dir
            .as_deref()
            .ok_or_else(|| Error::input("a cache directory is required (--cache-dir)"))
    }

    pub fn require_mode(&self) -> Result<ModeName> {
        self.mode
            .ok_or_else(|| Error::input("a mode is required (--mode fixed|joint|cluster)"))
    }
}
