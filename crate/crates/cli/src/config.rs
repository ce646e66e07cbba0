//! Run configuration file (TOML).
//!
//! ```toml
//! schema_version = 1
//! threads = 4
//!
//! [simulate]
//! h = 0.3333333333333333
//! n = 10000
//! rho = 0.1
//! sigma = [[0.0, 1.0], [0.5, 2.0]]
//! kernel = "riemann_liouville"
//!
//! [estimation]
//! theta = 1.0
//! ```
//!
//! Keys are the long flag names with `-` replaced by `_`. Unknown keys and
//! unknown sections are rejected.

use std::path::{Path, PathBuf};

use fracnoise::{Kernel, NoiseDist, Schedule};
use serde::Deserialize;

use crate::args::{GridArg, OutputFormat, TableFormat};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub threads: Option<usize>,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default)]
    pub input: InputSection,
    #[serde(default)]
    pub estimate: EstimateSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub h: Option<f64>,
    pub n: Option<usize>,
    pub t_end: Option<f64>,
    pub sigma: Option<Schedule>,
    pub rho: Option<Schedule>,
    pub noise_dist: Option<NoiseDist>,
    pub x0: Option<f64>,
    pub drift: Option<f64>,
    pub kernel: Option<Kernel>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    pub theta: Option<f64>,
    pub kappa_init: Option<f64>,
    pub conv_threshold: Option<f64>,
    pub max_iters: Option<usize>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub fixed_kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub dt: Option<f64>,
    pub value_col: Option<String>,
    pub timestamp_col: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub t_end: Option<f64>,
    pub format: Option<OutputFormat>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub grid: Option<GridArg>,
    pub h: Option<Vec<f64>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub t_end: Option<f64>,
    pub sigma: Option<Schedule>,
    pub rho: Option<Schedule>,
    pub noise_dist: Option<NoiseDist>,
    pub kernel: Option<Kernel>,
    pub format: Option<TableFormat>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub deltas: Option<Vec<f64>>,
    pub block_length: Option<f64>,
    pub no_preavg: Option<bool>,
    pub baseline: Option<bool>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: ConfigFile = toml::from_str(text)
            .map_err(|e| CliError::Usage(format!("{}: {}", origin.display(), e.message())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "{}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                origin.display(),
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }
}

/// Parses `1.5` or `0:1,0.5:2` into a schedule.
pub fn parse_schedule(text: &str) -> Result<Schedule, CliError> {
    let bad = || CliError::Usage(format!("invalid schedule {text:?}; use VALUE or TIME:VALUE,..."));
    if !text.contains(':') {
        return text.trim().parse().map(Schedule::Constant).map_err(|_| bad());
    }
    text.split(',')
        .map(|pair| {
            let (t, v) = pair.split_once(':').ok_or_else(bad)?;
            Ok((t.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Schedule::Piecewise)
}
