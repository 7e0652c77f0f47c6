use std::fs;
use std::path::{Path, PathBuf};

use ntd_core::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Solver settings as recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub beta: f64,
    pub epsilon: f64,
    pub core_dims: [usize; 3],
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub loss_eval_period: usize,
    pub clamp_data: bool,
}

impl From<&SolverConfig> for ConfigRecord {
    fn from(c: &SolverConfig) -> Self {
        ConfigRecord {
            beta: c.beta.value(),
            epsilon: c.epsilon,
            core_dims: c.core_dims,
            max_iters: c.max_iters,
            rel_tol: c.rel_tol,
            seed: c.seed,
            loss_eval_period: c.loss_eval_period,
            clamp_data: c.clamp_data,
        }
    }
}

/// Written next to every output. `argv` and `cwd` are enough to rerun the
/// command with `ntd replay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub cwd: PathBuf,
    pub inputs: Vec<PathBuf>,
    pub config: Option<ConfigRecord>,
    pub output_dir: PathBuf,
    pub wall_clock_seconds: f64,
    pub version: String,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.line(), e.to_string()))
    }
}
