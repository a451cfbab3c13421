//! JSON run reports.

use std::path::Path;

use abc_core::{GenerationStats, KernelMode, KernelScale64, OracleComparison};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BudgetExhausted,
    DegeneratePopulation,
    Failed,
}

impl RunStatus {
    pub fn from_error(err: &abc_core::AbcError) -> Self {
        use abc_core::AbcError;
        match err {
            AbcError::BudgetExhausted { .. } => RunStatus::BudgetExhausted,
            AbcError::DegeneratePopulation(_) => RunStatus::DegeneratePopulation,
            _ => RunStatus::Failed,
        }
    }
}

/// Covariance of the kernel that produced a generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub mode: KernelMode,
    pub covariance: Vec<Vec<f64>>,
}

impl KernelReport {
    pub fn from_scale(scale: &KernelScale64) -> Self {
        Self {
            mode: scale.mode(),
            covariance: scale.covariance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationReport {
    #[serde(flatten)]
    pub stats: GenerationStats<f64>,
    pub kernel: Option<KernelReport>,
    pub population_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McmcSummary {
    pub n_iter: usize,
    pub burn_in: usize,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub init_sims: u64,
    pub chain_sims: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub config: RunConfig,
    /// Worker threads actually used.
    pub workers: usize,
    pub generations: Vec<GenerationReport>,
    pub total_sims_used: u64,
    /// Simulations spent on a generation that never completed; zero unless
    /// sampling stopped early.
    pub unfinished_sims: u64,
    pub wall_time_secs: f64,
    pub oracle: Option<OracleComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcSummary>,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io("serializing report", std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}
