//! TOML run and compare configurations.

use std::path::{Path, PathBuf};

use abc_core::{
    benchmarks, AutoSchedule, KernelMode, McmcOptions, SamplerSettings, ToleranceSchedule,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable overriding the configured worker count.
pub const WORKERS_ENV: &str = "ABC_WORKERS";

/// Simulator-call cap used when a config does not set `budget`.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rejection,
    Pmc,
    Prc,
    Mcmc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rejection => "rejection",
            Algorithm::Pmc => "pmc",
            Algorithm::Prc => "prc",
            Algorithm::Mcmc => "mcmc",
        }
    }
}

/// `workers = 4` or `workers = "auto"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Workers {
    Count(usize),
    Named(String),
}

impl Default for Workers {
    fn default() -> Self {
        Workers::Named("auto".into())
    }
}

impl Workers {
    /// Resolved count; `0` means one per core.
    pub fn resolve(&self) -> Result<usize> {
        match self {
            Workers::Count(0) => Err(CliError::Config("workers must be at least 1".into())),
            Workers::Count(n) => Ok(*n),
            Workers::Named(s) if s == "auto" => Ok(0),
            Workers::Named(s) => Err(CliError::Config(format!(
                "workers must be a positive integer or \"auto\", got {s:?}"
            ))),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let w = match s.parse::<usize>() {
            Ok(n) => Workers::Count(n),
            Err(_) => Workers::Named(s.to_string()),
        };
        w.resolve()?;
        Ok(w)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub mode: KernelMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoScheduleConfig {
    pub quantile: f64,
    pub generations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub n_iter: usize,
    #[serde(default)]
    pub burn_in: usize,
    pub proposal_sd: Vec<f64>,
}

/// Per-algorithm settings, shared by run configs and compare entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub n_particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_schedule: Option<AutoScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcConfig>,
}

/// Document read by `run --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub model: String,
    #[serde(default)]
    pub n_particles: Option<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub workers: Workers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_schedule: Option<AutoScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcConfig>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("abc_out")
}

/// Document read by `compare --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub model: String,
    pub seed: u64,
    pub replicates: usize,
    #[serde(default)]
    pub workers: Workers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default = "default_compare_dir")]
    pub out_dir: PathBuf,
    pub algorithms: Vec<AlgorithmConfig>,
}

fn default_compare_dir() -> PathBuf {
    PathBuf::from("abc_compare")
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub algorithm: Algorithm,
    pub model: String,
    pub schedule: ToleranceSchedule<f64>,
    pub settings: SamplerSettings,
    pub mcmc: Option<McmcOptions<f64>>,
}

impl ResolvedRun {
    pub fn final_epsilon(&self) -> f64 {
        self.schedule.last()
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_config(path)?)
    }

    pub fn algorithm_config(&self) -> AlgorithmConfig {
        AlgorithmConfig {
            algorithm: self.algorithm,
            n_particles: self.n_particles,
            schedule: self.schedule.clone(),
            epsilon: self.epsilon,
            kernel: self.kernel.clone(),
            auto_schedule: self.auto_schedule.clone(),
            mcmc: self.mcmc.clone(),
        }
    }

    /// Validates everything and resolves workers (honoring `ABC_WORKERS`).
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let workers = resolve_workers(&self.workers)?;
        self.algorithm_config()
            .resolve(&self.model, self.seed, workers, self.budget)
    }
}

impl CompareConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_config(path)?)
    }

    /// Resolves every algorithm entry for replicate 0 and checks that they
    /// all share the final tolerance.
    pub fn resolve(&self) -> Result<Vec<ResolvedRun>> {
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(CliError::Config("no algorithms listed".into()));
        }
        let workers = resolve_workers(&self.workers)?;
        let runs = self
            .algorithms
            .iter()
            .map(|a| a.resolve(&self.model, self.seed, workers, self.budget))
            .collect::<Result<Vec<_>>>()?;
        let target = runs[0].final_epsilon();
        if let Some(bad) = runs.iter().find(|r| r.final_epsilon() != target) {
            return Err(CliError::Config(format!(
                "algorithms must share the final tolerance: {} ends at {} but {} ends at {}",
                runs[0].algorithm.name(),
                target,
                bad.algorithm.name(),
                bad.final_epsilon()
            )));
        }
        Ok(runs)
    }
}

impl AlgorithmConfig {
    pub fn resolve(
        &self,
        model: &str,
        seed: u64,
        workers: usize,
        budget: Option<u64>,
    ) -> Result<ResolvedRun> {
        if !benchmarks::MODEL_IDS.contains(&model) {
            return Err(CliError::Config(format!(
                "unknown model {model:?}; expected one of {:?}",
                benchmarks::MODEL_IDS
            )));
        }
        let epsilons = match (&self.schedule, self.epsilon) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "set either schedule or epsilon, not both".into(),
                ))
            }
            (Some(s), None) => s.clone(),
            (None, Some(e)) => vec![e],
            (None, None) => return Err(CliError::Config("missing schedule (or epsilon)".into())),
        };
        let schedule =
            ToleranceSchedule::new(epsilons).map_err(|e| CliError::Config(e.to_string()))?;

        let n_particles = match (self.algorithm, self.n_particles) {
            (Algorithm::Mcmc, n) => n.unwrap_or(1),
            (_, Some(n)) => n,
            (_, None) => return Err(CliError::Config("missing n_particles".into())),
        };
        let min = match self.algorithm {
            Algorithm::Pmc | Algorithm::Prc => 2,
            _ => 1,
        };
        if n_particles < min {
            return Err(CliError::Config(format!(
                "n_particles must be at least {min} for {}, got {n_particles}",
                self.algorithm.name()
            )));
        }
        if matches!(self.algorithm, Algorithm::Rejection | Algorithm::Mcmc) && schedule.len() > 1 {
            return Err(CliError::Config(format!(
                "{} takes a single tolerance, got a schedule of {}",
                self.algorithm.name(),
                schedule.len()
            )));
        }
        let auto_schedule = match &self.auto_schedule {
            None => None,
            Some(_) if !matches!(self.algorithm, Algorithm::Pmc | Algorithm::Prc) => {
                return Err(CliError::Config(
                    "auto_schedule applies only to pmc and prc".into(),
                ))
            }
            Some(a) => {
                if !(a.quantile > 0.0 && a.quantile < 1.0) || a.generations == 0 {
                    return Err(CliError::Config(
                        "auto_schedule needs quantile in (0, 1) and generations >= 1".into(),
                    ));
                }
                Some(AutoSchedule {
                    quantile: a.quantile,
                    max_generations: a.generations,
                })
            }
        };
        let mcmc = match (self.algorithm, &self.mcmc) {
            (Algorithm::Mcmc, Some(m)) => {
                if m.n_iter == 0 {
                    return Err(CliError::Config("mcmc.n_iter must be positive".into()));
                }
                if m.proposal_sd.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                    return Err(CliError::Config("mcmc.proposal_sd must be positive".into()));
                }
                Some(McmcOptions {
                    epsilon: schedule.last(),
                    n_iter: m.n_iter,
                    burn_in: m.burn_in,
                    proposal_sd: m.proposal_sd.clone(),
                })
            }
            (Algorithm::Mcmc, None) => {
                return Err(CliError::Config("mcmc runs need an [mcmc] table".into()))
            }
            (_, Some(_)) => {
                return Err(CliError::Config(
                    "[mcmc] table given for a non-mcmc run".into(),
                ))
            }
            (_, None) => None,
        };
        let settings = SamplerSettings::new(n_particles, seed)
            .with_workers(workers)
            .with_budget(Some(budget.unwrap_or(DEFAULT_BUDGET)))
            .with_kernel_mode(self.kernel.mode)
            .with_auto_schedule(auto_schedule);
        Ok(ResolvedRun {
            algorithm: self.algorithm,
            model: model.to_string(),
            schedule,
            settings,
            mcmc,
        })
    }
}

fn resolve_workers(configured: &Workers) -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => Workers::parse(&v)
            .and_then(|w| w.resolve())
            .map_err(|e| CliError::Config(format!("{WORKERS_ENV}: {e}"))),
        Err(_) => configured.resolve(),
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PMC: &str = r#"
        algorithm = "pmc"
        model = "mixture-toy"
        n_particles = 100
        seed = 7
        schedule = [2.0, 0.5, 0.1]
        workers = 2
        budget = 1000000
        out_dir = "out"
        [kernel]
        mode = "full-covariance"
    "#;

    #[test]
    fn parses_full_config() {
        let c = RunConfig::from_toml(PMC).unwrap();
        assert_eq!(c.algorithm, Algorithm::Pmc);
        assert_eq!(c.workers, Workers::Count(2));
        assert_eq!(c.kernel.mode, KernelMode::FullCovariance);
        let r = c.resolve().unwrap();
        assert_eq!(r.schedule.epsilons(), &[2.0, 0.5, 0.1]);
        assert_eq!(r.settings.budget, Some(1_000_000));
    }

    #[test]
    fn increasing_schedule_names_entries() {
        let text = PMC.replace("[2.0, 0.5, 0.1]", "[1.0, 2.0]");
        let err = RunConfig::from_toml(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(
            msg.contains("entry 1 (2)") && msg.contains("entry 0 (1)"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_keys_and_models_rejected() {
        assert!(RunConfig::from_toml(&format!("{PMC}\nbogus = 1")).is_err());
        let text = PMC.replace("mixture-toy", "nope");
        assert_eq!(
            RunConfig::from_toml(&text)
                .unwrap()
                .resolve()
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn pmc_needs_two_particles() {
        let text = PMC.replace("n_particles = 100", "n_particles = 1");
        assert!(RunConfig::from_toml(&text).unwrap().resolve().is_err());
    }

    #[test]
    fn workers_auto_and_invalid() {
        assert_eq!(Workers::default().resolve().unwrap(), 0);
        assert!(Workers::Named("many".into()).resolve().is_err());
        assert!(Workers::Count(0).resolve().is_err());
        assert_eq!(Workers::parse(" 3 ").unwrap(), Workers::Count(3));
    }

    #[test]
    fn mcmc_requires_table() {
        let text = r#"
            algorithm = "mcmc"
            model = "mixture-toy"
            seed = 1
            epsilon = 0.1
        "#;
        assert!(RunConfig::from_toml(text).unwrap().resolve().is_err());
        let ok = format!("{text}\n[mcmc]\nn_iter = 10\nproposal_sd = [1.0]\n");
        let r = RunConfig::from_toml(&ok).unwrap().resolve().unwrap();
        assert_eq!(r.mcmc.unwrap().epsilon, 0.1);
    }

    #[test]
    fn compare_requires_matched_tolerance() {
        let text = r#"
            model = "mixture-toy"
            seed = 1
            replicates = 2
            [[algorithms]]
            algorithm = "pmc"
            n_particles = 10
            schedule = [1.0, 0.5]
            [[algorithms]]
            algorithm = "prc"
            n_particles = 10
            schedule = [1.0, 0.4]
        "#;
        let err = CompareConfig::from_toml(text)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("final tolerance"));
        let fixed = text.replace("[1.0, 0.4]", "[1.0, 0.5]");
        assert_eq!(
            CompareConfig::from_toml(&fixed)
                .unwrap()
                .resolve()
                .unwrap()
                .len(),
            2
        );
    }
}
