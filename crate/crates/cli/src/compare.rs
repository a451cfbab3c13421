//! Replicated head-to-head runs of several algorithms at a shared final
//! tolerance.

use std::path::Path;

use abc_core::benchmarks;
use serde::Serialize;

use crate::config::{CompareConfig, ResolvedRun};
use crate::error::{CliError, Result};
use crate::report::{write_json, RunStatus};
use crate::run::sample;

pub const COMPARE_FILE: &str = "compare.json";

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub generations: usize,
    pub sims_used: u64,
    pub weighted_mean: Option<Vec<f64>>,
    pub weighted_var: Option<Vec<f64>>,
    pub mean_abs_err: Option<f64>,
    pub var_rel_err: Option<f64>,
    pub var_abs_err: Option<f64>,
    pub ks_statistic: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Some(Self {
            n,
            mean,
            sd,
            min: sorted[0],
            median,
            max: sorted[n - 1],
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub mean_abs_err: Option<MetricSummary>,
    pub var_rel_err: Option<MetricSummary>,
    pub var_abs_err: Option<MetricSummary>,
    pub ks_statistic: Option<MetricSummary>,
    pub sims_used: Option<MetricSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmResult {
    pub label: String,
    pub algorithm: String,
    pub final_epsilon: f64,
    pub replicates: Vec<ReplicateRecord>,
    pub summary: AlgorithmSummary,
    pub total_sims_used: u64,
    pub failures: usize,
}

/// Label of the algorithm with the smallest mean for each metric.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Winners {
    pub mean_abs_err: Option<String>,
    pub var_rel_err: Option<String>,
    pub var_abs_err: Option<String>,
    pub ks_statistic: Option<String>,
    pub sims_used: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub config: CompareConfig,
    pub final_epsilon: f64,
    pub algorithms: Vec<AlgorithmResult>,
    pub winners: Winners,
    pub total_sims_used: u64,
}

impl CompareReport {
    pub fn failures(&self) -> usize {
        self.algorithms.iter().map(|a| a.failures).sum()
    }
}

fn labels(runs: &[ResolvedRun]) -> Vec<String> {
    runs.iter()
        .enumerate()
        .map(|(i, r)| {
            let name = r.algorithm.name();
            let seen = runs[..i]
                .iter()
                .filter(|o| o.algorithm == r.algorithm)
                .count();
            if seen == 0 {
                name.to_string()
            } else {
                format!("{name}#{}", seen + 1)
            }
        })
        .collect()
}

fn run_replicate(run: &ResolvedRun, replicate: usize, seed: u64) -> Result<ReplicateRecord> {
    let mut run = run.clone();
    run.settings.seed = seed;
    let result = sample(&run, false)?;
    let reported = match &result.mcmc {
        Some(m) => m.init_sims + m.chain_sims,
        None => result.reported_sims(),
    };
    if result.error.is_none() && reported != result.simulator_calls {
        return Err(CliError::Sampler(abc_core::AbcError::InvalidConfig(
            format!(
                "sampler reported {reported} simulations but the model counted {}",
                result.simulator_calls
            ),
        )));
    }
    let oracle = result.oracle_comparison(&run.model)?;
    let variance = benchmarks::oracle_by_id(&run.model).map(|o| o.variance());
    let last = result.final_table().and(result.generations.last());
    Ok(ReplicateRecord {
        replicate,
        seed,
        status: result.status(),
        message: result.error.as_ref().map(ToString::to_string),
        generations: result.generations.len(),
        sims_used: result.simulator_calls,
        weighted_mean: last.map(|g| g.stats.weighted_mean.clone()),
        weighted_var: last.map(|g| g.stats.weighted_var.clone()),
        mean_abs_err: oracle.map(|o| o.mean_abs_err),
        var_rel_err: oracle.map(|o| o.var_rel_err),
        var_abs_err: oracle.zip(variance).map(|(o, v)| o.var_rel_err * v),
        ks_statistic: oracle.map(|o| o.ks_statistic),
    })
}

fn summarize(records: &[ReplicateRecord]) -> AlgorithmSummary {
    let pick = |f: fn(&ReplicateRecord) -> Option<f64>| {
        MetricSummary::from_values(&records.iter().filter_map(f).collect::<Vec<_>>())
    };
    AlgorithmSummary {
        mean_abs_err: pick(|r| r.mean_abs_err),
        var_rel_err: pick(|r| r.var_rel_err),
        var_abs_err: pick(|r| r.var_abs_err),
        ks_statistic: pick(|r| r.ks_statistic),
        sims_used: pick(|r| (r.status == RunStatus::Completed).then_some(r.sims_used as f64)),
    }
}

fn winner(
    algorithms: &[AlgorithmResult],
    f: fn(&AlgorithmSummary) -> Option<MetricSummary>,
) -> Option<String> {
    algorithms
        .iter()
        .filter_map(|a| f(&a.summary).map(|m| (m.mean, &a.label)))
        .fold(
            None,
            |best: Option<(f64, &String)>, (m, label)| match best {
                Some((b, _)) if b <= m => best,
                _ => Some((m, label)),
            },
        )
        .map(|(_, label)| label.clone())
}

/// Runs every algorithm for every replicate. Replicate `r` uses seed
/// `seed + r` for all algorithms.
pub fn run_compare(config: &CompareConfig, progress: bool) -> Result<CompareReport> {
    let runs = config.resolve()?;
    let labels = labels(&runs);
    let mut algorithms = Vec::with_capacity(runs.len());
    for (run, label) in runs.iter().zip(labels) {
        let mut replicates = Vec::with_capacity(config.replicates);
        for r in 0..config.replicates {
            let seed = config.seed.wrapping_add(r as u64);
            let rec = run_replicate(run, r, seed)?;
            if progress {
                eprintln!(
                    "{label} replicate {r} (seed {seed}): {:?}, sims {}",
                    rec.status, rec.sims_used
                );
            }
            replicates.push(rec);
        }
        algorithms.push(AlgorithmResult {
            label,
            algorithm: run.algorithm.name().to_string(),
            final_epsilon: run.final_epsilon(),
            summary: summarize(&replicates),
            total_sims_used: replicates.iter().map(|r| r.sims_used).sum(),
            failures: replicates
                .iter()
                .filter(|r| r.status != RunStatus::Completed)
                .count(),
            replicates,
        });
    }
    let winners = Winners {
        mean_abs_err: winner(&algorithms, |s| s.mean_abs_err),
        var_rel_err: winner(&algorithms, |s| s.var_rel_err),
        var_abs_err: winner(&algorithms, |s| s.var_abs_err),
        ks_statistic: winner(&algorithms, |s| s.ks_statistic),
        sims_used: winner(&algorithms, |s| s.sims_used),
    };
    Ok(CompareReport {
        config: config.clone(),
        final_epsilon: runs[0].final_epsilon(),
        total_sims_used: algorithms.iter().map(|a| a.total_sims_used).sum(),
        algorithms,
        winners,
    })
}

/// Runs the comparison and writes `compare.json` into `out_dir`.
pub fn execute_compare(
    config: &CompareConfig,
    out_dir: &Path,
    progress: bool,
) -> Result<CompareReport> {
    let report = run_compare(config, progress)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
    write_json(&report, &out_dir.join(COMPARE_FILE))?;
    Ok(report)
}

/// Plain-text summary table.
pub fn render_table(report: &CompareReport) -> String {
    let cell = |m: Option<MetricSummary>| {
        m.map_or_else(
            || "-".to_string(),
            |m| format!("{:.4} ± {:.4}", m.mean, m.sd),
        )
    };
    let mut out = format!(
        "{:<12} {:>20} {:>20} {:>20} {:>14}\n",
        "algorithm", "mean_abs_err", "var_rel_err", "ks_statistic", "sims_used"
    );
    for a in &report.algorithms {
        out.push_str(&format!(
            "{:<12} {:>20} {:>20} {:>20} {:>14}\n",
            a.label,
            cell(a.summary.mean_abs_err),
            cell(a.summary.var_rel_err),
            cell(a.summary.ks_statistic),
            a.total_sims_used
        ));
    }
    out.push_str(&format!("total simulations: {}\n", report.total_sims_used));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_summary_basics() {
        let m = MetricSummary::from_values(&[3.0, 1.0, 2.0, 6.0]).unwrap();
        assert_eq!(
            (m.n, m.mean, m.min, m.median, m.max),
            (4, 3.0, 1.0, 2.5, 6.0)
        );
        assert!((m.sd - (14.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(MetricSummary::from_values(&[]).is_none());
        assert_eq!(MetricSummary::from_values(&[5.0]).unwrap().sd, 0.0);
    }
}
