//! Executes one resolved configuration.

use std::path::Path;
use std::time::Instant;

use abc_core::{
    abc_rejection, benchmarks, compare_to_oracle, run_abc_mcmc, run_sequential, AbcError,
    GenerationStats, ModelSpec64, OracleComparison, Population64, Reweighting,
};

use crate::config::{Algorithm, ResolvedRun, RunConfig};
use crate::error::{CliError, Result};
use crate::persist::{population_file_name, population_path, PopulationTable};
use crate::report::{
    write_json, GenerationReport, KernelReport, McmcSummary, RunReport, RunStatus, REPORT_FILE,
};

/// Everything a finished (or stopped) sampler produced.
#[derive(Debug)]
pub struct SampleResult {
    pub generations: Vec<GenerationReport>,
    pub tables: Vec<PopulationTable>,
    pub mcmc: Option<McmcSummary>,
    /// Simulator calls as counted by the model itself.
    pub simulator_calls: u64,
    pub error: Option<AbcError>,
}

impl SampleResult {
    pub fn final_table(&self) -> Option<&PopulationTable> {
        if self.error.is_some() {
            None
        } else {
            self.tables.last()
        }
    }

    /// Sum of the per-generation charges reported by the sampler.
    pub fn reported_sims(&self) -> u64 {
        self.generations.iter().map(|g| g.stats.sims_used).sum()
    }

    pub fn status(&self) -> RunStatus {
        self.error
            .as_ref()
            .map_or(RunStatus::Completed, RunStatus::from_error)
    }

    /// Oracle comparison of the final population, when the model has one.
    pub fn oracle_comparison(&self, model: &str) -> Result<Option<OracleComparison>> {
        let (Some(oracle), Some(table)) = (benchmarks::oracle_by_id(model), self.final_table())
        else {
            return Ok(None);
        };
        Ok(Some(compare_to_oracle(
            &table.thetas,
            &table.weights,
            0,
            oracle.as_ref(),
        )?))
    }
}

fn record(
    pop: &Population64,
    generations: &mut Vec<GenerationReport>,
    tables: &mut Vec<PopulationTable>,
    progress: bool,
) -> abc_core::Result<()> {
    let stats = GenerationStats::from_population(pop)?;
    if progress {
        eprintln!(
            "generation {}: epsilon {} acceptance {:.4} ess {:.1} sims {}",
            pop.t, pop.epsilon, stats.acceptance_rate, stats.ess, stats.sims_used
        );
    }
    generations.push(GenerationReport {
        stats,
        kernel: pop.scale.as_ref().map(KernelReport::from_scale),
        population_file: population_file_name(pop.t),
    });
    tables.push(PopulationTable::from_population(pop));
    Ok(())
}

/// Runs the sampler on a fresh instance of the model. Sampling failures are
/// returned inside the result alongside any generations finished before them.
pub fn sample(run: &ResolvedRun, progress: bool) -> Result<SampleResult> {
    let model: ModelSpec64 = benchmarks::model_by_id(&run.model)?;
    let mut generations = Vec::new();
    let mut tables = Vec::new();
    let mut mcmc = None;

    let outcome: abc_core::Result<()> = match run.algorithm {
        Algorithm::Rejection => abc_rejection(&model, run.schedule.last(), &run.settings)
            .and_then(|pop| record(&pop, &mut generations, &mut tables, progress)),
        Algorithm::Pmc | Algorithm::Prc => {
            let reweighting = if run.algorithm == Algorithm::Pmc {
                Reweighting::Pmc
            } else {
                Reweighting::Prc
            };
            run_sequential(&model, &run.schedule, &run.settings, reweighting, |pop| {
                record(pop, &mut generations, &mut tables, progress)
            })
            .map(|_| ())
        }
        Algorithm::Mcmc => {
            let options = run
                .mcmc
                .as_ref()
                .ok_or_else(|| AbcError::InvalidConfig("mcmc options missing".into()))?;
            run_abc_mcmc(&model, options, &run.settings).and_then(|out| {
                let n = out.chain.samples.len();
                let weights = vec![1.0 / n as f64; n];
                let acceptance_rate = out.chain.acceptance_rate();
                let stats = GenerationStats::from_weighted(
                    1,
                    options.epsilon,
                    &out.chain.samples,
                    &weights,
                    acceptance_rate,
                    out.total_sims(),
                )?;
                if progress {
                    eprintln!(
                        "mcmc: {} kept iterations, acceptance {:.4}, sims {}",
                        n,
                        acceptance_rate,
                        out.total_sims()
                    );
                }
                generations.push(GenerationReport {
                    stats,
                    kernel: None,
                    population_file: population_file_name(1),
                });
                tables.push(PopulationTable {
                    t: 1,
                    thetas: out.chain.samples,
                    weights,
                    distances: out.chain.distances,
                });
                mcmc = Some(McmcSummary {
                    n_iter: options.n_iter,
                    burn_in: options.burn_in,
                    accepted: out.chain.accepted,
                    acceptance_rate,
                    init_sims: out.init_sims,
                    chain_sims: out.chain.sims_used,
                });
                Ok(())
            })
        }
    };

    Ok(SampleResult {
        generations,
        tables,
        mcmc,
        simulator_calls: model.simulator_calls(),
        error: outcome.err(),
    })
}

/// Outcome of `run`: the report written to disk plus the error, if any,
/// that stopped sampling.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub error: Option<CliError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, CliError::exit_code)
    }
}

/// Validates `config`, samples, and writes population files and the report
/// into `out_dir`. Configuration errors are returned as `Err`; sampling
/// errors still produce a report and partial outputs.
pub fn execute_run(config: &RunConfig, out_dir: &Path, progress: bool) -> Result<RunOutcome> {
    let resolved = config.resolve()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;

    let start = Instant::now();
    let result = sample(&resolved, progress)?;
    let wall_time_secs = start.elapsed().as_secs_f64();

    for table in &result.tables {
        table.write(&population_path(out_dir, table.t))?;
    }
    let oracle = result.oracle_comparison(&resolved.model)?;
    let report = RunReport {
        status: result.status(),
        message: result.error.as_ref().map(ToString::to_string),
        config: config.clone(),
        workers: match resolved.settings.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        },
        total_sims_used: result.simulator_calls,
        unfinished_sims: result
            .simulator_calls
            .saturating_sub(result.reported_sims()),
        wall_time_secs,
        oracle,
        mcmc: result.mcmc,
        generations: result.generations,
    };
    write_json(&report, &out_dir.join(REPORT_FILE))?;
    Ok(RunOutcome {
        report,
        error: result.error.map(CliError::from),
    })
}
