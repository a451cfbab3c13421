use std::path::PathBuf;
use std::process::ExitCode;

use abc_cli::compare::{execute_compare, render_table};
use abc_cli::config::{CompareConfig, RunConfig};
use abc_cli::run::execute_run;
use abc_cli::{CliError, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "abc",
    version,
    about = "Likelihood-free Bayesian inference with ABC samplers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one sampler and write population files plus report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Run several algorithms over replicate seeds and write compare.json.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Check a run or compare config without sampling.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Run {
            config,
            out_dir,
            quiet,
        } => {
            let cfg = RunConfig::load(&config)?;
            let out_dir = out_dir.unwrap_or_else(|| cfg.out_dir.clone());
            let outcome = execute_run(&cfg, &out_dir, !quiet)?;
            let r = &outcome.report;
            println!(
                "{:?}: {} generation(s), {} simulations, {:.2}s, outputs in {}",
                r.status,
                r.generations.len(),
                r.total_sims_used,
                r.wall_time_secs,
                out_dir.display()
            );
            if let Some(last) = r.generations.last() {
                println!(
                    "final epsilon {}: mean {:?} variance {:?}",
                    last.stats.epsilon, last.stats.weighted_mean, last.stats.weighted_var
                );
            }
            if let Some(o) = &r.oracle {
                println!(
                    "oracle: mean_abs_err {:.4} var_rel_err {:.4} ks {:.4}",
                    o.mean_abs_err, o.var_rel_err, o.ks_statistic
                );
            }
            if let Some(e) = &outcome.error {
                eprintln!("error: {e}");
            }
            Ok(outcome.exit_code())
        }
        Command::Compare {
            config,
            out_dir,
            quiet,
        } => {
            let cfg = CompareConfig::load(&config)?;
            let out_dir = out_dir.unwrap_or_else(|| cfg.out_dir.clone());
            let report = execute_compare(&cfg, &out_dir, !quiet)?;
            print!("{}", render_table(&report));
            Ok(if report.failures() > 0 { 3 } else { 0 })
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
            if text.contains("[[algorithms]]") {
                let runs = CompareConfig::from_toml(&text)?.resolve()?;
                println!("ok: compare config with {} algorithm(s)", runs.len());
            } else {
                let run = RunConfig::from_toml(&text)?.resolve()?;
                println!(
                    "ok: {} on {} with {} generation(s)",
                    run.algorithm.name(),
                    run.model,
                    run.schedule.len()
                );
            }
            Ok(0)
        }
    }
}
