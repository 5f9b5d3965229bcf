//! `cwlm` command line: conditioned weak-measurement output statistics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cwlm::cli::{self, run, Scenario, ScenarioConfig, SweepQuantity};
use cwlm::error::{CwlmError, Result};

#[derive(Parser)]
#[command(
    name = "cwlm",
    version,
    about = "Full statistics of time-integrated weak-measurement outputs for a \
             pre- and post-selected qubit"
)]
struct Cli {
    /// Scenario configuration (TOML, or a JSON sidecar from a previous run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Fail (exit 3) on physics-validation warnings and (exit 4) on degraded
    /// numerical quality instead of only recording them.
    #[arg(long, global = true)]
    strict: bool,

    /// Override the Monte Carlo seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Size of the worker thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conditioned output distributions for every configured window.
    Distribution,
    /// Tabulate a quantity against the configured window series.
    Sweep {
        /// mean | cumulants | difference_max
        #[arg(long, default_value = "mean")]
        quantity: String,
    },
    /// Check the detector/qubit parameters against the quantum constraints.
    Validate,
    /// Stochastic-trajectory Monte Carlo cross-check of the distributions.
    Trajectories,
    /// Run a built-in scenario (fig1 .. fig6).
    Preset { name: String },
}

fn load_scenario(cli: &Cli) -> Result<Scenario> {
    let path = cli.config.as_ref().ok_or_else(|| {
        CwlmError::InvalidParameter("this subcommand needs --config PATH".into())
    })?;
    let config = ScenarioConfig::load(path)?;
    config.validate()
}

/// Strict-mode physics gate shared by the computing subcommands.
fn strict_gate(scenario: &Scenario, strict: bool) -> Result<()> {
    if strict {
        scenario.validation_report()?.into_strict()?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Validate => {
            let scenario = load_scenario(cli)?;
            let report = run::run_validate(&scenario, &cli.out)?;
            for check in &report.checks {
                let status = if check.pass { "pass" } else { "FAIL" };
                println!("{status}  {}  margin {:+.6e}", check.name, check.margin);
            }
            println!(
                "gamma = {:.6} /us, t_a = {:.6} us, K = {:.4}",
                report.gamma, report.t_a, report.quality_k
            );
            if !report.passed() {
                if cli.strict {
                    report.into_strict()?;
                }
                println!("validation failed (advisory; use --strict to make this fatal)");
            }
            Ok(0)
        }
        Command::Distribution => {
            let scenario = load_scenario(cli)?;
            strict_gate(&scenario, cli.strict)?;
            let sidecar = run::run_distribution(&scenario, &cli.out)?;
            report_files(&sidecar.files, &cli.out);
            finish_quality(&sidecar, cli.strict)
        }
        Command::Sweep { quantity } => {
            let scenario = load_scenario(cli)?;
            strict_gate(&scenario, cli.strict)?;
            let q: SweepQuantity = quantity.parse()?;
            let path = run::run_sweep(&scenario, q, &cli.out)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::Trajectories => {
            let scenario = load_scenario(cli)?;
            strict_gate(&scenario, cli.strict)?;
            let summary = run::run_trajectories(&scenario, &cli.out, cli.seed)?;
            for case in &summary.cases {
                println!(
                    "T = {} us, {}: accepted {}/{} (predicted {:.4}), KS = {:.4}",
                    case.t_us,
                    case.selector,
                    case.n_accepted,
                    case.n_total,
                    case.predicted_acceptance,
                    case.ks_distance
                );
            }
            Ok(0)
        }
        Command::Preset { name } => {
            let sidecar = run::run_preset(name, &cli.out, cli.seed)?;
            if cli.strict {
                if let Some(report) = &sidecar.validation {
                    report.clone().into_strict()?;
                }
            }
            report_files(&sidecar.files, &cli.out);
            finish_quality(&sidecar, cli.strict)
        }
    }
}

fn report_files(files: &[String], out: &std::path::Path) {
    for f in files {
        println!("wrote {}", out.join(f).display());
    }
}

fn finish_quality(sidecar: &cli::Sidecar, strict: bool) -> Result<i32> {
    if sidecar.degraded() {
        eprintln!("warning: run marked degraded (normalization/imaginary residual > 1e-6)");
        if strict {
            return Ok(4);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()
        {
            eprintln!("error: could not size the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
