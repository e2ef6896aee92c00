use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ocs_cli::config::EXPERIMENTS;
use ocs_cli::{diff, runner, CliError, Overrides, RunConfig, RunReport};

#[derive(Parser)]
#[command(name = "ocs", version, about = "Verification runner for orthogonal complex structure experiments")]
struct Cli {
    /// Worker threads for grid computations.
    #[arg(long, env = "OCS_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a config file.
    Run {
        config: PathBuf,
        /// Override `manifold.resolution`.
        #[arg(long)]
        resolution: Option<usize>,
        /// Override `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two reports residual by residual.
    Diff { a: PathBuf, b: PathBuf },
    /// List the available experiments.
    ListExperiments,
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config { field: "OCS_THREADS".into(), message: "must be positive".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config { field: "OCS_THREADS".into(), message: e.to_string() })?;
    }
    match cli.command {
        Command::ListExperiments => {
            for (name, about) in EXPERIMENTS {
                println!("{name:<18} {about}");
            }
            Ok(0)
        }
        Command::Diff { a, b } => {
            let d = diff::diff(&RunReport::load(&a)?, &RunReport::load(&b)?)?;
            print!("{}", d.render());
            Ok(0)
        }
        Command::Run { config, resolution, seed, out } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.apply(&Overrides { resolution, seed, out });
            let outcome = runner::run(cfg, Some(&config))?;
            for e in &outcome.report.experiments {
                for r in e.residuals.iter().filter(|r| r.pass.is_some()) {
                    let verdict = if r.pass == Some(true) { "ok  " } else { "FAIL" };
                    println!("{verdict} {}.{} min={:e} max={:e}", e.name, r.name, r.min, r.max);
                }
                for t in &e.unmatched_tolerances {
                    println!("FAIL {}.{t}: no such residual", e.name);
                }
            }
            println!("report: {}", outcome.out_dir.join("report.json").display());
            Ok(if outcome.report.pass { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ocs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
