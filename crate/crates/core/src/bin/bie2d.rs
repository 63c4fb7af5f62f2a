use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bie2d::cli::{self, RunConfig, SolveReport};
use bie2d::{verify, Error, Result};

#[derive(Parser)]
#[command(name = "bie2d", version, about = "Helmholtz transmission scattering by Nystrom integral equation solvers")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one formulation at one discretization and write the far field.
    Solve { config: PathBuf },
    /// Iterations and far-field errors over a list of unknown counts.
    Convergence { config: PathBuf },
    /// Iterations, errors and timings over a wavenumber sweep.
    Bench { config: PathBuf },
    /// Run the built-in identity checks.
    Verify,
}

fn setup(config: &Path) -> Result<RunConfig> {
    let cfg = RunConfig::from_file(config)?;
    if let Some(t) = cli::thread_count(cfg.threads)? {
        // A pool that is already initialised keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(cfg)
}

fn print_report(report: &SolveReport) {
    print!("{}", report.csv());
    for (f, u, order) in cli::empirical_orders(&report.rows) {
        eprintln!("order {f} {u} -> {}: {order:.2}", 2 * u);
    }
}

fn run(command: Command) -> Result<bool> {
    let (cfg, runner): (_, fn(&RunConfig) -> Result<SolveReport>) = match command {
        Command::Solve { config } => (setup(&config)?, cli::run_solve),
        Command::Convergence { config } => (setup(&config)?, cli::run_convergence),
        Command::Bench { config } => (setup(&config)?, cli::run_bench),
        Command::Verify => {
            let checks = verify::run_checks()?;
            for c in &checks {
                println!("{} {}: {:.3e} (limit {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
            }
            if checks.iter().all(|c| c.passed) {
                return Ok(true);
            }
            return Err(Error::Domain("identity checks failed".into()));
        }
    };
    let report = runner(&cfg)?;
    print_report(&report);
    Ok(report.all_converged())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: GMRES did not converge for at least one formulation");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e))
        }
    }
}
