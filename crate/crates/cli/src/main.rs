//! `magstep`: batch driver for band sweeps, invariants, quasi-mode residuals,
//! 2D solves, asymptotic fits, localization diagnostics and verification.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input,
//! 3 solver or I/O failure.

mod commands;
mod config;
mod output;

use clap::{Parser, ValueEnum};
use commands::{CliError, Ctx};
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Band,
    Invariants,
    Quasimode,
    Solve2d,
    Fit,
    Diagnostics,
    Verify,
}

#[derive(Debug, Parser)]
#[command(name = "magstep", version, about = "Step-field edge spectra: fibers, invariants and 2D solves")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<NonZeroUsize>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let ov = config::Overrides {
        output_dir: cli.output.clone(),
        cache_dir: std::env::var_os("MAGSTEP_CACHE").filter(|v| !v.is_empty()).map(PathBuf::from),
    };
    let run = config::load(&cli.config, &ov)?;
    std::fs::create_dir_all(&run.output_dir).map_err(|e| CliError::Io(run.output_dir.clone(), e))?;
    let log = output::Log::open(&run.output_dir);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        pool = pool.num_threads(n.get());
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(run.output_dir.clone(), std::io::Error::other(e)))?;
    log.info(format!(
        "{:?} with {}, worker threads: {}",
        cli.command,
        cli.config.display(),
        pool.current_num_threads()
    ));
    let ctx = Ctx { run, pool, log };
    let t = Instant::now();
    let result = match cli.command {
        Command::Band => commands::band(&ctx),
        Command::Invariants => commands::invariants(&ctx),
        Command::Quasimode => commands::quasimode(&ctx),
        Command::Solve2d => commands::solve2d(&ctx),
        Command::Fit => commands::fit(&ctx),
        Command::Diagnostics => commands::diagnostics(&ctx),
        Command::Verify => commands::verify(&ctx).and_then(|r| {
            let failing: Vec<String> = r.groups.iter().flat_map(|g| g.failing().map(|c| c.name.clone())).collect();
            if failing.is_empty() {
                Ok(())
            } else {
                Err(CliError::VerifyFailed(failing))
            }
        }),
    };
    ctx.log.info(format!("finished in {:.2} s", t.elapsed().as_secs_f64()));
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::VerifyFailed(names) = &e {
                for n in names {
                    eprintln!("magstep: failing check: {n}");
                }
            }
            eprintln!("magstep: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
