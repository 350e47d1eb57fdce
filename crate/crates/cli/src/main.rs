use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use latres_cli::{exit, run, CliError, RunConfig};

/// Lattice resonance computations and continuum-limit sweeps.
#[derive(Parser, Debug)]
#[command(name = "latres", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    let result = RunConfig::from_path(&args.config).and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        run(&cfg, &args.out_dir, args.jobs)
    });
    match result {
        Ok(outcome) => {
            for s in &outcome.report.suites {
                eprintln!("{:>5} {}", format!("{:?}", s.status).to_lowercase(), s.name);
            }
            eprintln!("wrote {} and {}", outcome.json_path.display(), outcome.csv_path.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
