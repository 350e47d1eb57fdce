//! Batch front end: reads a JSON run configuration, executes one scenario
//! and writes a JSON report plus a tidy CSV of tracked points.

pub mod config;
pub mod report;
pub mod scenarios;

use std::path::{Path, PathBuf};

pub use config::{RunConfig, Scenario};
pub use report::{Report, Status, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] latres::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const ACCEPTANCE: i32 = 2;
    pub const NON_CONVERGENCE: i32 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => exit::NON_CONVERGENCE,
            CliError::Core(latres::Error::ReferenceInconsistency(_)) => exit::ACCEPTANCE,
            _ => exit::CONFIG,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub json_path: PathBuf,
    pub csv_path: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() {
            exit::OK
        } else {
            exit::ACCEPTANCE
        }
    }
}

/// Runs the scenario on a pool of `jobs` workers (all cores when `None`)
/// and writes the report files under `out_dir`. Nothing is written when the
/// run fails before producing a report.
pub fn run(config: &RunConfig, out_dir: &Path, jobs: Option<usize>) -> Result<Outcome, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    let report = pool.install(|| scenarios::execute(config))?;
    std::fs::create_dir_all(out_dir)?;
    let json_path = out_dir.join(&config.output.json);
    let csv_path = out_dir.join(&config.output.csv);
    std::fs::write(&json_path, report.to_json())?;
    std::fs::write(&csv_path, report.to_csv())?;
    Ok(Outcome { report, json_path, csv_path })
}
