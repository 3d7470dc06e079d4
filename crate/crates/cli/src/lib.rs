//! Experiment runner: configs, presets, training runs, sweeps, verification
//! and artifact output.

pub mod config;
pub mod experiment;
pub mod presets;
pub mod svg;

pub use config::{ExperimentConfig, SweepAxis};
pub use experiment::{oracle_csv, run, sweep, verify, window_csv, RunOutcome, RunReport, SweepRow, VerifySummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing checkpoint {0} (run the config first)")]
    MissingCheckpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Train(#[from] ifpinn::training::TrainError),
    #[error(transparent)]
    Problem(#[from] ifpinn::problems::ProblemError),
    #[error(transparent)]
    Ansatz(#[from] ifpinn::ansatz::AnsatzError),
}

impl CliError {
    /// Process exit code: 2 for configuration and checkpoint problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingCheckpoint(_) => 2,
            _ => 1,
        }
    }
}

/// Exit code of a run whose training hit a non-finite loss or gradient.
pub const EXIT_NON_FINITE: i32 = 3;
