//! Benchmark harness behind the `bgsub` command.

pub mod config;
pub mod report;
pub mod run;
pub mod synth;

use std::path::{Path, PathBuf};

pub use config::{ConfigError, Input, ReportFormat, RunConfig, SolverKind};
pub use report::BenchReport;
pub use run::{execute, write_outputs, RunOutcome};
pub use synth::{generate, SyntheticScene, SyntheticSpec};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] bgsub_core::Error),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use bgsub_core::Error as E;
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Core(E::Io { .. } | E::Format { .. } | E::FrameSize { .. } | E::Empty(_)) => exit::IO,
            CliError::Core(E::InvalidConfig(_)) => exit::CONFIG,
            CliError::Core(_) | CliError::Internal(_) => 1,
        }
    }
}
