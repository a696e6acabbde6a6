use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration does not validate; exit status 2.
    #[error("invalid configuration: {0}")]
    Schema(String),

    /// A task failed while running; exit status 3, after a partial report is written.
    #[error("run failed: {0}")]
    Run(#[from] nonlocal_pq::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Run(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
