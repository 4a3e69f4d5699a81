use thiserror::Error;

/// Failures mapped onto the process exit-code contract.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, bad config, precondition failures.
    #[error("{0}")]
    Input(String),
    /// A solver or fit stopped before its convergence test passed.
    #[error("{0}")]
    Numerical(String),
    /// The perception target cannot be met.
    #[error("{0}")]
    Infeasible(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }
}

impl From<semalloc::Error> for CliError {
    fn from(e: semalloc::Error) -> Self {
        use semalloc::Error as E;
        match e {
            E::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            E::Convergence { .. } | E::Bracket { .. } | E::Singularity(_) => {
                CliError::Numerical(e.to_string())
            }
            E::Domain(_) | E::Precondition(_) => CliError::Input(e.to_string()),
        }
    }
}
