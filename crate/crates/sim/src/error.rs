#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Pricing(#[from] intersection_core::Error),

    #[error("replay of user {user} was not serviced within {periods} periods")]
    Replay { user: usize, periods: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    /// Process exit code: 2 for bad input, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Pricing(intersection_core::Error::Domain(_)) | SimError::Config(_) => 2,
            SimError::Pricing(_) | SimError::Replay { .. } => 3,
            SimError::Io(_) | SimError::Csv(_) => 1,
        }
    }
}
