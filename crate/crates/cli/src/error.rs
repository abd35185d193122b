use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("measure `{spec}`: {reason}")]
    Measure { spec: String, reason: String },

    #[error(transparent)]
    Core(#[from] wgflow::Error),
}

impl CliError {
    /// 1 for invalid inputs, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => 2,
            _ => 1,
        }
    }
}
