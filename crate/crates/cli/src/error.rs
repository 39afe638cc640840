use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Core(#[from] locev::Error),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 invalid config, 3 numerical failure, 4 capacity, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use locev::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Capacity { .. }) => 4,
            CliError::Core(E::NumericalFailure { .. } | E::StepTooLarge { .. } | E::WindowTooSmall { .. }) => 3,
            CliError::Core(E::InvalidArgument(_) | E::DimensionMismatch { .. } | E::UnnormalizedKernel { .. }) => 2,
            CliError::Io(_) => 1,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}
