use noisypu::PuError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Pu(#[from] PuError),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) | CliError::Pu(PuError::Config(_)) => "config",
            CliError::Pu(
                PuError::InvalidInput(_) | PuError::Parse { .. } | PuError::Io(_) | PuError::Json(_),
            )
            | CliError::Output(_) => "data",
            CliError::Pu(
                PuError::InvalidParams(_)
                | PuError::Degenerate(_)
                | PuError::DegenerateComponent(_)
                | PuError::EstimationFailed(_),
            ) => "estimation",
        }
    }

    /// 2 config, 3 data, 4 estimation.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "config" => 2,
            "data" => 3,
            _ => 4,
        }
    }
}
