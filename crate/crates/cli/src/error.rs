use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl From<mlal_core::Error> for CliError {
    fn from(e: mlal_core::Error) -> Self {
        use mlal_core::Error as E;
        match e {
            E::Parse { .. } | E::Io(_) | E::Csv(_) | E::Config(_) | E::Checkpoint(_) => {
                Self::Data(e.to_string())
            }
            other => Self::Runtime(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
