use std::fmt::Display;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("unknown scenario `{0}` (not a file and not a bundled scenario)")]
    UnknownScenario(String),

    #[error(transparent)]
    Core(#[from] degflow::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(context: impl Display, source: std::io::Error) -> Self {
        Self::Io {
            context: context.to_string(),
            source,
        }
    }

    pub fn json(context: impl Display, source: serde_json::Error) -> Self {
        Self::Json {
            context: context.to_string(),
            source,
        }
    }

    /// 2 for anything wrong with the input, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        use degflow::Error as E;
        match self {
            Self::Parse { .. } | Self::UnknownScenario(_) => 2,
            Self::Core(E::InvalidParameter { .. } | E::Shape { .. } | E::Io(_)) => 2,
            _ => 1,
        }
    }
}
