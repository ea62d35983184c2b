use std::path::PathBuf;

use ransomgame_core::Error as ModelError;
use ransomgame_protocol::Error as ProtocolError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Json { path: String, message: String },

    #[error("{0} already exists; pass --force to overwrite")]
    Exists(PathBuf),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error(transparent)]
    Server(#[from] ransomgame_server::ServerError),

    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// 2 for anything the caller can fix by changing the input, else 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Json { .. } | CliError::Exists(_) => 2,
            CliError::Model(e) => match e {
                ModelError::LpIterationLimit(_)
                | ModelError::LpShape(_)
                | ModelError::NonThresholdPolicy(_)
                | ModelError::Csv(_) => 1,
                _ => 2,
            },
            CliError::Protocol(e) => match e {
                ProtocolError::ChunkBits(_)
                | ProtocolError::EmptyData
                | ProtocolError::Scenario(_)
                | ProtocolError::TranscriptLine { .. } => 2,
                _ => 1,
            },
            CliError::Server(e) => match e {
                ransomgame_server::ServerError::CorsOrigin(_) => 2,
                _ => 1,
            },
            CliError::Io(_) | CliError::Internal(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Parses JSON, reporting the field path of the first mismatch.
pub fn parse_json<T: serde::de::DeserializeOwned>(source: &str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        CliError::Json {
            path: if at == "." {
                source.to_string()
            } else {
                format!("{source} at {at}")
            },
            message: e.into_inner().to_string(),
        }
    })
}

pub fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}
