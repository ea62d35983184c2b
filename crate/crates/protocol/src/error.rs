use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chunk_bits must be in [4, 16], got {0}")]
    ChunkBits(u32),
    #[error("cannot encrypt empty data")]
    EmptyData,
    #[error("chunk {chunk} has no discrete log below 2^{bits}")]
    DlogNotFound { chunk: usize, bits: u32 },
    #[error("decrypted data does not match the recorded digest")]
    DigestMismatch,
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("transcript line {line}: {source}")]
    TranscriptLine {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
