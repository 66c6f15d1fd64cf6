use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("value out of fixed-point range")]
    RangeOverflow,
    #[error("field element is not a valid fixed-point encoding")]
    InvalidEncoding,
    #[error("argument outside function domain: {0}")]
    DomainError(String),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("dataset is empty or has fewer than two rows")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid curve point")]
    InvalidPoint,
    #[error("circuit shape error: {0}")]
    ShapeError(String),
    #[error("native hint violates its circuit tolerance: {0}")]
    HintFailure(String),
    #[error("witness does not satisfy the constraint system: {0}")]
    UnsatisfiedWitness(String),
    #[error("malformed proof: {0}")]
    MalformedProof(String),
    #[error("caller is not authorized for this method")]
    Unauthorized,
    #[error("data hash already committed")]
    AlreadyCommitted,
    #[error("no data hash committed")]
    NotCommitted,
    #[error("unsupported algorithm: {0}")]
    UnsupportedAlgorithm(String),
    #[error("no proposal registered")]
    NoProposal,
    #[error("proof rejected")]
    InvalidProof,
    #[error("decision flag contradicts MI and threshold")]
    InconsistentDecision,
    #[error("no audit result available")]
    NoResult,
    #[error("decrypted data does not match the committed digest")]
    DigestMismatch,
    #[error("dataset does not match the committed hash")]
    CommitmentMismatch,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
