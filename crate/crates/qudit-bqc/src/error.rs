use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    BadDegree,
    #[error("dimension {0} exceeds the configured cap {1}")]
    DimensionCap(u64, u64),
    #[error("polynomial {0:?} is not a monic irreducible modulus")]
    BadModulus(Vec<u32>),
    #[error("element is not invertible")]
    NotInvertible,
    #[error("unsupported character lift (p, s) = ({0}, {1})")]
    UnsupportedCharacter(u32, u32),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("site {0} out of range for {1} qudits")]
    SiteOutOfRange(usize, usize),
    #[error("state of {0} amplitudes exceeds the memory cap {1}")]
    MemoryCap(usize, usize),
    #[error("{0} branches exceed the branch cap {1}")]
    BranchCap(usize, usize),
    #[error("forced outcome has probability {0:.3e}, below the zero cutoff")]
    ZeroProbability(f64),
    #[error("malformed resource spec: {0}")]
    MalformedSpec(String),
    #[error("reconstructed map is not proportional to a unitary")]
    NotUnitary,
    #[error("angle {0} does not lie on the hiding grid")]
    OffGridAngle(f64),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("need at least {1} transcripts per program, got {0}")]
    InsufficientSamples(usize, usize),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
