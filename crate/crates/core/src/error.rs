use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree sum {0} is odd; half-edges cannot be paired")]
    OddDegreeSum(u64),

    #[error("empty degree sequence")]
    EmptySequence,

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid limit model: {0}")]
    InvalidModel(String),

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("enumeration bound exceeded: {half_edges} half-edges (at most {max} supported)")]
    EnumerationTooLarge { half_edges: u64, max: u64 },

    #[error(
        "no simple graph after {attempts} attempts; the configuration model is simple with \
         probability bounded away from zero only when sum_k k^2 n_k = O(n) \
         (here sum_k k^2 n_k / n = {second_moment:.3})"
    )]
    RejectionExhausted { attempts: usize, second_moment: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the CLI.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Numerical(_) => 3,
            Error::RejectionExhausted { .. } => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
