use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("register needs {requested} qubits but the cap is {cap}")]
    QubitCapExceeded { requested: usize, cap: usize },

    #[error("qubit index {index} out of range for a {total}-qubit register")]
    QubitOutOfRange { index: usize, total: usize },

    #[error("control qubits overlap gate targets on qubit {0}")]
    ControlOverlap(usize),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{needed} basis states do not fit in a {n_anc}-qubit ancilla register")]
    AncillaCapacity { needed: usize, n_anc: usize },

    #[error("observable incompatible with register: {0}")]
    IncompatibleObservable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("malformed csv {path}: {reason}")]
    MalformedCsv { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn mismatch(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            actual,
        }
    }
}
