use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("unsupported sampling rate {0} Hz")]
    UnsupportedRate(i64),
    #[error("record too short: need {needed} samples, have {available}")]
    TooShort { needed: usize, available: usize },
    #[error("implausible BP label: dbp={dbp:.2} sbp={sbp:.2}")]
    ImplausibleLabel { dbp: f64, sbp: f64 },

    #[error("empty signal")]
    EmptySignal,
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("band edge {hi_hz} Hz violates Nyquist for fs={fs} Hz")]
    NyquistViolation { hi_hz: f64, fs: f64 },
    #[error("invalid band [{lo_hz}, {hi_hz}] Hz")]
    InvalidBand { lo_hz: f64, hi_hz: f64 },
    #[error("degenerate signal: max equals min")]
    DegenerateSignal,
    #[error("bad resampling length: input {input}, target {target}")]
    BadLength { input: usize, target: usize },

    #[error("signal too short for peak detection: {0} samples (need at least 8)")]
    SignalTooShort(usize),
    #[error("too few peaks: {0}")]
    TooFewPeaks(usize),

    #[error("no beat with RR interval inside the admissible range")]
    NoValidBeats,
    #[error("empty dataset")]
    EmptyDataset,

    #[error("too few rows for PCA: {0}")]
    TooFewRows(usize),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("first boosting round rejected: average loss {avg_loss:.4} >= 0.5")]
    NoLearnerAccepted { avg_loss: f64 },
    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("too few groups for {k} folds: {groups}")]
    TooFewSubjects { groups: usize, k: usize },
    #[error("fold {0} has no training rows")]
    DegenerateFold(usize),
    #[error("cross-validation partition violated: {0}")]
    PartitionViolation(String),
    #[error("no estimate/reference pairs")]
    EmptyPairs,
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),

    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error stems from bad input rather than an internal fault.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NumericalFailure(_) | Error::PartitionViolation(_) | Error::Io(_)
        )
    }
}
