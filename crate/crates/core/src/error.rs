use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: no observations")]
    EmptyInput,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("subject {subject}: duplicate observation at time {time}")]
    DuplicateTime { subject: String, time: String },

    #[error("subjects with fewer than 4 observations: {}", .ids.join(", "))]
    TooFewObservations { ids: Vec<String> },

    #[error("invalid dataset: {}", .violations.join("; "))]
    InvalidDataset { violations: Vec<String> },

    #[error("time {time} outside domain [{lower}, {upper}]")]
    OutsideDomain { time: f64, lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("subject {subject}: band system numerically singular near knots {knots:?}")]
    SingularSystem { subject: String, knots: Vec<f64> },

    #[error("subject {0}: zero residual variance after removing the linear trend; the subject is degenerate for REML")]
    DegenerateSubject(String),

    #[error("subject {subject}: REML failed: {source}")]
    Reml {
        subject: String,
        #[source]
        source: Box<Error>,
    },

    #[error("subjects {0} and {1} are not observed on the same time grid; use the spc or ss method for irregular grids")]
    GridMismatch(String, String),

    #[error("true distance between {0} and {1} is zero; Q weights are undefined")]
    ZeroTrueDistance(String, String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numeric failures (as opposed to bad input) get a distinct exit status in the CLI.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::SingularSystem { .. } | Error::DegenerateSubject(_) => true,
            Error::Reml { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
