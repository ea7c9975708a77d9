use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input has no rows")]
    EmptyInput,
    #[error("row {row}: label {value} is not 0 or 1")]
    NonBinaryLabel { row: usize, value: f64 },
    #[error("group y={group} is empty (n0 = {n0}, n1 = {n1})")]
    EmptyGroup { group: u8, n0: usize, n1: usize },
    #[error("row {row}: expected {expected} predictors, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {col}: value is not finite")]
    NonFiniteValue { row: usize, col: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error("csv row {row}, column {col}: cannot parse {cell:?} as a number")]
    NonNumericCell {
        row: usize,
        col: usize,
        cell: String,
    },
    #[error("csv header has no `y` column")]
    MissingLabelColumn,
    #[error("operation needs d = {expected}, dataset has d = {found}")]
    DimensionError { expected: usize, found: usize },
    #[error("probability {0} is outside (0, 1)")]
    OutOfRange(f64),
    #[error("unknown link `{0}` (expected logit|probit|cloglog|cauchit|uniform)")]
    UnknownLink(String),
    #[error("linear program failed: {0}")]
    LpNumericalFailure(String),
    #[error("invalid configuration: {0}")]
    ConfigError(String),
    #[error("theorem precondition not met: {0}")]
    PreconditionError(String),
    #[error("grid oracle optimum touches the box boundary in coordinate {coord}")]
    OracleBoundsError { coord: usize },
    #[error("dataset generation failed after {attempts} attempts: {reason}")]
    GenerationFailure { attempts: usize, reason: String },
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
