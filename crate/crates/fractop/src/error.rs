use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("invalid IFS: {0}")]
    InvalidSpec(String),
    #[error("post-critical closure exceeded {0} codings")]
    NotPcf(usize),
    #[error("single intersection condition violated: {0}")]
    SicViolation(String),
    #[error("cylinders {i} and {j} intersect but no identification covers them")]
    MissingIdentification { i: u16, j: u16 },
    #[error("lowest-coding rewrite exceeded {0} codings")]
    RewriteOverflow(usize),
    #[error("codings denote the same point")]
    SamePoint,
    #[error("surviving time is infinite")]
    SamePointOrTouching,
    #[error("comparability bound violated: {0}")]
    ComparabilityFailure(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("geometry disagrees with symbolic data: {0}")]
    GeometryMismatch(String),
    #[error("path decomposition failed: {0}")]
    DecompositionError(String),
    #[error("not a dendrite: {0}")]
    NotDendrite(String),
    #[error("primary arc extraction failed: {0}")]
    SystemExtractionFailure(String),
    #[error("no admissible weights: {0}")]
    AssignmentInfeasible(String),
    #[error("not a fractal gasket: {0}")]
    NotAGasket(String),
    #[error("corner map missing for vertex a{0}")]
    CornerMapMissing(usize),
    #[error("s = {s} is not above the bound {bound}")]
    SBoundViolation { s: f64, bound: f64 },
    #[error("triangle identification failed: {0}")]
    TriangleIdError(String),
    #[error("good assignment check failed: {0}")]
    GoodAssignmentFailure(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Parse(_) => 1,
            Error::GoodAssignmentFailure(_)
            | Error::ComparabilityFailure(_)
            | Error::GeometryMismatch(_)
            | Error::SystemExtractionFailure(_)
            | Error::DecompositionError(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
