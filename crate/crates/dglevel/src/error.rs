use crate::field::FieldTag;
use crate::graded::DegreeWindow;

/// Every failure the engine can report.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(FieldTag, FieldTag),
    #[error("{0} is not a prime below 2^31")]
    NotPrime(u64),
    #[error("degree {degree} cannot be certified inside window {window}")]
    WindowTooSmall { degree: i32, window: DegreeWindow },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("differential does not square to zero in degree {0}")]
    NotADifferential(i32),
    #[error("zero module has no amplitude")]
    ZeroModule,
    #[error("algebra is not simply connected: {0}")]
    NotSimplyConnected(String),
    #[error("invalid algebra presentation: {0}")]
    InvalidAlgebra(String),
    #[error("invalid module presentation: {0}")]
    InvalidModule(String),
    #[error("source module is not free")]
    SourceNotFree,
    #[error("map does not commute with the differentials in degree {0}")]
    NotAChainMap(i32),
    #[error("modules live over different algebras")]
    AlgebraMismatch,
    #[error("endomorphism algebra has dimension {0}, above the search guard of 8")]
    EndTooLarge(usize),
    #[error("strategy not applicable: {0}")]
    StrategyInapplicable(String),
    #[error("generator of odd degree {0} needs characteristic 2")]
    OddGenerator(i32),
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("cohomology is not a sum of molecule cohomologies")]
    NoValidMatching,
    #[error("module does not decompose into molecules: {0}")]
    NotCompactlyDecomposable(String),
    #[error("the pair was not declared relatively formalizable")]
    FormalizabilityNotDeclared,
    #[error("pullback module is not free: {0}")]
    NotFree(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("a nonzero Hopf invariant needs an even sphere, got d = {0}")]
    OddDimensionNonzeroHopf(i32),
    #[error("cannot certify collapse: {0}")]
    CannotCertifyCollapse(String),
    #[error("suspension parameter m = {m} is below the minimum {min}")]
    MTooSmall { m: i32, min: i32 },
    #[error("g(x) is not a coboundary")]
    NotExact,
    #[error("target cohomology is wrong: {0}")]
    WrongTargetCohomology(String),
    #[error("expected an even dimension, got {0}")]
    OddDimension(i32),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
