use thiserror::Error;

/// Errors raised anywhere in the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("leading coefficient a6 is zero; only degree-6 models are supported")]
    DegreeError,
    #[error("coefficient {index} is not a finite real number")]
    NonRealCoefficient { index: usize },
    #[error("tolerance {0} outside (0, 1e-4]")]
    InvalidTolerance(f64),
    #[error("f is not squarefree: roots {0} and {1} are within the separation gate")]
    NotSquarefree(String, String),
    #[error("real locus is empty for this lift sign (m = 0)")]
    EmptyRealLocus,
    #[error("point is not on the curve (residual {residual:.3e})")]
    OffCurve { residual: f64 },
    #[error("region {0} does not exist on this curve")]
    EmptyRegion(String),
    #[error("ambiguous multiset match: two candidates within a factor 10 of each other")]
    AmbiguousMatch,
    #[error("divisor is not real")]
    NotReal,
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(i64, i64),
    #[error("degree {0} exceeds the supported maximum of 4")]
    DegreeTooLarge(i64),
    #[error("inconclusive kernel test: singular-value gap {gap:.3e} below 1e2")]
    IllConditioned { gap: f64 },
    #[error("signature length {got} does not match circle count {expected}")]
    SignatureLength { expected: usize, got: usize },
    #[error("signature parity is even; a degree-1 determinant needs an odd number of odd circles")]
    BadParity,
    #[error("assignment is not admissible for this signature")]
    InvalidAssignment,
    #[error("real members of one orbit disagree on their signature")]
    SignatureDisagreement,
    #[error("recipe {recipe} unavailable: {reason}")]
    RecipeUnavailable { recipe: String, reason: String },
    #[error("all {0} trials were degenerate")]
    AllTrialsDegenerate(usize),
    #[error("insufficient data: {got} nondegenerate trials, need {needed}")]
    InsufficientData { got: u64, needed: u64 },
    #[error("Weierstrass coordinates {0} and {1} coincide")]
    CoincidentLambda(usize, usize),
    #[error("no real points found after {0} planes")]
    NoRealPointsFound(usize),
    #[error("point is singular: second singular value {0:.3e}")]
    SingularPoint(f64),
    #[error("point does not lie on both quadrics (residual {0:.3e})")]
    NotOnVariety(f64),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
