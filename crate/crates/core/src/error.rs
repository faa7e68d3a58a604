use thiserror::Error;

/// Library-wide error type. Every variant carries a stable machine-readable
/// code (`Error::code`) used by the CLI exit-code contract and JSON output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("zero element where a nonzero element is required: {0}")]
    ZeroElement(String),
    #[error("unit constant required: {0}")]
    UnitConstantRequired(String),
    #[error("mixed modulus: {0}")]
    MixedModulus(String),
    #[error("unsupported field: {0}")]
    UnsupportedField(String),
    #[error("coefficients not prime to the characteristic: {0}")]
    WildCoefficients(String),
    #[error("exact monomial-unit form required: {0}")]
    ExactFormRequired(String),
    #[error("analytic splitting unsupported: {0}")]
    AnalyticSplittingUnsupported(String),
    #[error("not a maximal chain on the pair: {0}")]
    NotMaximalChain(String),
    #[error("unsupported prime: {0}")]
    UnsupportedPrime(String),
    #[error("invariant factors still changing at degree bound {bound}: raise the bound")]
    NotStabilized { bound: u32 },
    #[error("unsupported element form: {0}")]
    UnsupportedElementForm(String),
    #[error("face maps violate the simplicial compatibility: {0}")]
    FaceMapIncompatible(String),
    #[error("homology degree out of range: {0}")]
    DegreeOutOfRange(String),
    #[error("golden regression mismatch: {0}")]
    GoldenMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DivisionByZero(_) => "DIVISION_BY_ZERO",
            Error::PrecisionExhausted(_) => "PRECISION_EXHAUSTED",
            Error::ZeroElement(_) => "ZERO_ELEMENT",
            Error::UnitConstantRequired(_) => "UNIT_CONSTANT_REQUIRED",
            Error::MixedModulus(_) => "MIXED_MODULUS",
            Error::UnsupportedField(_) => "UNSUPPORTED_FIELD",
            Error::WildCoefficients(_) => "WILD_COEFFICIENTS",
            Error::ExactFormRequired(_) => "EXACT_FORM_REQUIRED",
            Error::AnalyticSplittingUnsupported(_) => "ANALYTIC_SPLITTING_UNSUPPORTED",
            Error::NotMaximalChain(_) => "NOT_MAXIMAL_CHAIN",
            Error::UnsupportedPrime(_) => "UNSUPPORTED_PRIME",
            Error::NotStabilized { .. } => "NOT_STABILIZED",
            Error::UnsupportedElementForm(_) => "UNSUPPORTED_ELEMENT_FORM",
            Error::FaceMapIncompatible(_) => "FACE_MAP_INCOMPATIBLE",
            Error::DegreeOutOfRange(_) => "DEGREE_OUT_OF_RANGE",
            Error::GoldenMismatch(_) => "GOLDEN_MISMATCH",
            Error::Parse(_) => "PARSE_ERROR",
            Error::InvalidJob(_) => "INVALID_JOB",
            Error::Io(_) => "IO_ERROR",
            Error::Json(_) => "JSON_ERROR",
        }
    }

    /// CLI exit code: 2 for NOT_STABILIZED, 3 for unsupported-input errors,
    /// 1 for everything else (0 is success, of course).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotStabilized { .. } => 2,
            Error::UnsupportedField(_)
            | Error::WildCoefficients(_)
            | Error::UnsupportedPrime(_)
            | Error::UnsupportedElementForm(_)
            | Error::AnalyticSplittingUnsupported(_)
            | Error::ExactFormRequired(_)
            | Error::Parse(_)
            | Error::InvalidJob(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
