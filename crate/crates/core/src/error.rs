use crate::matrix::{LinalgError, C64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{what} has shape {got:?}, expected {expected:?}")]
    Shape {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("R is not unitary: ‖R*R − I‖ = {defect:.3e}")]
    NonUnitaryR { defect: f64 },
    #[error("delays must be nonnegative and nondecreasing (entry {index} = {value})")]
    UnsortedDelays { index: usize, value: f64 },
    #[error("Sylvester condition fails: |{mu} − conj({nu})| = {gap:.3e}")]
    SpectraOverlap { mu: C64, nu: C64, gap: f64 },
    #[error("λ = {lambda} is an eigenvalue of beta")]
    ResolventSingular { lambda: C64 },
    #[error("α − α* ≠ i(θ₁θ₁* + θ₂θ₂*): defect {defect:.3e}")]
    IdentityViolated { defect: f64 },
    #[error("Σ(x) is singular at x = {x} (reciprocal condition {rcond:.3e})")]
    SigmaSingular { x: f64, rcond: f64 },
    #[error("k(x) jumps at x = {x}; evaluate one-sided")]
    OnBreakpoint { x: f64 },
    #[error(
        "U₂₂(l) is singular at l = {l} (reciprocal condition {rcond:.3e}); S_l is not invertible"
    )]
    U22Singular { l: f64, rcond: f64 },
    #[error("l = {l} coincides with a delay; evaluate one-sided")]
    BreakpointL { l: f64 },
    #[error("x = {x} outside [0, {l}]")]
    OutOfRange { x: f64, l: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable identifier used in reports and CLI messages.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Linalg(e) => match e {
                LinalgError::NonSquare { .. } => "NonSquare",
                LinalgError::DimensionMismatch { .. } => "DimensionMismatch",
                LinalgError::BadShape { .. } => "BadShape",
                LinalgError::NonFinite { .. } => "NonFinite",
                LinalgError::Singular { .. } => "Singular",
                LinalgError::Overflow { .. } => "Overflow",
                LinalgError::NegativeLength(_) => "NegativeLength",
                LinalgError::SpectraOverlap { .. } => "SpectraOverlap",
                LinalgError::NonHermitianQ { .. } => "NonHermitianQ",
                LinalgError::NoConvergence { .. } => "NoConvergence",
            },
            Error::Shape { .. } => "Shape",
            Error::NonUnitaryR { .. } => "NonUnitaryR",
            Error::UnsortedDelays { .. } => "UnsortedDelays",
            Error::SpectraOverlap { .. } => "SpectraOverlap",
            Error::ResolventSingular { .. } => "ResolventSingular",
            Error::IdentityViolated { .. } => "IdentityViolated",
            Error::SigmaSingular { .. } => "SigmaSingular",
            Error::OnBreakpoint { .. } => "OnBreakpoint",
            Error::U22Singular { .. } => "U22Singular",
            Error::BreakpointL { .. } => "BreakpointL",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// True for errors caused by inadmissible input data rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Shape { .. }
                | Error::NonUnitaryR { .. }
                | Error::UnsortedDelays { .. }
                | Error::SpectraOverlap { .. }
                | Error::IdentityViolated { .. }
                | Error::InvalidArgument(_)
                | Error::Linalg(LinalgError::NonFinite { .. })
                | Error::Linalg(LinalgError::BadShape { .. })
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
