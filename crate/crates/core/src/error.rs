use thiserror::Error;

/// Errors raised by curve construction, parameter validation and the
/// numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("constraint 2 <= alpha*p < 2p+1 violated (alpha = {alpha}, p = {p})")]
    ParamConstraint { alpha: f64, p: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("curve is not bi-Lipschitz at this resolution: constant {constant:.3e} exceeds cap {cap:.3e}")]
    NotBiLipschitz { constant: f64, cap: f64 },

    #[error("pair ({i}, {j}) lies on the diagonal; use a limit operation instead")]
    Diagonal { i: usize, j: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("field has {got} samples but the curve grid has {expected}")]
    FieldMismatch { expected: usize, got: usize },

    #[error("field dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("N(tau) = {value:.3e} is negative beyond round-off at pair ({i}, {j})")]
    NegativeN { i: usize, j: usize, value: f64 },

    #[error("singular pair ({i}, {j}): M_alpha vanishes while dM_alpha does not (p < 2)")]
    SingularPair { i: usize, j: usize },

    #[error("perturbed curve rejected at eps = {eps:.3e}: {source}")]
    PerturbationRejected {
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("flow halted: {0}")]
    FlowHalted(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotBiLipschitz { .. }
                | Error::NegativeN { .. }
                | Error::SingularPair { .. }
                | Error::PerturbationRejected { .. }
                | Error::FlowHalted(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
