use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected} samples, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("potential `{0}` has no pointwise position-space form; use the mollified restriction")]
    MissingPositionForm(String),

    #[error("potential `{0}` has no momentum-space form")]
    MissingMomentumForm(String),

    #[error("mollifier `{0}` is not rapidly decreasing")]
    InvalidMollifier(String),

    #[error("quadrature tail bound {achieved:.3e} exceeds target {target:.3e}")]
    QuadratureTail { achieved: f64, target: f64 },

    #[error("Poisson sum did not converge within {shells} shells (last shell contributed {last:.3e})")]
    PoissonNonConvergence { shells: usize, last: f64 },

    #[error("momentum argument outside the admissible strip: {0}")]
    OutsideStrip(String),

    #[error("inadmissible distortion parameter: {0}")]
    Inadmissible(String),

    #[error("Jacobian square root crosses its branch cut: {0}")]
    BranchCut(String),

    #[error("Galerkin cutoff {cutoff} is below the required {required}")]
    CutoffTooSmall { cutoff: f64, required: f64 },

    #[error("incommensurate grids: {0}")]
    Incommensurate(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("contour passes within {distance:.3e} of the spectrum")]
    ContourThroughSpectrum { distance: f64 },

    #[error("Riesz projection trace {trace} is not integral after {nodes} nodes")]
    NonIntegralTrace { nodes: usize, trace: Complex64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("invalid ladder: {0}")]
    InvalidLadder(String),

    #[error("reference inconsistency: {0}")]
    ReferenceInconsistency(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("transform table: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures of an iterative or adaptive numerical procedure, as opposed to
    /// contract violations by the caller.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureTail { .. }
                | Error::PoissonNonConvergence { .. }
                | Error::Eigensolver(_)
                | Error::NonIntegralTrace { .. }
                | Error::LinearAlgebra(_)
                | Error::ContourThroughSpectrum { .. }
        )
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::LinearAlgebra(e.to_string())
    }
}
