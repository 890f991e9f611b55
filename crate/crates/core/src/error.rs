use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("reference point {0:?} lies outside the reference element")]
    OutsideReferenceElement(Vec<f64>),

    #[error("spline abscissae must be strictly increasing (violated at index {index})")]
    NonMonotoneSpline { index: usize },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error(
        "time integration unstable: |u| reached {amplitude:.3e} at step {step} \
         (bound {bound:.3e}); Courant diagnostic: dt = {dt:.3e} s, stable limit ~ {limit:.3e} s"
    )]
    Unstable {
        step: usize,
        amplitude: f64,
        bound: f64,
        dt: f64,
        limit: f64,
    },

    #[error("time step {dt:.3e} s exceeds the stability limit {limit:.3e} s (Courant diagnostic)")]
    TimeStepTooLarge { dt: f64, limit: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Failures caused by the time step or a blow-up rather than bad input.
    pub fn is_instability(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. } | Error::TimeStepTooLarge { .. } | Error::NonFinite(_)
        )
    }

    /// Configuration and usage problems as opposed to numerical failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Format(_)
                | Error::InvalidGrid(_)
                | Error::InvalidMaterial(_)
                | Error::NonMonotoneSpline { .. }
                | Error::OutsideDomain { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
