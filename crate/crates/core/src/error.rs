use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid Lamé parameters (λ = {lambda}, μ = {mu}): {reason}")]
    InvalidParameters {
        lambda: f64,
        mu: f64,
        reason: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular parametrization: |γ'(t)| = {speed:e} at t = {t}")]
    SingularParametrization { t: f64, speed: f64 },

    #[error("boundary is not a simple curve: segments {first} and {second} intersect")]
    SelfIntersection { first: usize, second: usize },

    #[error("boundary orientation error: signed area {0}")]
    Orientation(f64),

    #[error("support function is not positive at t = {t} (p = {value}); origin is not interior")]
    OriginNotInterior { t: f64, value: f64 },

    #[error("support function violates convexity: min(p + p'') = {margin}")]
    NotConvex { margin: f64 },

    #[error("source point {index} lies inside the domain; reduce the offset")]
    InvalidOffset { index: usize },

    #[error("singular kernel: |x - y| = {0:e}")]
    SingularKernel(f64),

    #[error("insufficient resolution: {survivors} of {requested} eigenvalues certified; increase the number of sources")]
    InsufficientResolution { requested: usize, survivors: usize },

    #[error("untrustworthy eigenpair: boundary norm {0:e}")]
    UntrustworthyPair(f64),

    #[error("eigenvalue {index} belongs to a cluster of size {size}; use the cluster derivative")]
    Multiplicity { index: usize, size: usize },

    #[error("invalid disk mode: {0}")]
    InvalidMode(&'static str),

    #[error("linear algebra failure: {0}")]
    Decomposition(&'static str),

    #[error("index {index} out of range ({len} available)")]
    IndexOutOfRange { index: usize, len: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
