use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not antisymmetric: deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    NotAntisymmetric { deviation: f64, tolerance: f64 },

    #[error("odd matrix size {0}")]
    OddSize(usize),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular metric at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("metric not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },

    #[error("partition of unity does not cover chart {chart} at {point:?} (denominator {denominator:e})")]
    Coverage {
        chart: usize,
        point: Vec<f64>,
        denominator: f64,
    },

    #[error("atlas error: {0}")]
    Atlas(String),

    #[error("point {point:?} lies outside the overlap of charts {from} -> {to}")]
    OutsideOverlap {
        from: usize,
        to: usize,
        point: Vec<f64>,
    },

    #[error("mollification radius {delta} exceeds the admissible margin {margin}")]
    Margin { delta: f64, margin: f64 },

    #[error("unknown manifold `{0}`")]
    UnknownManifold(String),

    #[error("the Euler class requires a metric connection (Levi-Civita); the piecewise Euclidean connection is not metric")]
    EulerRequiresMetricConnection,

    #[error("malformed manifold spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::NotAntisymmetric { .. } => "not_antisymmetric",
            Error::OddSize(_) => "odd_size",
            Error::GridTooSmall(_) => "grid_too_small",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::SingularMetric { .. } => "singular_metric",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::Coverage { .. } => "coverage",
            Error::Atlas(_) => "atlas",
            Error::OutsideOverlap { .. } => "outside_overlap",
            Error::Margin { .. } => "margin",
            Error::UnknownManifold(_) => "unknown_manifold",
            Error::EulerRequiresMetricConnection => "euler_requires_metric_connection",
            Error::Spec(_) => "spec",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
