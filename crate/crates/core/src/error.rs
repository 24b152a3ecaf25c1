use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An index or argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested value is outside the range of a monotone profile.
    #[error("range error: value {value} outside ({lower}, {upper})")]
    Range { value: f64, lower: f64, upper: f64 },

    /// The profile is not strictly increasing for the given dimension and index.
    #[error("profile {0} is not strictly increasing and cannot be inverted")]
    NotMonotone(String),

    /// A curvature tuple left the Garding cone.
    #[error("cone violation: E_{index} = {value} <= 0{}", .point.map(|p| format!(" at grid point {p}")).unwrap_or_default())]
    Cone {
        index: usize,
        value: f64,
        point: Option<usize>,
    },

    /// Grid too coarse for the fourth-order stencils.
    #[error("resolution error: need at least {min} cells, got {got}")]
    Resolution { min: usize, got: usize },

    /// Surface fails the h-convexity validation.
    #[error("h-convexity error: min shifted curvature {min_shifted}")]
    Convexity { min_shifted: f64 },

    /// NaN or infinity appeared in a computed field.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Not enough data for a fit or verdict.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
