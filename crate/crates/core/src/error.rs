use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("band sizes must be positive (n_upper = {n_upper}, n_lower = {n_lower})")]
    EmptyBand { n_upper: usize, n_lower: usize },

    #[error(
        "band widths differ: n_upper * spacing_upper = {upper_width}, \
         n_lower * spacing_lower = {lower_width}"
    )]
    BandWidthMismatch { upper_width: f64, lower_width: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("state has {got} amplitudes, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time grid must be non-empty, finite and strictly increasing")]
    InvalidTimeGrid,

    #[error("hamiltonian contains non-finite entries")]
    NonFinite,

    #[error("eigendecomposition did not converge")]
    EigenFailed,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for errors caused by the filesystem rather than by the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
