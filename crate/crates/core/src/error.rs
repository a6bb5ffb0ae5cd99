use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid {field}: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("interaction matrix is not symmetric at ({i}, {j}): |g_ij - g_ji| = {diff:e}")]
    AsymmetricMatrix { i: usize, j: usize, diff: f64 },

    #[error("interaction matrix is degenerate: |det| = {det}")]
    DegenerateMatrix { det: f64 },

    /// sigma * sqrt(T - t) vanished; the caller must use the deterministic branch.
    #[error(
        "degenerate limit: sigma * sqrt(tau) = {scale}; only the closed form prices this state"
    )]
    DegenerateLimit { scale: f64 },

    #[error("unpriceable state: mapped spot {spot} is not positive")]
    Unpriceable { spot: f64 },

    #[error("unpriceable target: mapped strike {strike} is not positive")]
    UnpriceableTarget { strike: f64 },

    #[error("explicit scheme unstable: sigma^2 dtau / (2 dx^2) = {ratio} exceeds 1/2")]
    Unstable { ratio: f64 },

    #[error("malformed scenario at step {step}: {reason}")]
    MalformedScenario { step: usize, reason: String },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors that come from a valid input whose mapped price is unusable.
    pub fn is_unpriceable(&self) -> bool {
        matches!(
            self,
            Error::Unpriceable { .. } | Error::UnpriceableTarget { .. }
        )
    }
}
