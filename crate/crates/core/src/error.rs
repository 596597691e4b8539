use thiserror::Error;

use crate::selection::StallReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite weight at site {site}")]
    NonFinite { site: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse family descriptor `{0}`")]
    Descriptor(String),

    /// A computation would exceed a configured size cap.
    #[error("resource cap exceeded: {what} needs {requested}, cap is {cap}")]
    Resource {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    #[error("index {index} outside the admissible range: {detail}")]
    Range { index: i64, detail: String },

    #[error("selection stalled at k={}: no admissible index up to {} (best lower bound {:.6} at n={})", .0.k, .0.searched_up_to, .0.best_lower_bound, .0.best_index)]
    SelectionStalled(Box<StallReport>),

    #[error("verification failed at k={k}: {detail}")]
    Verification { k: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
