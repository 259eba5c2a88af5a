//! Visualization quality scoring with Spearman rank correlation.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("input lists have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
