use thiserror::Error;

use crate::model::{AgentId, CellId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Every rating fell in a single category, so chance agreement is 1 and
    /// kappa is undefined. `mean_agreement` is the observed agreement.
    #[error("degenerate agreement: expected agreement is 1 (observed {mean_agreement})")]
    DegenerateAgreement { mean_agreement: f64 },

    #[error("invalid rating matrix: {0}")]
    InvalidRatings(String),

    #[error("belief subjects differ: {own} vs {peer}")]
    SubjectMismatch { own: CellId, peer: CellId },

    #[error("neighborhood is empty")]
    EmptyNeighborhood,

    #[error("{0} is not in the neighborhood")]
    NotACandidate(AgentId),

    #[error("non-finite luciferin value")]
    NonFiniteLuciferin,

    #[error("no reputation entry for reporter {0}")]
    UnknownReporter(AgentId),

    #[error("invalid config: {field} = {value}: {rule}")]
    InvalidConfig {
        field: String,
        value: String,
        rule: String,
    },
}

impl Error {
    pub(crate) fn invalid_config(
        field: impl Into<String>,
        value: impl ToString,
        rule: impl Into<String>,
    ) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            value: value.to_string(),
            rule: rule.into(),
        }
    }
}
