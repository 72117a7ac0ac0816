use thiserror::Error;

use crate::network::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs whose shapes do not line up (wrong vector lengths, unknown names, ...).
    #[error("structural error: {0}")]
    Structure(String),

    /// The network is well-formed but violates a modelling condition.
    #[error("invalid network: {0}")]
    Invalid(ValidationReport),

    #[error("scaling parameter r = {r} is too small: arrival rate of job {job} would be {rate}")]
    ScaleTooSmall { r: String, job: String, rate: String },

    #[error("no viable ranking exists (search stuck after prefix [{stuck_prefix}])")]
    NoViableRanking { stuck_prefix: String },

    #[error("ranking is not viable at position {position} (job {job})")]
    RankingNotViable { position: usize, job: String },

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
