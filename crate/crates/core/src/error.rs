use thiserror::Error;

use crate::loadcontrol::AchievableInterval;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input rate {lambda} is unstable for service rate {mu}")]
    Unstable { lambda: f64, mu: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}] (error estimate {error:e})")]
    Quadrature { lo: f64, hi: f64, error: f64 },

    #[error("utility `{label}` has not passed the concavity/monotonicity check")]
    UnvalidatedUtility { label: String },

    #[error("utility `{label}` failed validation: {reason}")]
    InvalidUtility { label: String, reason: String },

    #[error("input rate {lambda} is not achievable; achievable range is {interval}")]
    NotAchievable {
        lambda: f64,
        interval: AchievableInterval,
    },

    #[error("the supremum of the required parameter is not attained at rate {lambda}")]
    SupremumNotAttained { lambda: f64 },

    #[error("no symmetric equilibrium exists for this policy")]
    NoEquilibrium,

    #[error("equilibrium is not a unique interior rate: {0}")]
    NotInterior(String),

    #[error("epsilon {epsilon:e} is below the attainable resolution; best gap {best_gap:e}")]
    EpsilonUnderflow {
        epsilon: f64,
        best_gap: f64,
        best: Box<crate::loadcontrol::EpsOptimal>,
    },

    #[error("simulation error: {0}")]
    Simulation(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
