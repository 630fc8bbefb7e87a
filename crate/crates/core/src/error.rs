use thiserror::Error;

use crate::policy::PolicyViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidParameter(String),

    #[error("invalid policy: {}", join(.0))]
    InvalidPolicy(Vec<PolicyViolation>),

    /// q = 1 (p = 0): several closed forms divide by p.
    #[error("degenerate source: p = 0 (q = 1)")]
    DegenerateSource,

    #[error("non-ergodic parameters: geometric ratio {0} >= 1")]
    NonErgodic(f64),

    #[error("{0}: unsupported; use oracle or simulation")]
    Unsupported(&'static str),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("stationary solve failed: {0}")]
    NonConvergence(String),

    #[error("tail mass {mass:e} at truncation level exceeds bound {bound:e}")]
    ExcessTailMass { mass: f64, bound: f64 },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_) | Error::ExcessTailMass { .. }
        )
    }
}

fn join(violations: &[PolicyViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
