use thiserror::Error;

use crate::lipschitz::BallReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("deformation parameters differ: {left} vs {right}")]
    ThetaMismatch { left: f64, right: f64 },

    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("element is not radial (largest off-diagonal coefficient {max_off_diagonal:.3e})")]
    NotRadial { max_off_diagonal: f64 },

    #[error("candidate {index} lies outside the Lipschitz ball (commutator norm {})", report.commutator_norm)]
    OutsideBall { index: usize, report: Box<BallReport> },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("box radius {radius} too small for support radius {support}")]
    UndersizedBox { radius: usize, support: usize },

    #[error("series is not positive on the fit window; widen the window")]
    NonPositiveWindow,

    #[error("malformed input: {0}")]
    Parse(String),
}

pub(crate) fn check_theta(left: f64, right: f64) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::ThetaMismatch { left, right })
    }
}

pub(crate) fn positive_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")))
    }
}
