//! Error type shared by all modules.

use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid construction needs at least 3 nodes per axis.
    TooSmall { nx: usize, ny: usize },
    /// Grid cells must be square; spacings differ beyond 1e-12 relative.
    NonSquareCells { hx: f64, hy: f64 },
    /// A precondition on sizes, counts, or finiteness failed.
    InvalidInput(&'static str),
    /// A direct linear solve could not be completed.
    SolverFailure(&'static str),
    /// `exp(|ξ|·diam)` would exceed the overflow guard 1e12.
    FrequencyTooLarge { xi_norm: f64, max_norm: f64 },
    /// Newton failed to reach the tolerance; boundary data is likely
    /// outside the smallness regime.
    NonConvergence { iterations: usize, last_residual: f64 },
    /// The Newton linear system was numerically singular.
    JacobianSingular,
    /// `(2ε)^k` would amplify solver noise past the requested accuracy.
    StepTooSmall { eps: f64, order: usize },
    /// Conformal factor does not satisfy `σ = 1` on the boundary.
    GaugeViolation,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::TooSmall { nx, ny } => {
                write!(f, "grid too small: {nx}x{ny}; need at least 3 nodes per axis")
            }
            Error::NonSquareCells { hx, hy } => {
                write!(f, "non-square cells: hx = {hx:e}, hy = {hy:e}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::SolverFailure(msg) => write!(f, "linear solver failure: {msg}"),
            Error::FrequencyTooLarge { xi_norm, max_norm } => {
                write!(f, "|xi| = {xi_norm:.6} exceeds overflow guard (max {max_norm:.6})")
            }
            Error::NonConvergence { iterations, last_residual } => write!(
                f,
                "Newton did not converge after {iterations} iterations (residual {last_residual:e})"
            ),
            Error::JacobianSingular => write!(f, "Newton Jacobian is singular"),
            Error::StepTooSmall { eps, order } => write!(
                f,
                "finite-difference step eps = {eps:e} underflows the noise floor at order {order}"
            ),
            Error::GaugeViolation => write!(f, "conformal factor is not 1 on the boundary"),
        }
    }
}

impl core::error::Error for Error {}
