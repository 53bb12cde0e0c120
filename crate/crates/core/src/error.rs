//! Error taxonomy shared by every module in the crate.

use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide error type.
///
/// Numerical routines never return NaN or infinity silently; every failure
/// mode maps onto one of these variants.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A gamma function or series coefficient was evaluated at a pole.
    #[error("pole encountered at {location} ({context})")]
    Pole {
        location: Complex64,
        context: &'static str,
    },

    /// A series or iteration exhausted its budget without meeting its
    /// convergence test.
    #[error("no convergence after {terms} terms ({context})")]
    NoConvergence {
        terms: usize,
        context: &'static str,
    },

    /// Input outside the admissible domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An off-diagonal coefficient was not strictly positive.
    #[error("coefficient a_{index} = {value} is not strictly positive")]
    Coefficient { index: i64, value: f64 },

    /// A sequence was addressed outside the range where it is defined.
    #[error("index {0} out of range")]
    Index(i64),

    /// A continued fraction stalled; the best estimate and an error bound
    /// are reported so the caller can decide whether to accept it.
    #[error("continued fraction converged only to {bound:.3e} (estimate {estimate})")]
    SlowConvergence { estimate: Complex64, bound: f64 },

    /// The Stieltjes transform of an indeterminate operator depends on the
    /// choice of self-adjoint extension and is not a well-posed quantity.
    #[error("operator is indeterminate; the Stieltjes transform is extension-dependent")]
    ExtensionAmbiguous,

    /// Two solutions were proportional to working precision, so a Green
    /// kernel built from their Wronskian is meaningless.
    #[error("Wronskian magnitude {value:.3e} below degeneracy threshold {threshold:.3e}")]
    DegenerateWronskian { value: f64, threshold: f64 },

    /// A model's regularity assumptions (simple c-function zeros, no
    /// coinciding zeros of c(y) and c(1/y)) failed a setup check.
    #[error("regularity check failed: {0}")]
    Regularity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
