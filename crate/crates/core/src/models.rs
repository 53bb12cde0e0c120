//! Named coefficient families shared by the command line tool and the
//! integration tests.
//!
//! Each constructor returns a [`JacobiCoefficients`] describing one of the
//! standard half-line examples: the Chebyshev recurrence with its purely
//! absolutely continuous measure on [-1, 1], the Stieltjes-Wigert recurrence
//! whose moment problem is indeterminate, and a power-law family
//! a_k = s_a (k+1)^{p_a}, b_k = s_b (k+1)^{p_b} that interpolates between
//! bounded, Carleman-determinate, and genuinely indeterminate growth.
//!
//! The doubly infinite models live in their own modules ([`crate::meixner`],
//! [`crate::pollaczek`], [`crate::qhyper`]) because they carry spectral
//! structure well beyond a coefficient recipe.

use crate::error::{Error, Result};
use crate::jacobi::JacobiCoefficients;

/// Chebyshev recurrence a_k = 1/2, b_k = 0.
///
/// The operator norm is exactly 1, recorded as a hint so the determinacy
/// classifier can settle the moment problem by boundedness alone.
pub fn chebyshev() -> JacobiCoefficients {
    JacobiCoefficients::half_line("chebyshev", |_| 0.5, |_| 0.0).with_norm_bound(1.0)
}

/// Stieltjes-Wigert recurrence for base 0 < q < 1,
///
///   a_k = q^{-2k-1} q^{-1/2} sqrt(1 - q^{k+1}),
///   b_k = q^{-2k} (1 + 1/q - q^k).
///
/// The coefficients grow like q^{-2k}, fast enough that the underlying
/// moment problem (the log-normal weight is one solution) is indeterminate.
pub fn stieltjes_wigert(q: f64) -> Result<JacobiCoefficients> {
    if !(q.is_finite() && 0.0 < q && q < 1.0) {
        return Err(Error::Domain(format!(
            "Stieltjes-Wigert base q = {q} outside (0, 1)"
        )));
    }
    Ok(JacobiCoefficients::half_line(
        "stieltjes-wigert",
        move |k| q.powi(-2 * k as i32 - 1) * q.powf(-0.5) * (1.0 - q.powi(k as i32 + 1)).sqrt(),
        move |k| q.powi(-2 * k as i32) * (1.0 + q.recip() - q.powi(k as i32)),
    ))
}

/// Power-law family a_k = s_a (k+1)^{p_a}, b_k = s_b (k+1)^{p_b}.
///
/// With s_a = 1, p_a = 1, s_b = 0 this is the recurrence a_k = k + 1 whose
/// Carleman sum diverges, a classical determinate example with unbounded
/// coefficients.  Exponents at or below zero give a bounded operator and the
/// constructor attaches the norm bound 2 s_a + |s_b| in that case.
pub fn custom(s_a: f64, p_a: f64, s_b: f64, p_b: f64) -> Result<JacobiCoefficients> {
    if !(s_a.is_finite() && s_a > 0.0) {
        return Err(Error::Domain(format!(
            "off-diagonal scale s_a = {s_a} must be positive and finite"
        )));
    }
    for (name, v) in [("p_a", p_a), ("s_b", s_b), ("p_b", p_b)] {
        if !v.is_finite() {
            return Err(Error::Domain(format!("{name} = {v} is not finite")));
        }
    }
    let coeffs = JacobiCoefficients::half_line(
        "custom power law",
        move |k| s_a * ((k + 1) as f64).powf(p_a),
        move |k| s_b * ((k + 1) as f64).powf(p_b),
    );
    if p_a <= 0.0 && p_b <= 0.0 {
        Ok(coeffs.with_norm_bound(2.0 * s_a + s_b.abs()))
    } else {
        Ok(coeffs)
    }
}
