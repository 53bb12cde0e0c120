//! Spectral analysis of Jacobi operators on ℓ²(ℤ≥0) and ℓ²(ℤ).
//!
//! A Jacobi operator is a symmetric tridiagonal operator
//!
//! ```text
//! (J u)_k = a_k u_{k+1} + b_k u_k + a_{k-1} u_{k-1},      a_k > 0, b_k ∈ ℝ,
//! ```
//!
//! acting on square-summable sequences over the half line or the full line.
//! The crate provides the classical machinery attached to such operators and
//! two explicit hypergeometric models where everything can be checked against
//! closed forms:
//!
//! * [`jacobi`]: orthonormal and associated polynomial recurrences, Wronskians,
//!   the Christoffel–Darboux kernel, finite sections and their eigenvalue and
//!   quadrature data (Golub–Welsch style).
//! * [`spectral`]: Stieltjes transforms by continued fraction, Stieltjes–Perron
//!   inversion, half-line Green kernels, and determinacy classification for the
//!   Hamburger moment problem (boundedness, Carleman, one-sided bounds, and a
//!   numeric limit-circle probe).
//! * [`doubly`]: doubly infinite operators split into two half-line parts, with
//!   deficiency-index bookkeeping after Masson and Repka (1991), full-line
//!   Wronskians and Green kernels.
//! * [`meixner`]: a full-line operator whose eigenfunctions are Meixner-type
//!   ₂F₁ functions; closed-form discrete spectrum, connection coefficients,
//!   norms, and orthogonality checks.
//! * [`pollaczek`]: the oscillatory companion of [`meixner`] with Meixner–
//!   Pollaczek eigenfunctions and an absolutely continuous spectrum on ℝ.
//! * [`qhyper`]: a basic hypergeometric (₂φ₁) model with mixed spectrum: an
//!   absolutely continuous band [−1, 1] plus a geometric string of point
//!   masses, together with its q↑1 degeneration to the [`meixner`] model.
//! * [`specialfn`]: the complex special-function kernel backing the models
//!   (log-gamma, ₂F₁, q-Pochhammer, ₂φ₁).
//! * [`models`]: ready-made coefficient families used across tests and the
//!   command line front end.
//!
//! Numerical policy: everything is plain `f64`/`Complex64` arithmetic; gamma
//! products are combined in log space before exponentiation, and growing
//! recurrences carry explicit log-scale exponents so that no public operation
//! silently overflows.

pub mod doubly;
pub mod error;
pub mod jacobi;
pub mod meixner;
pub mod models;
pub mod pollaczek;
pub mod qhyper;
pub mod specialfn;
pub mod spectral;

pub use error::{Error, Result};
