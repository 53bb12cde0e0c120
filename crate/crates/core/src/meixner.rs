//! Meixner-type difference operator on ℓ²(ℤ).
//!
//! The operator has coefficients a_k = √((λ+k+ε+1)(k+ε−λ)), b_k = 2a(k+ε).
//! For a > 1 its eigenvalue equation is solved by four ₂F₁ families u^±, v^±;
//! u⁻ is square-summable at +∞ and v⁺ at −∞, the connection coefficients
//! A⁻, B⁻ expand u⁻ in the v-basis, and the spectrum is the discrete lattice
//! x_l = 2(ε+l)√(a²−1) with closed-form norms. The doubly infinite framework
//! follows Masson and Repka (SIAM J. Math. Anal. 22, 1991). The |a| < 1
//! regime is the Meixner–Pollaczek operator, handled in [`crate::pollaczek`].
//!
//! Branch conventions, fixed once and verified by the recurrence and
//! connection tests: √(a²−1) > 0; the ₂F₁ argument x₊ = 1/2 + a/(2√(a²−1))
//! lies on the cut [1, ∞) and u⁺, v⁻ are defined as its +i0 side, evaluated
//! through the classical x ↦ 1−x connection with ln(x₋) = ln|x₋| − iπ; the
//! powers in A⁻, B⁻ carry exp(y(ln((a−√)/(a+√)) − iπ)) and
//! exp(ε(ln(4(a²−1)) + iπ)); the sign inside (±2)^{−k} follows the solution
//! label. The square root of sin(π(ε−λ))·sin(π(−ε−λ)) is the principal root
//! of the product; it cancels from every observable combination.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::doubly::{SolutionVector, SummableEnd};
use crate::error::{Error, Result};
use crate::jacobi::JacobiCoefficients;
use crate::specialfn::{hyp2f1, hyp2f1_regularized, log_gamma, ScaledValue, SeriesControl};

/// Direct series is preferred below this argument magnitude; beyond it the
/// Pfaff transformation maps the negative argument into (0, 1).
const PFAFF_THRESHOLD: f64 = 0.9;

/// Fraction of the reference scale the edge terms of a truncated
/// orthogonality sum may carry before the truncation counts as unconverged.
const ORTHO_TAIL_REL: f64 = 1e-12;

/// Which member of a ± solution family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub(crate) fn dir(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Sign of (±1)^k for integer k.
    pub(crate) fn alternation(self, k: i64) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => {
                if k % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// Parameters (a, λ, ε) of the Meixner-type operator.
///
/// Admissible (λ, ε) make every a_k² strictly positive: either λ = −1/2 + ib
/// (real λ = −1/2 included, except the degenerate ε = 1/2), or real λ with
/// ε ∈ [0, 1/2) and −1/2 ≤ λ < −ε, or ε ∈ (1/2, 1) and −1/2 < λ < ε−1.
/// ε is normalized into [0, 1); integer shifts relabel the spectrum.
#[derive(Clone, Copy, Debug)]
pub struct MeixnerParams {
    pub a: f64,
    pub lambda: Complex64,
    pub epsilon: f64,
}

impl MeixnerParams {
    pub fn new(a: f64, lambda: Complex64, epsilon: f64) -> Result<Self> {
        if !a.is_finite() || a * a == 1.0 {
            return Err(Error::Domain(format!(
                "a = {a} sits on the Laguerre boundary a² = 1 or is not finite"
            )));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Domain(format!(
                "epsilon = {epsilon} outside the normalized range [0, 1)"
            )));
        }
        let admissible = if lambda.im != 0.0 {
            lambda.re == -0.5 && lambda.im > 0.0
        } else {
            let l = lambda.re;
            (l == -0.5 && epsilon != 0.5)
                || (epsilon < 0.5 && (-0.5..-epsilon).contains(&l))
                || (epsilon > 0.5 && -0.5 < l && l < epsilon - 1.0)
        };
        if !admissible {
            return Err(Error::Domain(format!(
                "(lambda, epsilon) = ({lambda}, {epsilon}) outside the admissible set"
            )));
        }
        Ok(MeixnerParams { a, lambda, epsilon })
    }

    /// The worked reference point (a, λ, ε) = (2, −1/2, 1/4).
    pub fn reference() -> Self {
        MeixnerParams::new(2.0, Complex64::new(-0.5, 0.0), 0.25).expect("reference is admissible")
    }

    /// √(a²−1) in the discrete-spectrum regime.
    fn sq(&self) -> Result<f64> {
        if self.a > 1.0 {
            Ok((self.a * self.a - 1.0).sqrt())
        } else {
            Err(Error::Domain(format!(
                "a = {} is outside the a > 1 regime; |a| < 1 is Meixner-Pollaczek",
                self.a
            )))
        }
    }

    fn y(&self, z: Complex64) -> Result<Complex64> {
        Ok(z / (2.0 * self.sq()?))
    }
}

/// The tridiagonal coefficients as a full-line family.
pub fn coefficients(p: &MeixnerParams) -> JacobiCoefficients {
    let (a, lam, eps) = (p.a, p.lambda, p.epsilon);
    JacobiCoefficients::full_line(
        format!("meixner(a={}, lambda={}, epsilon={})", a, lam, eps),
        move |k| {
            let kf = k as f64;
            // (λ+k+ε+1)(k+ε−λ) is real and positive for admissible (λ, ε).
            ((lam + (kf + eps + 1.0)) * (-lam + (kf + eps))).re.sqrt()
        },
        move |k| 2.0 * a * (k as f64 + eps),
    )
}

/// ln √(Γ(p1)Γ(p2)) for a pair whose product is positive (conjugate pair, or
/// two real arguments in the same sign cell of Γ), i.e. half the sum of
/// ln|Γ|.
pub(crate) fn sqrt_gamma_pair_ln(p1: Complex64, p2: Complex64) -> Result<f64> {
    Ok(0.5 * (log_gamma(p1)?.re + log_gamma(p2)?.re))
}

fn near_integer(w: Complex64) -> bool {
    w.im.abs() < 1e-9 && (w.re - w.re.round()).abs() < 1e-9
}

fn near_nonpositive_integer(w: Complex64) -> bool {
    near_integer(w) && w.re.round() <= 0.0
}

/// ₂F₁ at a real argument x ≤ x₋ < 0, routed through a Pfaff transformation
/// when the direct series would lose precision.
///
/// The direct series at negative x alternates; with parameters of size k its
/// early terms grow like (k|x|)ⁿ before the factorial takes over, and the
/// cancellation costs ~len(k|x|) digits. Both Pfaff maps send x to
/// t = x/(x−1) ∈ (0, 1), where the terms are single-signed, and each replaces
/// one upper parameter by c minus it; picking the variant with the smaller
/// opening ratio keeps the transformed series flat. The same map also covers
/// |x| ≥ 1 (a close to 1 pushes x₋ toward −∞).
fn hyp2f1_neg_arg(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    x: f64,
    ctl: SeriesControl,
) -> Result<Complex64> {
    let growth = (a * b / c).norm() * x.abs();
    if x.abs() < PFAFF_THRESHOLD && growth <= 2.0 {
        return hyp2f1(a, b, c, Complex64::new(x, 0.0), ctl);
    }
    let t = Complex64::new(x / (x - 1.0), 0.0);
    let keep_a = (a * (c - b)).norm() <= ((c - a) * b).norm();
    if keep_a {
        let f = hyp2f1(a, c - b, c, t, ctl)?;
        Ok(((1.0 - x).ln() * -a).exp() * f)
    } else {
        let f = hyp2f1(c - a, b, c, t, ctl)?;
        Ok(((1.0 - x).ln() * -b).exp() * f)
    }
}

/// ₂F₁ on the cut, F(a,b;c;x+i0) for real x > 1, through the classical
/// x ↦ 1−x two-term connection; the power of 1−x < 0 takes
/// ln(1−x) = ln|1−x| − iπ on this side. Terminating series bypass the
/// connection since they converge everywhere.
///
/// # Errors
///
/// [`Error::Pole`] when a+b−c is an integer (the two-term form degenerates);
/// gamma poles and series failures propagate.
fn hyp2f1_plus_i0(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    x: f64,
    ctl: SeriesControl,
) -> Result<ScaledValue> {
    if near_nonpositive_integer(a) || near_nonpositive_integer(b) {
        let f = hyp2f1(a, b, c, Complex64::new(x, 0.0), ctl)?;
        return Ok(ScaledValue::new(f, Complex64::new(0.0, 0.0)));
    }
    let s = a + b - c;
    if near_integer(s) {
        return Err(Error::Pole {
            location: s,
            context: "on-cut hypergeometric connection at integer a+b-c",
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let xm = 1.0 - x;
    let f1 = hyp2f1_neg_arg(a, b, s + one, xm, ctl)?;
    let f2 = hyp2f1_neg_arg(c - a, c - b, one - s, xm, ctl)?;
    let ln1 = log_gamma(c)? + log_gamma(-s)? - log_gamma(c - a)? - log_gamma(c - b)?;
    let ln2 = log_gamma(c)? + log_gamma(s)? - log_gamma(a)? - log_gamma(b)?;
    let ln_cut = (c - a - b) * Complex64::new((-xm).ln(), -PI);
    Ok(ScaledValue::new(f1, ln1).add(ScaledValue::new(f2, ln2 + ln_cut)))
}

/// Hypergeometric factor at the model argument: x₋ goes through the real-axis
/// evaluator, x₊ through the +i0 cut convention.
fn hyp2f1_model(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    x: f64,
    ctl: SeriesControl,
) -> Result<ScaledValue> {
    if x < 1.0 {
        let f = hyp2f1_neg_arg(a, b, c, x, ctl)?;
        Ok(ScaledValue::new(f, Complex64::new(0.0, 0.0)))
    } else {
        hyp2f1_plus_i0(a, b, c, x, ctl)
    }
}

/// u^±_k(z) in mantissa/exponent form.
///
/// u⁻ is square-summable at +∞; u⁺ is the companion growing there.
pub fn solution_u_scaled(
    p: &MeixnerParams,
    sign: Sign,
    z: Complex64,
    k: i64,
) -> Result<ScaledValue> {
    let sq = p.sq()?;
    let y = z / (2.0 * sq);
    let kf = k as f64;
    let (lam, eps) = (p.lambda, p.epsilon);
    let p1 = lam + (kf + eps + 1.0);
    let p2 = -lam + (kf + eps);
    let c = Complex64::new(kf + 1.0 + eps, 0.0) + sign.dir() * y;
    let x = 0.5 + sign.dir() * p.a / (2.0 * sq);
    let f = hyp2f1_model(p1, p2, c, x, SeriesControl::default())?;
    let ln_pref =
        Complex64::new(-kf * (2.0 * sq).ln() + sqrt_gamma_pair_ln(p1, p2)?, 0.0) - log_gamma(c)?;
    Ok(ScaledValue::new(
        f.mantissa * sign.alternation(k),
        f.ln_scale + ln_pref,
    ))
}

/// v^±_k(z) in mantissa/exponent form.
///
/// v⁺ is square-summable at −∞; v⁻ is the companion growing there.
pub fn solution_v_scaled(
    p: &MeixnerParams,
    sign: Sign,
    z: Complex64,
    k: i64,
) -> Result<ScaledValue> {
    let sq = p.sq()?;
    let y = z / (2.0 * sq);
    let kf = k as f64;
    let (lam, eps) = (p.lambda, p.epsilon);
    let p1 = lam + (-kf - eps + 1.0);
    let p2 = -lam + (-kf - eps);
    let c = Complex64::new(-kf - eps + 1.0, 0.0) + sign.dir() * y;
    let x = 0.5 - sign.dir() * p.a / (2.0 * sq);
    let f = hyp2f1_model(p1, p2, c, x, SeriesControl::default())?;
    let ln_pref =
        Complex64::new(kf * (2.0 * sq).ln() + sqrt_gamma_pair_ln(p1, p2)?, 0.0) - log_gamma(c)?;
    Ok(ScaledValue::new(
        f.mantissa * sign.alternation(k),
        f.ln_scale + ln_pref,
    ))
}

/// u^±_k(z) as a plain value; overflows only where the solution itself does.
pub fn solution_u(p: &MeixnerParams, sign: Sign, z: Complex64, k: i64) -> Result<Complex64> {
    Ok(solution_u_scaled(p, sign, z, k)?.value())
}

/// v^±_k(z) as a plain value.
pub fn solution_v(p: &MeixnerParams, sign: Sign, z: Complex64, k: i64) -> Result<Complex64> {
    Ok(solution_v_scaled(p, sign, z, k)?.value())
}

/// Expansion coefficients of the summable solutions over the v-basis.
///
/// For the operator here, u⁻ = A⁻ v⁺ + B⁻ v⁻. The Meixner–Pollaczek variant
/// fills the plus pair as well.
#[derive(Clone, Copy, Debug)]
pub struct ConnectionCoefficients {
    pub a_minus: Complex64,
    pub b_minus: Complex64,
    pub a_plus: Option<Complex64>,
    pub b_plus: Option<Complex64>,
}

/// The phase-bearing prefactor shared by A⁻ and B⁻.
fn connection_prefactor(p: &MeixnerParams, y: Complex64) -> Result<Complex64> {
    let sq = p.sq()?;
    let ln_base = Complex64::new(((p.a - sq) / (p.a + sq)).ln(), -PI);
    let ln_eps = Complex64::new((4.0 * (p.a * p.a - 1.0)).ln(), PI);
    Ok((y * ln_base + p.epsilon * ln_eps).exp())
}

fn sin_product_root(p: &MeixnerParams) -> Complex64 {
    let prod =
        (PI * (p.epsilon - p.lambda)).sin() * (PI * (-Complex64::new(p.epsilon, 0.0) - p.lambda)).sin();
    prod.sqrt()
}

/// A⁻(z), B⁻(z) in closed form.
///
/// # Errors
///
/// [`Error::Pole`] from the Γ factors of A⁻ (inadmissible y only).
pub fn connection(p: &MeixnerParams, z: Complex64) -> Result<ConnectionCoefficients> {
    let y = p.y(z)?;
    let pref = connection_prefactor(p, y)?;
    let ss = sin_product_root(p);
    let one = Complex64::new(1.0, 0.0);
    let ln_gamma_quot =
        Complex64::new(PI.ln(), 0.0) - log_gamma(one + p.lambda - y)? - log_gamma(-p.lambda - y)?;
    let a_minus = ln_gamma_quot.exp() * pref / ss;
    let b_minus = pref * (PI * (y - p.epsilon)).sin() / ss;
    Ok(ConnectionCoefficients {
        a_minus,
        b_minus,
        a_plus: None,
        b_plus: None,
    })
}

/// Closed-form Wronskians ([v⁻,v⁺], [u⁻,v⁺]); the second is B⁻·[v⁻,v⁺].
pub fn wronskians(p: &MeixnerParams, z: Complex64) -> Result<(Complex64, Complex64)> {
    let sq = p.sq()?;
    let y = p.y(z)?;
    let vv = -2.0 * sq / connection_prefactor(p, y)?;
    let uv = -2.0 * sq * (PI * (y - p.epsilon)).sin() / sin_product_root(p);
    Ok((vv, uv))
}

/// Spectrum point x_l = 2(ε+l)√(a²−1) and its squared norm
/// ‖u⁻(x_l)‖² = (4(a²−1)t)^ε t^l Γ(ε+l−λ) Γ(1+ε+l+λ), t = (a−√)/(a+√).
pub fn spectrum(p: &MeixnerParams, l: i64) -> Result<(f64, f64)> {
    let sq = p.sq()?;
    let lf = l as f64;
    let x_l = 2.0 * (p.epsilon + lf) * sq;
    let t = (p.a - sq) / (p.a + sq);
    let ln_norm = Complex64::new(
        p.epsilon * (4.0 * (p.a * p.a - 1.0) * t).ln() + lf * t.ln(),
        0.0,
    ) + log_gamma(-p.lambda + (p.epsilon + lf))?
        + log_gamma(p.lambda + (1.0 + p.epsilon + lf))?;
    Ok((x_l, ln_norm.exp().re))
}

/// Entry k of the ℓ²(ℤ) eigenvector u⁻(x_l).
///
/// For k ≥ l the direct series applies; below the diagonal the c-parameter
/// k+1−l of the series degenerates and the value comes from the eigenvector
/// identity u⁻ = A⁻ v⁺ at z = x_l instead.
pub fn eigenvector_entry(p: &MeixnerParams, l: i64, k: i64) -> Result<f64> {
    let sq = p.sq()?;
    let x_l = Complex64::new(2.0 * (p.epsilon + l as f64) * sq, 0.0);
    if k >= l {
        Ok(solution_u_scaled(p, Sign::Minus, x_l, k)?.value().re)
    } else {
        let conn = connection(p, x_l)?;
        Ok((conn.a_minus * solution_v_scaled(p, Sign::Plus, x_l, k)?.value()).re)
    }
}

/// Result of a truncated orthogonality sum: the sum itself, the closed-form
/// target it should equal, and the natural comparison scale (geometric mean
/// of the two diagonal targets, so off-diagonal defects are measured
/// relatively too).
#[derive(Clone, Copy, Debug)]
pub struct OrthogonalityCheck {
    pub value: f64,
    pub target: f64,
    pub scale: f64,
}

fn tail_converged(terms: &[f64], scale: f64) -> bool {
    let edge = 10.min(terms.len() / 2);
    let head: f64 = terms[..edge].iter().map(|t| t.abs()).sum();
    let tail: f64 = terms[terms.len() - edge..].iter().map(|t| t.abs()).sum();
    head + tail < ORTHO_TAIL_REL * scale
}

/// Primary orthogonality: Σ_{k=−K}^{K} u⁻_k(x_l) u⁻_k(x_p) against
/// δ_{l,p}·‖u⁻(x_l)‖².
///
/// # Errors
///
/// [`Error::NoConvergence`] when the 10 edge terms at either end still carry
/// more than [`ORTHO_TAIL_REL`] of the norm scale.
pub fn verify_orthogonality(
    p: &MeixnerParams,
    l: i64,
    p_idx: i64,
    truncation: usize,
) -> Result<OrthogonalityCheck> {
    let big_k = truncation as i64;
    let (_, norm_l) = spectrum(p, l)?;
    let (_, norm_p) = spectrum(p, p_idx)?;
    let scale = (norm_l * norm_p).sqrt();
    let mut terms = Vec::with_capacity(2 * truncation + 1);
    for k in -big_k..=big_k {
        terms.push(eigenvector_entry(p, l, k)? * eigenvector_entry(p, p_idx, k)?);
    }
    if !tail_converged(&terms, scale) {
        return Err(Error::NoConvergence {
            terms: terms.len(),
            context: "orthogonality sum edge terms have not decayed",
        });
    }
    let value = terms.iter().sum();
    let target = if l == p_idx { norm_l } else { 0.0 };
    Ok(OrthogonalityCheck {
        value,
        target,
        scale,
    })
}

/// The prefactor-stripped series factor of u⁻_k(x_l): the regularized
/// ₂F₁(k+ε+λ+1, k+ε−λ; k+1−l; x₋), entire in l.
fn dual_series_factor(p: &MeixnerParams, k: i64, l: i64) -> Result<ScaledValue> {
    let sq = p.sq()?;
    let kf = k as f64;
    let p1 = p.lambda + (kf + p.epsilon + 1.0);
    let p2 = -p.lambda + (kf + p.epsilon);
    let c = Complex64::new((k - l) as f64 + 1.0, 0.0);
    let x = Complex64::new(0.5 - p.a / (2.0 * sq), 0.0);
    hyp2f1_regularized(p1, p2, c, x, SeriesControl::default())
}

/// Right-hand side of the dual orthogonality relation at k = m.
fn dual_target(p: &MeixnerParams, k: i64) -> Result<f64> {
    let sq = p.sq()?;
    let kf = k as f64;
    let four = 4.0 * (p.a * p.a - 1.0);
    let t = (p.a - sq) / (p.a + sq);
    let ln = Complex64::new(kf * four.ln() + p.epsilon * (four * t).ln(), 0.0)
        - log_gamma(p.lambda + (kf + p.epsilon + 1.0))?
        - log_gamma(-p.lambda + (kf + p.epsilon))?;
    Ok(ln.exp().re)
}

/// Dual orthogonality: the sum over the spectrum label l, for sequence
/// indices (k, m), in prefactor-stripped form. The weight of each l is
/// t^{−l}/(Γ(ε+l−λ)Γ(1+ε+l+λ)) and the series factors are regularized, so
/// every piece stays finite across the whole lattice.
pub fn verify_dual_orthogonality(
    p: &MeixnerParams,
    k: i64,
    m: i64,
    truncation: usize,
) -> Result<OrthogonalityCheck> {
    let sq = p.sq()?;
    let big_l = truncation as i64;
    let t = (p.a - sq) / (p.a + sq);
    let scale = (dual_target(p, k)?.abs() * dual_target(p, m)?.abs()).sqrt();
    let mut terms = Vec::with_capacity(2 * truncation + 1);
    for l in -big_l..=big_l {
        let lf = l as f64;
        let ln_weight = Complex64::new(-lf * t.ln(), 0.0)
            - log_gamma(-p.lambda + (p.epsilon + lf))?
            - log_gamma(p.lambda + (1.0 + p.epsilon + lf))?;
        let weight = ScaledValue::new(Complex64::new(1.0, 0.0), ln_weight);
        let term = weight
            .mul(dual_series_factor(p, k, l)?)
            .mul(dual_series_factor(p, m, l)?);
        terms.push(term.value().re);
    }
    if !tail_converged(&terms, scale) {
        return Err(Error::NoConvergence {
            terms: terms.len(),
            context: "dual orthogonality sum edge terms have not decayed",
        });
    }
    let value = terms.iter().sum();
    let target = if k == m { dual_target(p, k)? } else { 0.0 };
    Ok(OrthogonalityCheck {
        value,
        target,
        scale,
    })
}

/// The resolvent solution pair at non-real z: u⁻ (summable at +∞) and v⁺
/// (summable at −∞), packaged for [`crate::doubly::green_doubly`].
pub fn weyl_solution_pair(
    p: &MeixnerParams,
    z: Complex64,
) -> Result<(SolutionVector, SolutionVector)> {
    if z.im == 0.0 {
        return Err(Error::Domain(
            "resolvent solutions need non-real z; the real axis meets the spectrum".into(),
        ));
    }
    p.sq()?;
    let pp = *p;
    let phi = SolutionVector::new("meixner u-", z, SummableEnd::Plus, move |k| {
        solution_u_scaled(&pp, Sign::Minus, z, k)
    });
    let pq = *p;
    let phi_cap = SolutionVector::new("meixner v+", z, SummableEnd::Minus, move |k| {
        solution_v_scaled(&pq, Sign::Plus, z, k)
    });
    Ok((phi, phi_cap))
}
