//! q-hypergeometric difference operator on ℓ²(ℤ): a three-term recurrence
//! with ₂φ₁ eigenfunctions, mixed spectrum, and an explicit q ↑ 1 limit.
//!
//! For 0 < q < 1 and parameters (r, c, d) the coefficients
//!
//!   a_k = ½ √((1 − q^{−k}/r)(1 − c q^{−k}/(d²r))),   b_k = q^{−k}(c+q)/(2dr)
//!
//! approach the free values (½, 0) as k → −∞ and grow like q^{−k} as
//! k → +∞, so the minus end carries an absolutely continuous band [−1, 1]
//! while the plus end behaves like an unbounded birth-death operator whose
//! determinacy depends on where c sits relative to q². The doubly infinite
//! splitting follows Masson & Repka (1991); q-series notation follows
//! Gasper & Rahman. Spectral values are written x = μ(y) = (y + 1/y)/2.
//!
//! Multiplied by the symmetrizing weight
//! w_k = |d|^k √((c q^{1−k}/(d²r); q)_∞ / (q^{1−k}/r; q)_∞), each family
//! below solves x u_k = a_k u_{k+1} + b_k u_k + a_{k−1} u_{k−1} at x = μ(y):
//!
//!   f_k(y) = ₂φ₁(dy, d/y; c; q, r q^k), symmetric under y ↔ 1/y and flat
//!            (→ 1) as k → +∞;
//!   g_k(y) = (q/c)^k ₂φ₁(q dy/c, q d/(cy); q²/c; q, r q^k), the companion
//!            growing like (q/c)^k;
//!   F_k(y) = (dy)^{−k} ₂φ₁(dy, q dy/c; q y²; q, q^{1−k} c/(d²r)), the
//!            Jost-type solution matching the free asymptotics (dy)^{−k}
//!            as k → −∞.
//!
//! The two series arguments r q^k and q^{1−k} c/(d²r) shrink in opposite
//! directions, so each family is summed where its argument is at most
//! [`SERIES_ARG_LIMIT`] and carried across the line by the weighted
//! recurrence, downward for f and g, upward for F, seeded by the adjacent
//! pair of series values.
//!
//! The scattering decomposition f_k = c(y) F_k(y) + c(1/y) F_k(1/y) holds
//! with
//!
//!   c(y) = (c/(dy), d/y, dry, q/(dry); q)_∞ / ((1/y², c, r, q/r; q)_∞),
//!
//! and over the plus end F expands back as F = a(y) f + b(y) g through two
//! more q-product ratios. Wronskians of the weighted families are constant
//! in k and reduce to [wF(y), wF(1/y)] = (1/y − y)/2 and
//! [wf, wF(y)] = c(1/y)(y − 1/y)/2.
//!
//! For r < 0 (with c < 1, |d| < 1, |c/d| < 1) the spectral measure of the
//! k = 0 cyclic vector splits into the continuous density
//! 1/(2π |c(e^{iχ})|²) against x = cos χ and point masses at x_p = μ(y_p),
//! y_p = q^p/(dr), |y_p| > 1. Masses are residues of y ↦ 1/(c(y) c(1/y) y)
//! extracted on a small contour and cross-checked against the first-order
//! zero of c(y) at y_p.
//!
//! Substituting c = q/s², d = q^{1+λ}/s, r = q^{−ε−λ} and rescaling by
//! 1/(1 − q) sends the operator to a Meixner-type limit as q ↑ 1: the
//! discrete eigenvalue indexed by p approaches (p + ε − 1)(1/s − s), which
//! [`limit_scan`] tracks along a q-schedule.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jacobi::{eigen, truncate, JacobiCoefficients, TruncatedMatrix};
use crate::specialfn::{phi21, qpochhammer_inf, SeriesControl};

/// Largest ₂φ₁ argument magnitude accepted for direct summation; beyond it
/// the value comes from the weighted recurrence.
pub const SERIES_ARG_LIMIT: f64 = 0.5;

/// Window of indices k on which the positivity of a_k² is checked when
/// parameters are constructed.
const POSITIVITY_WINDOW: i64 = 60;

/// Relative tolerance for recognizing a point on the q^{−ℤ≥0} lattice.
const POLE_LATTICE_TOL: f64 = 1e-12;

/// Two values of y within this distance of ±1 are treated as coincident and
/// the F(y), F(1/y) pair as degenerate.
const DEGENERATE_Y_TOL: f64 = 1e-12;

/// Nodes on the residue contour around an atom.
const CONTOUR_NODES: usize = 64;

/// Contour radius, relative to the atom position and to its distance from
/// the unit circle.
const CONTOUR_RADIUS_REL: f64 = 1e-4;

/// Atoms closer to the unit circle than this margin cannot be separated
/// from the continuous band by the residue contour.
const BAND_EDGE_MARGIN: f64 = 1e-8;

/// Agreement required between the contour mass and the first-order residue.
const RESIDUE_CROSS_TOL: f64 = 1e-6;

/// The atom stream stops once an atom contributes less than this fraction
/// of the accumulated completeness weight at k = 0.
const ATOM_TAIL_REL: f64 = 1e-14;

/// Hard cap on the number of atoms extracted before giving up.
const ATOM_CAP: usize = 64;

/// Tail threshold and factor cap for real q-products.
const REAL_PRODUCT_TAIL: f64 = 1e-17;
const REAL_PRODUCT_CAP: usize = 60_000;

/// Parameter set (q, r, c, d) of the operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    pub q: f64,
    pub r: f64,
    pub c: f64,
    pub d: f64,
}

impl QParams {
    /// Validates 0 < q < 1, c > 0, finite nonzero r and d, and positivity
    /// of a_k² on a window of indices around the origin.
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] when a constraint fails.
    pub fn new(q: f64, r: f64, c: f64, d: f64) -> Result<Self> {
        if !q.is_finite() || !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("q = {q} must lie in (0, 1)")));
        }
        if !c.is_finite() || !(c > 0.0) {
            return Err(Error::Domain(format!("c = {c} must be positive")));
        }
        if !d.is_finite() || d == 0.0 {
            return Err(Error::Domain(format!("d = {d} must be finite and nonzero")));
        }
        if !r.is_finite() || r == 0.0 {
            return Err(Error::Domain(format!("r = {r} must be finite and nonzero")));
        }
        for k in -POSITIVITY_WINDOW..=POSITIVITY_WINDOW {
            let qk = q.powi((-k) as i32);
            let product = (1.0 - qk / r) * (1.0 - c * qk / (d * d * r));
            if !product.is_finite() {
                continue;
            }
            if product <= 0.0 {
                return Err(Error::Domain(format!(
                    "squared off-diagonal coefficient is not positive at k = {k}: {product}"
                )));
            }
        }
        Ok(QParams { q, r, c, d })
    }

    /// The worked reference point q = 1/2, r = −3/4, c = 1/5, d = 3/5.
    pub fn reference() -> Self {
        QParams {
            q: 0.5,
            r: -0.75,
            c: 0.2,
            d: 0.6,
        }
    }

    /// The coefficient family (a_k, b_k) on the full line.
    pub fn coefficients(&self) -> JacobiCoefficients {
        let QParams { q, r, c, d } = *self;
        let lnq = q.ln();
        let a = move |k: i64| {
            let qk = (-(k as f64) * lnq).exp();
            0.5 * ((1.0 - qk / r) * (1.0 - c * qk / (d * d * r))).sqrt()
        };
        let b = move |k: i64| {
            let qk = (-(k as f64) * lnq).exp();
            qk * (c + q) / (2.0 * d * r)
        };
        JacobiCoefficients::full_line("q-hypergeometric", a, b)
    }
}

/// Spectral value x = μ(y) = (y + 1/y)/2, invariant under y ↔ 1/y.
pub fn mu(y: Complex64) -> Complex64 {
    0.5 * (y + Complex64::new(1.0, 0.0) / y)
}

fn check_y(y: Complex64) -> Result<()> {
    if y.norm() == 0.0 || !y.norm().is_finite() {
        return Err(Error::Domain(format!(
            "spectral parameter y = {y} must be finite and nonzero"
        )));
    }
    Ok(())
}

fn check_range(kmin: i64, kmax: i64) -> Result<()> {
    if kmin > kmax {
        return Err(Error::Domain(format!(
            "empty index range [{kmin}, {kmax}]"
        )));
    }
    Ok(())
}

/// Real q-product ∏_{j≥0} (1 − x q^j) with one index optionally omitted.
fn qpoch_real_skip(x0: f64, q: f64, skip: i64) -> Result<f64> {
    let mut p = 1.0f64;
    let mut x = x0;
    for j in 0..REAL_PRODUCT_CAP {
        if x.abs() < REAL_PRODUCT_TAIL {
            return Ok(p);
        }
        if j as i64 != skip {
            p *= 1.0 - x;
        }
        x *= q;
    }
    Err(Error::NoConvergence {
        terms: REAL_PRODUCT_CAP,
        context: "real q-product",
    })
}

fn qpoch_real(x0: f64, q: f64) -> Result<f64> {
    qpoch_real_skip(x0, q, -1)
}

/// Log magnitude and sign of the real q-product ∏_{j≥0} (1 − x q^j).
fn qpoch_real_ln(x0: f64, q: f64) -> Result<(f64, f64)> {
    let mut ln = 0.0f64;
    let mut sign = 1.0f64;
    let mut x = x0;
    for _ in 0..REAL_PRODUCT_CAP {
        if x.abs() < REAL_PRODUCT_TAIL {
            return Ok((ln, sign));
        }
        let factor = 1.0 - x;
        if factor == 0.0 {
            return Err(Error::Pole {
                location: Complex64::new(x0, 0.0),
                context: "vanishing real q-product factor",
            });
        }
        if factor < 0.0 {
            sign = -sign;
        }
        ln += factor.abs().ln();
        x *= q;
    }
    Err(Error::NoConvergence {
        terms: REAL_PRODUCT_CAP,
        context: "real q-product (log form)",
    })
}

/// ln w_k² for the symmetrizing weight
/// w_k² = |d|^{2k} (c q^{1−k}/(d²r); q)_∞ / (q^{1−k}/r; q)_∞.
///
/// # Errors
///
/// [`Error::Domain`] if the two q-products give w_k² a negative sign.
pub fn log_weight_squared(params: &QParams, k: i64) -> Result<f64> {
    let q1k = params.q.powi((1 - k) as i32);
    let (ln_num, s_num) = qpoch_real_ln(params.c * q1k / (params.d * params.d * params.r), params.q)?;
    let (ln_den, s_den) = qpoch_real_ln(q1k / params.r, params.q)?;
    if s_num * s_den < 0.0 {
        return Err(Error::Domain(format!("weight w_{k}^2 is negative")));
    }
    Ok(2.0 * k as f64 * params.d.abs().ln() + ln_num - ln_den)
}

fn weight(params: &QParams, k: i64) -> Result<f64> {
    Ok((0.5 * log_weight_squared(params, k)?).exp())
}

/// Smallest k with |r| q^k ≤ [`SERIES_ARG_LIMIT`]; the f and g series are
/// summed at or above it.
fn series_floor(params: &QParams) -> i64 {
    ((SERIES_ARG_LIMIT / params.r.abs()).ln() / params.q.ln()).ceil() as i64
}

/// Largest k with q^{1−k} |c/(d²r)| ≤ [`SERIES_ARG_LIMIT`]; the F series is
/// summed at or below it.
fn jost_ceiling(params: &QParams) -> i64 {
    let arg1 = (params.c / (params.d * params.d * params.r)).abs();
    (1.0 - (SERIES_ARG_LIMIT / arg1).ln() / params.q.ln()).floor() as i64
}

fn series_f(params: &QParams, y: Complex64, k: i64, ctl: SeriesControl) -> Result<Complex64> {
    let d = Complex64::new(params.d, 0.0);
    let x = Complex64::new(params.r * params.q.powi(k as i32), 0.0);
    phi21(d * y, d / y, Complex64::new(params.c, 0.0), params.q, x, ctl)
}

fn series_g(params: &QParams, y: Complex64, k: i64, ctl: SeriesControl) -> Result<Complex64> {
    let q = Complex64::new(params.q, 0.0);
    let d = Complex64::new(params.d, 0.0);
    let c = Complex64::new(params.c, 0.0);
    let x = Complex64::new(params.r * params.q.powi(k as i32), 0.0);
    let prefactor = (params.q / params.c).powi(k as i32);
    Ok(prefactor * phi21(q * d * y / c, q * d / (c * y), q * q / c, params.q, x, ctl)?)
}

fn series_jost(params: &QParams, y: Complex64, k: i64, ctl: SeriesControl) -> Result<Complex64> {
    let q = Complex64::new(params.q, 0.0);
    let dy = Complex64::new(params.d, 0.0) * y;
    let x = Complex64::new(
        params.c / (params.d * params.d * params.r) * params.q.powi((1 - k) as i32),
        0.0,
    );
    let prefactor = dy.powi(-(k as i32));
    Ok(prefactor * phi21(dy, q * dy / Complex64::new(params.c, 0.0), q * y * y, params.q, x, ctl)?)
}

/// Evaluates a series family on [kmin, kmax] by summing at the top of the
/// series window and recurring downward in weighted form. The series value
/// is kept only at the top index; everything below is propagated.
fn descend<S>(
    params: &QParams,
    z: Complex64,
    kmin: i64,
    kmax: i64,
    series: S,
) -> Result<Vec<Complex64>>
where
    S: Fn(i64) -> Result<Complex64>,
{
    let coeffs = params.coefficients();
    let top = kmax.max(series_floor(params));
    let mut out = vec![Complex64::new(0.0, 0.0); (kmax - kmin + 1) as usize];
    let s_top = series(top)?;
    let mut hi = Complex64::new(weight(params, top + 1)?, 0.0) * series(top + 1)?;
    let mut lo = Complex64::new(weight(params, top)?, 0.0) * s_top;
    if top <= kmax {
        out[(top - kmin) as usize] = s_top;
    }
    for k in (kmin + 1..=top).rev() {
        let nxt = ((z - coeffs.b(k)?) * lo - coeffs.a(k)? * hi) / coeffs.a(k - 1)?;
        if k - 1 <= kmax {
            out[(k - 1 - kmin) as usize] = nxt / weight(params, k - 1)?;
        }
        hi = lo;
        lo = nxt;
    }
    Ok(out)
}

/// Evaluates the Jost family on [kmin, kmax]: series values up to the top
/// of its window, then the weighted recurrence upward.
fn ascend<S>(
    params: &QParams,
    z: Complex64,
    kmin: i64,
    kmax: i64,
    series: S,
) -> Result<Vec<Complex64>>
where
    S: Fn(i64) -> Result<Complex64>,
{
    let coeffs = params.coefficients();
    let kf = jost_ceiling(params);
    let mut out = vec![Complex64::new(0.0, 0.0); (kmax - kmin + 1) as usize];
    for k in kmin..=kmax.min(kf) {
        out[(k - kmin) as usize] = series(k)?;
    }
    if kmax <= kf {
        return Ok(out);
    }
    let mut lo = Complex64::new(weight(params, kf - 1)?, 0.0) * series(kf - 1)?;
    let mut hi = Complex64::new(weight(params, kf)?, 0.0) * series(kf)?;
    for k in kf..kmax {
        let nxt = ((z - coeffs.b(k)?) * hi - coeffs.a(k - 1)? * lo) / coeffs.a(k)?;
        if k + 1 >= kmin {
            out[(k + 1 - kmin) as usize] = nxt / weight(params, k + 1)?;
        }
        lo = hi;
        hi = nxt;
    }
    Ok(out)
}

/// f_k(y) on [kmin, kmax]; bounded as k → +∞.
///
/// # Errors
///
/// [`Error::Domain`] for y = 0 or an empty range; series and coefficient
/// failures propagate.
pub fn solution_f(params: &QParams, y: Complex64, kmin: i64, kmax: i64) -> Result<Vec<Complex64>> {
    check_y(y)?;
    check_range(kmin, kmax)?;
    let ctl = SeriesControl::default();
    descend(params, mu(y), kmin, kmax, |k| series_f(params, y, k, ctl))
}

/// g_k(y) on [kmin, kmax]; grows like (q/c)^k as k → +∞.
///
/// # Errors
///
/// As [`solution_f`].
pub fn solution_g(params: &QParams, y: Complex64, kmin: i64, kmax: i64) -> Result<Vec<Complex64>> {
    check_y(y)?;
    check_range(kmin, kmax)?;
    let ctl = SeriesControl::default();
    descend(params, mu(y), kmin, kmax, |k| series_g(params, y, k, ctl))
}

/// F_k(y) on [kmin, kmax]; behaves like (dy)^{−k} as k → −∞.
///
/// # Errors
///
/// As [`solution_f`]; additionally the underlying series has poles when
/// q y² lies on the q^{−ℤ≥0} lattice.
pub fn solution_jost(
    params: &QParams,
    y: Complex64,
    kmin: i64,
    kmax: i64,
) -> Result<Vec<Complex64>> {
    check_y(y)?;
    check_range(kmin, kmax)?;
    let ctl = SeriesControl::default();
    ascend(params, mu(y), kmin, kmax, |k| series_jost(params, y, k, ctl))
}

/// Nearest q^{−m}, m ≥ 0, if t sits on that lattice to relative accuracy
/// [`POLE_LATTICE_TOL`].
fn lattice_index(t: Complex64, q: f64) -> Option<i64> {
    let mag = t.norm();
    if !(mag.is_finite() && mag > 0.0) {
        return None;
    }
    let m = (-mag.ln() / q.ln()).round();
    if !(0.0..=4000.0).contains(&m) {
        return None;
    }
    let target = (-m * q.ln()).exp();
    if !target.is_finite() {
        return None;
    }
    ((t - Complex64::new(target, 0.0)).norm() <= POLE_LATTICE_TOL * target).then_some(m as i64)
}

/// The c-function of the scattering decomposition
/// f_k = c(y) F_k(y) + c(1/y) F_k(1/y).
///
/// # Errors
///
/// [`Error::Pole`] when y^{−2} lies on the q^{−ℤ≥0} lattice (the
/// denominator product (y^{−2}; q)_∞ vanishes there); [`Error::Domain`] for
/// y = 0.
pub fn c_function(params: &QParams, y: Complex64) -> Result<Complex64> {
    check_y(y)?;
    let ctl = SeriesControl::default();
    let q = params.q;
    let one = Complex64::new(1.0, 0.0);
    let qc = Complex64::new(q, 0.0);
    let d = Complex64::new(params.d, 0.0);
    let r = Complex64::new(params.r, 0.0);
    let c = Complex64::new(params.c, 0.0);
    let y2inv = one / (y * y);
    if lattice_index(y2inv, q).is_some() {
        return Err(Error::Pole {
            location: y,
            context: "c-function pole: y^{-2} on the q^{-Z>=0} lattice",
        });
    }
    let dry = d * r * y;
    let num = qpochhammer_inf(c / (d * y), q, ctl)?
        * qpochhammer_inf(d / y, q, ctl)?
        * qpochhammer_inf(dry, q, ctl)?
        * qpochhammer_inf(qc / dry, q, ctl)?;
    let den = qpochhammer_inf(y2inv, q, ctl)?
        * qpochhammer_inf(c, q, ctl)?
        * qpochhammer_inf(r, q, ctl)?
        * qpochhammer_inf(qc / r, q, ctl)?;
    Ok(num / den)
}

/// The two constant Wronskians of the weighted families,
/// ([wF(y), wF(1/y)], [wf, wF(y)]) = ((1/y − y)/2, c(1/y)(y − 1/y)/2).
///
/// # Errors
///
/// [`Error::DegenerateWronskian`] at y = ±1 where F(y) and F(1/y) coincide;
/// c-function failures propagate.
pub fn wronskians(params: &QParams, y: Complex64) -> Result<(Complex64, Complex64)> {
    check_y(y)?;
    let one = Complex64::new(1.0, 0.0);
    let ff = (one / y - y) / 2.0;
    if (y - one).norm() < DEGENERATE_Y_TOL || (y + one).norm() < DEGENERATE_Y_TOL {
        return Err(Error::DegenerateWronskian {
            value: ff.norm(),
            threshold: DEGENERATE_Y_TOL,
        });
    }
    let f_jost = c_function(params, one / y)? * (y - one / y) / 2.0;
    Ok((ff, f_jost))
}

/// Coefficients (a(y), b(y)) of the expansion F = a(y) f + b(y) g over the
/// plus end. b vanishes exactly at y = q^{−m}/d.
///
/// # Errors
///
/// [`Error::Pole`] when q y² lies on the q^{−ℤ≥0} lattice; [`Error::Domain`]
/// for y = 0.
pub fn jost_expansion(params: &QParams, y: Complex64) -> Result<(Complex64, Complex64)> {
    check_y(y)?;
    let ctl = SeriesControl::default();
    let q = params.q;
    let qc = Complex64::new(q, 0.0);
    let d = Complex64::new(params.d, 0.0);
    let r = Complex64::new(params.r, 0.0);
    let c = Complex64::new(params.c, 0.0);
    let qy2 = qc * y * y;
    if lattice_index(qy2, q).is_some() {
        return Err(Error::Pole {
            location: y,
            context: "expansion coefficients: q y^2 on the q^{-Z>=0} lattice",
        });
    }
    let dr = d * r;
    let d2r = d * d * r;
    let a_num = qpochhammer_inf(qc * d * y / c, q, ctl)?
        * qpochhammer_inf(qc * y / d, q, ctl)?
        * qpochhammer_inf(qc * c * y / dr, q, ctl)?
        * qpochhammer_inf(dr / (c * y), q, ctl)?;
    let a_den = qpochhammer_inf(qy2, q, ctl)?
        * qpochhammer_inf(qc / c, q, ctl)?
        * qpochhammer_inf(qc * c / d2r, q, ctl)?
        * qpochhammer_inf(d2r / c, q, ctl)?;
    let b_num = qpochhammer_inf(d * y, q, ctl)?
        * qpochhammer_inf(c * y / d, q, ctl)?
        * qpochhammer_inf(qc * qc * y / dr, q, ctl)?
        * qpochhammer_inf(dr / (y * qc), q, ctl)?;
    let b_den = qpochhammer_inf(qy2, q, ctl)?
        * qpochhammer_inf(c / qc, q, ctl)?
        * qpochhammer_inf(qc * c / d2r, q, ctl)?
        * qpochhammer_inf(d2r / c, q, ctl)?;
    Ok((a_num / a_den, b_num / b_den))
}

/// One point mass of the spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QAtom {
    /// Lattice index p of y_p = q^p/(dr).
    pub index: i64,
    /// Spectral parameter y_p, |y_p| > 1.
    pub y: f64,
    /// Spectral location x_p = μ(y_p).
    pub x: f64,
    /// Mass of the point at x_p.
    pub mass: f64,
}

/// Spectral measure of the k = 0 vector: a continuous density on the band
/// plus the extracted atoms, largest |x| last.
#[derive(Debug, Clone)]
pub struct QSpectralMeasure {
    params: QParams,
    atoms: Vec<QAtom>,
    extension_dependent: bool,
}

impl QSpectralMeasure {
    /// The extracted atoms, starting from the largest index p.
    pub fn atoms(&self) -> &[QAtom] {
        &self.atoms
    }

    /// Whether c > q², where the plus end is in the limit circle case and
    /// the measure depends on the chosen self-adjoint extension.
    pub fn extension_dependent(&self) -> bool {
        self.extension_dependent
    }

    /// The parameters the measure was built from.
    pub fn params(&self) -> &QParams {
        &self.params
    }

    /// Continuous density against dχ at x = cos χ, 0 < χ < π:
    /// 1/(2π |c(e^{iχ})|²).
    ///
    /// # Errors
    ///
    /// [`Error::Domain`] outside (0, π); the c-function poles at the band
    /// edges propagate.
    pub fn density(&self, chi: f64) -> Result<f64> {
        if !(0.0 < chi && chi < PI) {
            return Err(Error::Domain(format!(
                "density parametrization needs 0 < chi < pi, got {chi}"
            )));
        }
        let y = Complex64::new(chi.cos(), chi.sin());
        let cv = c_function(&self.params, y)?;
        Ok(1.0 / (2.0 * PI * cv.norm_sqr()))
    }
}

fn atom_position(params: &QParams, index: i64) -> f64 {
    params.q.powi(index as i32) / (params.d * params.r)
}

/// Contour estimate of the residue of 1/(c(y) c(1/y) y) at y = yp.
fn residue_mass(params: &QParams, yp: f64) -> Result<Complex64> {
    let rad = (CONTOUR_RADIUS_REL * yp.abs()).min((yp.abs() - 1.0) / 8.0);
    let center = Complex64::new(yp, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..CONTOUR_NODES {
        let theta = 2.0 * PI * j as f64 / CONTOUR_NODES as f64;
        let dy = Complex64::from_polar(rad, theta);
        let y = center + dy;
        sum += dy / (c_function(params, one / y)? * c_function(params, y)? * y);
    }
    Ok(sum / CONTOUR_NODES as f64)
}

/// c(y_p) with the factor vanishing at y_p = q^p/(dr) removed: for p ≥ 1
/// the factor sits in (q/(dry); q)_∞ at position p − 1, otherwise in
/// (dry; q)_∞ at position −p.
fn c_reduced(params: &QParams, yp: f64, index: i64) -> Result<f64> {
    let q = params.q;
    let dry = params.d * params.r * yp;
    let mut num = qpoch_real(params.c / (params.d * yp), q)? * qpoch_real(params.d / yp, q)?;
    num *= if index >= 1 {
        qpoch_real_skip(q / dry, q, index - 1)? * qpoch_real(dry, q)?
    } else {
        qpoch_real_skip(dry, q, -index)? * qpoch_real(q / dry, q)?
    };
    let den = qpoch_real(1.0 / (yp * yp), q)?
        * qpoch_real(params.c, q)?
        * qpoch_real(params.r, q)?
        * qpoch_real(q / params.r, q)?;
    Ok(num / den)
}

/// First-order residue mass ±1/(c(1/y_p) c_reduced(y_p)), the sign set by
/// which q-product carries the vanishing factor.
fn first_order_mass(params: &QParams, yp: f64, index: i64) -> Result<f64> {
    let sign = if index >= 1 { 1.0 } else { -1.0 };
    let c1 = c_function(params, Complex64::new(1.0 / yp, 0.0))?.re;
    Ok(sign / (c1 * c_reduced(params, yp, index)?))
}

/// Values of the normalized eigenvector at an atom,
/// f_k(x_p) = c(1/y_p) F_k(1/y_p), on [kmin, kmax].
///
/// # Errors
///
/// [`Error::Domain`] if the index puts y_p inside the closed unit disc or
/// the range is empty; c-function and series failures propagate.
pub fn atom_profile(params: &QParams, index: i64, kmin: i64, kmax: i64) -> Result<Vec<f64>> {
    check_range(kmin, kmax)?;
    let yp = atom_position(params, index);
    if yp.abs() <= 1.0 {
        return Err(Error::Domain(format!(
            "atom index {index} gives |y| = {} inside the continuous band",
            yp.abs()
        )));
    }
    let y = Complex64::new(1.0 / yp, 0.0);
    let scale = c_function(params, y)?;
    Ok(solution_jost(params, y, kmin, kmax)?
        .iter()
        .map(|v| (scale * v).re)
        .collect())
}

/// Extracts the spectral measure: atoms from the largest index downward
/// until one contributes less than [`ATOM_TAIL_REL`] of the accumulated
/// k = 0 completeness weight.
///
/// # Errors
///
/// [`Error::Domain`] outside the regime r < 0, c < 1, |d| < 1, |c/d| < 1;
/// [`Error::Regularity`] when an atom sits on the band edge, a contour mass
/// is not positive real, or the two residue estimates disagree;
/// [`Error::NoConvergence`] if [`ATOM_CAP`] atoms do not exhaust the stream.
pub fn spectral_measure(params: &QParams) -> Result<QSpectralMeasure> {
    if params.r >= 0.0 {
        return Err(Error::Domain(format!(
            "the spectral measure is implemented for r < 0, got r = {}",
            params.r
        )));
    }
    if params.c >= 1.0 {
        return Err(Error::Domain(format!(
            "the spectral measure needs c < 1, got c = {}",
            params.c
        )));
    }
    if params.d.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "the spectral measure needs |d| < 1, got d = {}",
            params.d
        )));
    }
    if (params.c / params.d).abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "the spectral measure needs |c/d| < 1, got c/d = {}",
            params.c / params.d
        )));
    }
    let q = params.q;
    let dr = params.d * params.r;
    let extension_dependent = params.c > q * q;
    let mut p_top = (dr.abs().ln() / q.ln()).floor() as i64;
    while atom_position(params, p_top).abs() <= 1.0 {
        p_top -= 1;
    }
    if atom_position(params, p_top).abs() < 1.0 + BAND_EDGE_MARGIN {
        return Err(Error::Regularity(format!(
            "atom at |y| = {} cannot be separated from the band edge",
            atom_position(params, p_top).abs()
        )));
    }
    let mut atoms = Vec::new();
    let mut total = 0.0f64;
    for step in 0..ATOM_CAP {
        let index = p_top - step as i64;
        let yp = atom_position(params, index);
        let xp = 0.5 * (yp + 1.0 / yp);
        let mass_c = residue_mass(params, yp)?;
        if !mass_c.re.is_finite() || mass_c.re <= 0.0 || mass_c.im.abs() > 1e-8 * mass_c.re {
            return Err(Error::Regularity(format!(
                "contour mass at atom index {index} is not positive real: {mass_c}"
            )));
        }
        let mass = mass_c.re;
        let first = first_order_mass(params, yp, index)?;
        if !first.is_finite() || (mass - first).abs() > RESIDUE_CROSS_TOL * mass {
            return Err(Error::Regularity(format!(
                "contour mass {mass} and first-order residue {first} disagree at atom index {index}"
            )));
        }
        let f0 = atom_profile(params, index, 0, 0)?[0];
        let contribution = mass * f0 * f0;
        total += contribution;
        atoms.push(QAtom {
            index,
            y: yp,
            x: xp,
            mass,
        });
        if contribution < ATOM_TAIL_REL * total {
            return Ok(QSpectralMeasure {
                params: *params,
                atoms,
                extension_dependent,
            });
        }
    }
    Err(Error::NoConvergence {
        terms: ATOM_CAP,
        context: "atom mass stream",
    })
}

/// One entry of the completeness check
/// ∫ f_k f_l dν + Σ_p m_p f_k(x_p) f_l(x_p) = δ_{k,l}/w_k².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QOrthogonality {
    pub k: i64,
    pub l: i64,
    /// The quadrature plus atom total on the left-hand side.
    pub value: f64,
    /// δ_{k,l}/w_k².
    pub target: f64,
    pub atoms_used: usize,
    pub quad_nodes: usize,
}

/// Gauss nodes and weights on [−1, 1] from the Legendre coefficient family.
fn gauss_legendre(n: usize) -> Result<Vec<(f64, f64)>> {
    let coeffs = JacobiCoefficients::half_line(
        "legendre",
        |k| {
            let j = (k + 1) as f64;
            j / ((2.0 * j - 1.0) * (2.0 * j + 1.0)).sqrt()
        },
        |_| 0.0,
    );
    let section = truncate(&coeffs, n - 1)?;
    Ok(eigen(&section)?
        .into_iter()
        .map(|(node, w)| (node, 2.0 * w))
        .collect())
}

/// Checks completeness on the index window [kmin, kmax]: band quadrature at
/// `quad_nodes` Gauss points in χ plus at most `atom_cap` atoms, one entry
/// per pair (k, l).
///
/// # Errors
///
/// [`Error::Domain`] for an empty range or zero nodes; measure and solution
/// failures propagate.
pub fn verify_completeness(
    params: &QParams,
    kmin: i64,
    kmax: i64,
    quad_nodes: usize,
    atom_cap: usize,
) -> Result<Vec<QOrthogonality>> {
    check_range(kmin, kmax)?;
    if quad_nodes == 0 {
        return Err(Error::Domain(
            "completeness check needs at least one quadrature node".into(),
        ));
    }
    let measure = spectral_measure(params)?;
    let atoms_used = measure.atoms().len().min(atom_cap);
    let span = (kmax - kmin + 1) as usize;
    let mut value = vec![0.0f64; span * span];
    for &(node, w) in &gauss_legendre(quad_nodes)? {
        let chi = PI * (node + 1.0) / 2.0;
        let scale = PI * w / 2.0 * measure.density(chi)?;
        let y = Complex64::new(chi.cos(), chi.sin());
        let fv = solution_f(params, y, kmin, kmax)?;
        for i in 0..span {
            for j in 0..span {
                value[i * span + j] += scale * (fv[i] * fv[j]).re;
            }
        }
    }
    for atom in &measure.atoms()[..atoms_used] {
        let profile = atom_profile(params, atom.index, kmin, kmax)?;
        for i in 0..span {
            for j in 0..span {
                value[i * span + j] += atom.mass * profile[i] * profile[j];
            }
        }
    }
    let mut out = Vec::with_capacity(span * span);
    for i in 0..span {
        for j in 0..span {
            let k = kmin + i as i64;
            let l = kmin + j as i64;
            let target = if k == l {
                (-log_weight_squared(params, k)?).exp()
            } else {
                0.0
            };
            out.push(QOrthogonality {
                k,
                l,
                value: value[i * span + j],
                target,
                atoms_used,
                quad_nodes,
            });
        }
    }
    Ok(out)
}

/// The single completeness entry for the pair (k, l).
///
/// # Errors
///
/// As [`verify_completeness`].
pub fn verify_orthogonality(
    params: &QParams,
    k: i64,
    l: i64,
    quad_nodes: usize,
    atom_cap: usize,
) -> Result<QOrthogonality> {
    let rows = verify_completeness(params, k.min(l), k.max(l), quad_nodes, atom_cap)?;
    rows.into_iter()
        .find(|row| row.k == k && row.l == l)
        .ok_or(Error::Index(k))
}

/// Eigenvalue the q ↑ 1 scan converges to: (p + ε − 1)(1/s − s).
pub fn limit_prediction(s: f64, eps: f64, p: i64) -> f64 {
    (p as f64 + eps - 1.0) * (1.0 / s - s)
}

/// One row of the q ↑ 1 scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub q: f64,
    /// Eigenvalue of the rescaled section nearest the prediction.
    pub eigenvalue: f64,
    /// |eigenvalue − prediction|.
    pub gap: f64,
}

/// Tracks the eigenvalue of the rescaled operator
/// (2 L − s − 1/s)/(1 − q) under c = q/s², d = q^{1+λ}/s, r = q^{−ε−λ}
/// along a q-schedule, on a centered section of half-width `window` in the
/// reversed index k ↦ −k.
///
/// # Errors
///
/// [`Error::Domain`] for s ≤ 1 or a q outside (0, 1); parameter validation
/// and eigensolver failures propagate.
pub fn limit_scan(
    s: f64,
    eps: f64,
    lambda: f64,
    q_list: &[f64],
    p: i64,
    window: usize,
) -> Result<Vec<LimitRow>> {
    if !s.is_finite() || s <= 1.0 {
        return Err(Error::Domain(format!(
            "the limit scan needs s > 1, got s = {s}"
        )));
    }
    let prediction = limit_prediction(s, eps, p);
    let mut rows = Vec::with_capacity(q_list.len());
    for &q in q_list {
        if !q.is_finite() || !(0.0 < q && q < 1.0) {
            return Err(Error::Domain(format!("q = {q} must lie in (0, 1)")));
        }
        let params = QParams::new(q, q.powf(-eps - lambda), q / (s * s), q.powf(1.0 + lambda) / s)?;
        let coeffs = params.coefficients();
        let m = window as i64;
        let mut diag = Vec::with_capacity(2 * window + 1);
        let mut offdiag = Vec::with_capacity(2 * window);
        for i in 0..=2 * m {
            let k = -m + i;
            diag.push((2.0 * coeffs.b(-k)? - s - 1.0 / s) / (1.0 - q));
            if i < 2 * m {
                offdiag.push(2.0 * coeffs.a(-k - 1)? / (1.0 - q));
            }
        }
        let spectrum = eigen(&TruncatedMatrix { diag, offdiag })?;
        let eigenvalue = spectrum
            .iter()
            .map(|&(x, _)| x)
            .min_by(|a, b| {
                (a - prediction)
                    .abs()
                    .partial_cmp(&(b - prediction).abs())
                    .expect("eigenvalues are finite")
            })
            .ok_or(Error::Index(0))?;
        rows.push(LimitRow {
            q,
            eigenvalue,
            gap: (eigenvalue - prediction).abs(),
        });
    }
    Ok(rows)
}
