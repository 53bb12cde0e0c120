//! Jacobi operators and their polynomial recurrences.
//!
//! A Jacobi operator acts on sequences by
//!
//! ```text
//! (J u)_k = a_k u_{k+1} + b_k u_k + a_{k-1} u_{k-1},
//! ```
//!
//! with a_k > 0 and b_k real. On the half line ℓ²(ℤ≥0) the term a_{−1}u_{−1}
//! is absent. Iterating the relation x·p_k(x) = a_k p_{k+1} + b_k p_k +
//! a_{k−1} p_{k−1} from p_0 = 1 produces the orthonormal polynomials of the
//! spectral measure; the second solution r_k with r_0 = 0, r_1 = 1/a_0 is the
//! associated (first-kind numerator) family. This module provides those
//! recurrences with overflow-safe scaling, Wronskians, the Christoffel–
//! Darboux kernel, finite sections, and the eigenvalue/first-component data
//! that turns a finite section into a Gaussian quadrature rule in the
//! Golub–Welsch manner.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specialfn::ScaledValue;

/// Index range on which a coefficient family lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexSet {
    /// Indices k ≥ 0 (operators on ℓ²(ℤ≥0)).
    HalfLine,
    /// All integer indices (operators on ℓ²(ℤ)).
    FullLine,
}

/// Relative machine tolerance used by the tridiagonal eigensolver.
const EIG_EPS: f64 = f64::EPSILON;

/// Iteration cap per eigenvalue in the implicit QL sweep.
const EIG_MAX_ITER: usize = 50;

/// Recurrences renormalize their running values every this many steps.
const RESCALE_INTERVAL: usize = 32;

/// Christoffel–Darboux switches to the confluent form below this separation.
const CD_CONFLUENT_THRESHOLD: f64 = 1e-10;

/// Relative step for the confluent kernel's centered finite difference.
const CD_DERIVATIVE_STEP: f64 = 1e-6;

pub(crate) type CoeffFn = dyn Fn(i64) -> f64 + Send + Sync;

/// Dense coefficient store, filled on demand; index −1−k maps into the
/// negative-side vectors.
#[derive(Default)]
struct CoeffCache {
    a_pos: Vec<f64>,
    b_pos: Vec<f64>,
    a_neg: Vec<f64>,
    b_neg: Vec<f64>,
}

/// A lazily evaluated, memoized coefficient family (a_k, b_k).
///
/// Coefficient closures for the hypergeometric models evaluate gamma
/// functions and infinite products, so values are cached on first access.
/// The cache is behind a mutex and is therefore safe to share across threads;
/// bulk consumers take whole prefixes at once so their inner loops run on
/// plain slices.
pub struct JacobiCoefficients {
    a_fn: Arc<CoeffFn>,
    b_fn: Arc<CoeffFn>,
    index_set: IndexSet,
    label: String,
    norm_bound_hint: Option<f64>,
    cache: Mutex<CoeffCache>,
}

impl fmt::Debug for JacobiCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JacobiCoefficients")
            .field("label", &self.label)
            .field("index_set", &self.index_set)
            .field("norm_bound_hint", &self.norm_bound_hint)
            .finish()
    }
}

impl JacobiCoefficients {
    /// Half-line family from coefficient closures.
    pub fn half_line<A, B>(label: impl Into<String>, a: A, b: B) -> Self
    where
        A: Fn(i64) -> f64 + Send + Sync + 'static,
        B: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        JacobiCoefficients {
            a_fn: Arc::new(a),
            b_fn: Arc::new(b),
            index_set: IndexSet::HalfLine,
            label: label.into(),
            norm_bound_hint: None,
            cache: Mutex::new(CoeffCache::default()),
        }
    }

    /// Full-line family from coefficient closures.
    pub fn full_line<A, B>(label: impl Into<String>, a: A, b: B) -> Self
    where
        A: Fn(i64) -> f64 + Send + Sync + 'static,
        B: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        JacobiCoefficients {
            a_fn: Arc::new(a),
            b_fn: Arc::new(b),
            index_set: IndexSet::FullLine,
            label: label.into(),
            norm_bound_hint: None,
            cache: Mutex::new(CoeffCache::default()),
        }
    }

    /// Attaches an a-priori bound on the operator norm, used by the
    /// determinacy classifier as a proof of boundedness.
    pub fn with_norm_bound(mut self, bound: f64) -> Self {
        self.norm_bound_hint = Some(bound);
        self
    }

    pub fn index_set(&self) -> IndexSet {
        self.index_set
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn norm_bound_hint(&self) -> Option<f64> {
        self.norm_bound_hint
    }

    pub(crate) fn share_closures(&self) -> (Arc<CoeffFn>, Arc<CoeffFn>) {
        (self.a_fn.clone(), self.b_fn.clone())
    }

    fn check_index(&self, k: i64) -> Result<()> {
        if self.index_set == IndexSet::HalfLine && k < 0 {
            return Err(Error::Index(k));
        }
        Ok(())
    }

    fn validate_a(k: i64, v: f64) -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Coefficient { index: k, value: v })
        }
    }

    fn validate_b(k: i64, v: f64) -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Coefficient { index: k, value: v })
        }
    }

    /// Extends one side of the dense cache through logical length `len`.
    fn fill(
        store: &mut Vec<f64>,
        f: &CoeffFn,
        len: usize,
        to_index: impl Fn(usize) -> i64,
        validate: impl Fn(i64, f64) -> Result<f64>,
    ) -> Result<()> {
        store.reserve(len.saturating_sub(store.len()));
        for slot in store.len()..len {
            let k = to_index(slot);
            store.push(validate(k, f(k))?);
        }
        Ok(())
    }

    /// Off-diagonal coefficient a_k.
    ///
    /// # Errors
    ///
    /// [`Error::Index`] for k < 0 on a half-line family;
    /// [`Error::Coefficient`] if the closure produces a value ≤ 0 or
    /// non-finite at or before k.
    pub fn a(&self, k: i64) -> Result<f64> {
        self.check_index(k)?;
        let mut cache = self.cache.lock().expect("coefficient cache poisoned");
        if k >= 0 {
            Self::fill(&mut cache.a_pos, &*self.a_fn, k as usize + 1, |s| s as i64, Self::validate_a)?;
            Ok(cache.a_pos[k as usize])
        } else {
            let slot = (-1 - k) as usize;
            Self::fill(&mut cache.a_neg, &*self.a_fn, slot + 1, |s| -1 - s as i64, Self::validate_a)?;
            Ok(cache.a_neg[slot])
        }
    }

    /// Diagonal coefficient b_k.
    pub fn b(&self, k: i64) -> Result<f64> {
        self.check_index(k)?;
        let mut cache = self.cache.lock().expect("coefficient cache poisoned");
        if k >= 0 {
            Self::fill(&mut cache.b_pos, &*self.b_fn, k as usize + 1, |s| s as i64, Self::validate_b)?;
            Ok(cache.b_pos[k as usize])
        } else {
            let slot = (-1 - k) as usize;
            Self::fill(&mut cache.b_neg, &*self.b_fn, slot + 1, |s| -1 - s as i64, Self::validate_b)?;
            Ok(cache.b_neg[slot])
        }
    }

    /// Copies of a_0..a_{len−1} and b_0..b_{len−1} for hot loops.
    ///
    /// One lock, one validation pass, then the caller iterates lock-free.
    pub fn prefixes(&self, len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut cache = self.cache.lock().expect("coefficient cache poisoned");
        Self::fill(&mut cache.a_pos, &*self.a_fn, len, |s| s as i64, Self::validate_a)?;
        Self::fill(&mut cache.b_pos, &*self.b_fn, len, |s| s as i64, Self::validate_b)?;
        Ok((cache.a_pos[..len].to_vec(), cache.b_pos[..len].to_vec()))
    }
}

/// Which of the two canonical recurrence solutions a sequence holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SequenceKind {
    /// p_0 = 1; orthonormal polynomials.
    OrthonormalP,
    /// r_0 = 0, r_1 = 1/a_0; associated polynomials.
    AssociatedR,
}

/// Values p_0(x)..p_N(x) (or r) stored as mantissa · exp(ln_scale).
///
/// The recurrence renormalizes every [`RESCALE_INTERVAL`] steps, so entries
/// within a block share an exponent and the mantissas stay moderate even
/// when the underlying polynomials grow geometrically.
#[derive(Clone, Debug)]
pub struct PolynomialSequence {
    kind: SequenceKind,
    x: Complex64,
    mantissas: Vec<Complex64>,
    ln_scales: Vec<f64>,
}

impl PolynomialSequence {
    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn argument(&self) -> Complex64 {
        self.x
    }

    /// Highest index stored.
    pub fn max_index(&self) -> usize {
        self.mantissas.len() - 1
    }

    /// Plain value; may overflow to infinity for indices deep into a
    /// growing regime. Use [`PolynomialSequence::scaled`] there instead.
    pub fn value(&self, k: usize) -> Complex64 {
        self.mantissas[k] * self.ln_scales[k].exp()
    }

    /// Overflow-safe representation of the k-th value.
    pub fn scaled(&self, k: usize) -> ScaledValue {
        ScaledValue::new(self.mantissas[k], Complex64::new(self.ln_scales[k], 0.0))
    }
}

fn eval_sequence(
    coeffs: &JacobiCoefficients,
    x: Complex64,
    n: usize,
    kind: SequenceKind,
) -> Result<PolynomialSequence> {
    let mut mantissas = Vec::with_capacity(n + 1);
    let mut ln_scales = Vec::with_capacity(n + 1);
    let mut scale = 0.0f64;
    let (a, b) = coeffs.prefixes(n)?;

    let (v0, v1) = match kind {
        SequenceKind::OrthonormalP => {
            let p0 = Complex64::new(1.0, 0.0);
            if n == 0 {
                (p0, None)
            } else {
                (p0, Some((x - b[0]) / a[0]))
            }
        }
        SequenceKind::AssociatedR => {
            let r0 = Complex64::new(0.0, 0.0);
            if n == 0 {
                (r0, None)
            } else {
                (r0, Some(Complex64::new(1.0 / a[0], 0.0)))
            }
        }
    };
    mantissas.push(v0);
    ln_scales.push(scale);
    let Some(v1) = v1 else {
        return Ok(PolynomialSequence {
            kind,
            x,
            mantissas,
            ln_scales,
        });
    };
    mantissas.push(v1);
    ln_scales.push(scale);

    let mut prev = v0;
    let mut cur = v1;
    for k in 1..n {
        let next = ((x - b[k]) * cur - a[k - 1] * prev) / a[k];
        prev = cur;
        cur = next;
        if k % RESCALE_INTERVAL == 0 {
            let m = prev.norm().max(cur.norm());
            if m > 0.0 && m.is_finite() {
                prev /= m;
                cur /= m;
                scale += m.ln();
            }
        }
        mantissas.push(cur);
        ln_scales.push(scale);
    }
    Ok(PolynomialSequence {
        kind,
        x,
        mantissas,
        ln_scales,
    })
}

/// Orthonormal polynomials p_0(x)..p_N(x).
pub fn eval_p(coeffs: &JacobiCoefficients, x: Complex64, n: usize) -> Result<PolynomialSequence> {
    eval_sequence(coeffs, x, n, SequenceKind::OrthonormalP)
}

/// Associated polynomials r_0(x)..r_N(x).
pub fn eval_r(coeffs: &JacobiCoefficients, x: Complex64, n: usize) -> Result<PolynomialSequence> {
    eval_sequence(coeffs, x, n, SequenceKind::AssociatedR)
}

/// Wronskian (Casorati determinant) [u, v]_k = a_k (u_{k+1} v_k − u_k v_{k+1}),
/// together with the natural log of the magnitude of its constituent terms.
///
/// For two solutions of the same recurrence at the same argument the value is
/// independent of k. The returned scale is the yardstick for "zero": once the
/// products a_k·u·v grow past 1/ε of the Wronskian, the difference is pure
/// cancellation and only the scale-relative statement survives in `f64`.
pub fn wronskian_with_scale(
    coeffs: &JacobiCoefficients,
    u: &PolynomialSequence,
    v: &PolynomialSequence,
    k: usize,
) -> Result<(Complex64, f64)> {
    if k + 1 > u.max_index() || k + 1 > v.max_index() {
        return Err(Error::Index(k as i64 + 1));
    }
    let a = coeffs.a(k as i64)?;
    let (u0, u1) = (u.scaled(k), u.scaled(k + 1));
    let (v0, v1) = (v.scaled(k), v.scaled(k + 1));
    let e1 = u1.ln_scale.re + v0.ln_scale.re;
    let e2 = u0.ln_scale.re + v1.ln_scale.re;
    let emax = e1.max(e2);
    let diff = u1.mantissa * v0.mantissa * (e1 - emax).exp()
        - u0.mantissa * v1.mantissa * (e2 - emax).exp();
    let term_mag = (u1.mantissa * v0.mantissa).norm() * (e1 - emax).exp()
        + (u0.mantissa * v1.mantissa).norm() * (e2 - emax).exp();
    let value = a * diff * emax.exp();
    let ln_scale = a.ln() + term_mag.max(f64::MIN_POSITIVE).ln() + emax;
    Ok((value, ln_scale))
}

/// Wronskian value alone; see [`wronskian_with_scale`].
pub fn wronskian(
    coeffs: &JacobiCoefficients,
    u: &PolynomialSequence,
    v: &PolynomialSequence,
    k: usize,
) -> Result<Complex64> {
    Ok(wronskian_with_scale(coeffs, u, v, k)?.0)
}

/// Christoffel–Darboux kernel Σ_{k<n} p_k(x) p_k(y).
///
/// Evaluated through the closed form
/// a_{n−1}(p_n(x)p_{n−1}(y) − p_{n−1}(x)p_n(y))/(x − y); for |x − y| below
/// [`CD_CONFLUENT_THRESHOLD`] the divided difference loses all digits and the
/// confluent form with a centered finite-difference derivative is used.
pub fn cd_kernel(
    coeffs: &JacobiCoefficients,
    x: Complex64,
    y: Complex64,
    n: usize,
) -> Result<Complex64> {
    assert!(n >= 1, "cd_kernel needs at least one term");
    let a = coeffs.a(n as i64 - 1)?;
    if (x - y).norm() >= CD_CONFLUENT_THRESHOLD {
        let px = eval_p(coeffs, x, n)?;
        let py = eval_p(coeffs, y, n)?;
        let num = px.value(n) * py.value(n - 1) - px.value(n - 1) * py.value(n);
        return Ok(a * num / (x - y));
    }
    // Confluent form a_{n-1}(p_n'(x) p_{n-1}(x) − p_{n-1}'(x) p_n(x)).
    let h = CD_DERIVATIVE_STEP * x.norm().max(1.0);
    let plus = eval_p(coeffs, x + h, n)?;
    let minus = eval_p(coeffs, x - h, n)?;
    let at = eval_p(coeffs, x, n)?;
    let dpn = (plus.value(n) - minus.value(n)) / (2.0 * h);
    let dpn1 = (plus.value(n - 1) - minus.value(n - 1)) / (2.0 * h);
    Ok(a * (dpn * at.value(n - 1) - dpn1 * at.value(n)))
}

/// Finite section J_N: the leading (N+1)×(N+1) block of a half-line operator
/// (or any contiguous window of a full-line one, see
/// [`crate::doubly::truncate_doubly`]).
#[derive(Clone, Debug)]
pub struct TruncatedMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl TruncatedMatrix {
    /// Dimension of the section.
    pub fn size(&self) -> usize {
        self.diag.len()
    }
}

/// Leading principal section with diag b_0..b_N and offdiag a_0..a_{N−1}.
pub fn truncate(coeffs: &JacobiCoefficients, n: usize) -> Result<TruncatedMatrix> {
    let (offdiag, mut diag) = coeffs.prefixes(n)?;
    diag.push(coeffs.b(n as i64)?);
    Ok(TruncatedMatrix { diag, offdiag })
}

/// Eigenvalues of a symmetric tridiagonal matrix with the squared first
/// components of its unit eigenvectors, sorted ascending.
///
/// Implicit-shift QL iteration with Wilkinson shifts; instead of accumulating
/// full eigenvectors, the plane rotations are applied to the first coordinate
/// row only, which is exactly the data a Gaussian quadrature rule needs (the
/// squared first components are the quadrature weights).
///
/// # Errors
///
/// [`Error::NoConvergence`] if any eigenvalue fails to settle within
/// [`EIG_MAX_ITER`] sweeps.
pub fn eigen(mat: &TruncatedMatrix) -> Result<Vec<(f64, f64)>> {
    let n = mat.size();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut d = mat.diag.clone();
    let mut e = mat.offdiag.clone();
    // The implicit shift survives the d[m] - shift subtraction only when the
    // far end of the sweep is not vastly heavier than the deflation end, so
    // a bottom-heavy graded matrix is reversed and the first-coordinate row
    // tracked from its other end.
    let reversed = n >= 2 && d[n - 1].abs() + e[n - 2].abs() > d[0].abs() + e[0].abs();
    if reversed {
        d.reverse();
        e.reverse();
    }
    let mut z = vec![0.0f64; n];
    z[if reversed { n - 1 } else { 0 }] = 1.0;
    e.push(0.0);

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            // Find the first negligible off-diagonal at or beyond l.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= EIG_EPS * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > EIG_MAX_ITER {
                return Err(Error::NoConvergence {
                    terms: EIG_MAX_ITER,
                    context: "tridiagonal QL iteration",
                });
            }
            // Wilkinson shift from the leading 2×2 of the active block.
            let g0 = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r0 = g0.hypot(1.0);
            let mut g = d[m] - d[l] + e[l] / (g0 + copysign_nonzero(r0, g0));
            let mut r;
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Recover from underflow by dropping a negligible rotation.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // Rotate the first-coordinate row.
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).expect("eigenvalue NaN"));
    Ok(pairs)
}

fn copysign_nonzero(magnitude: f64, sign_of: f64) -> f64 {
    if sign_of >= 0.0 {
        magnitude.abs()
    } else {
        -magnitude.abs()
    }
}

/// The n real simple zeros of p_n, via the eigenvalues of the (n−1) section.
pub fn zeros_of_p(coeffs: &JacobiCoefficients, n: usize) -> Result<Vec<f64>> {
    assert!(n >= 1, "p_0 has no zeros");
    let section = truncate(coeffs, n - 1)?;
    Ok(eigen(&section)?.into_iter().map(|(x, _)| x).collect())
}

/// Power moments m_0..m_{m_max} of the spectral measure, m_j = ⟨Jʲe_0, e_0⟩.
///
/// Banded application of J to e_0; exact up to rounding, no truncation error,
/// since Jʲe_0 is supported on the first j+1 coordinates.
pub fn moments(coeffs: &JacobiCoefficients, m_max: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(m_max + 1);
    out.push(1.0);
    if m_max == 0 {
        return Ok(out);
    }
    let (a, b) = coeffs.prefixes(m_max)?;
    let mut v = vec![0.0f64; m_max + 2];
    v[0] = 1.0;
    let mut support = 0usize; // highest possibly non-zero index
    for _ in 1..=m_max {
        let mut next = vec![0.0f64; m_max + 2];
        for k in 0..=support {
            let mut acc = b[k] * v[k] + a[k] * v[k + 1];
            if k > 0 {
                acc += a[k - 1] * v[k - 1];
            }
            next[k] = acc;
        }
        next[support + 1] = a[support] * v[support];
        support += 1;
        v = next;
        out.push(v[0]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chebyshev() -> JacobiCoefficients {
        JacobiCoefficients::half_line("chebyshev", |_| 0.5, |_| 0.0).with_norm_bound(1.0)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coefficients_are_memoized_and_validated() {
        let coeffs = chebyshev();
        assert_eq!(coeffs.a(3).unwrap(), 0.5);
        assert_eq!(coeffs.b(3).unwrap(), 0.0);
        assert!(matches!(coeffs.a(-1), Err(Error::Index(-1))));
        let bad = JacobiCoefficients::half_line("bad", |k| if k == 2 { -1.0 } else { 1.0 }, |_| 0.0);
        assert!(bad.a(0).is_ok());
        assert!(matches!(
            bad.a(2),
            Err(Error::Coefficient { index: 2, .. })
        ));
    }

    #[test]
    fn coefficient_cache_is_thread_safe() {
        let coeffs = std::sync::Arc::new(chebyshev());
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let coeffs = coeffs.clone();
                std::thread::spawn(move || {
                    for k in 0..100 {
                        assert_eq!(coeffs.a(k).unwrap(), 0.5);
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn p_sequence_chebyshev_closed_forms() {
        let coeffs = chebyshev();
        // At x = 1 the orthonormal second-kind family gives p_k = k+1.
        let p = eval_p(&coeffs, c(1.0, 0.0), 5).unwrap();
        for k in 0..=5 {
            assert_relative_eq!(p.value(k).re, (k + 1) as f64, epsilon = 1e-12);
        }
        // At x = 0 it alternates 1, 0, −1, 0, 1, …
        let p = eval_p(&coeffs, c(0.0, 0.0), 4).unwrap();
        let expected = [1.0, 0.0, -1.0, 0.0, 1.0];
        for (k, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(p.value(k).re, e, epsilon = 1e-14);
        }
        // Single-point evaluation stays at the initial condition.
        let p = eval_p(&coeffs, c(0.73, 0.0), 0).unwrap();
        assert_eq!(p.max_index(), 0);
        assert_eq!(p.value(0), c(1.0, 0.0));
    }

    #[test]
    fn r_sequence_initial_data_and_hand_values() {
        let coeffs = chebyshev();
        let r = eval_r(&coeffs, c(0.3, 0.0), 0).unwrap();
        assert_eq!(r.value(0), c(0.0, 0.0));
        let r = eval_r(&coeffs, c(0.3, 0.0), 4).unwrap();
        let expected = [0.0, 2.0, 1.2, -1.28, -1.968];
        for (k, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(r.value(k).re, e, epsilon = 1e-13);
        }
        // p at the same point, checked against U_4(0.3) = 0.0496.
        let p = eval_p(&coeffs, c(0.3, 0.0), 4).unwrap();
        assert_relative_eq!(p.value(4).re, 0.0496, epsilon = 1e-12);
    }

    #[test]
    fn recurrence_residual_random_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1ac0_b100);
        let (av, bv): (Vec<f64>, Vec<f64>) = (0..260)
            .map(|_| (rng.gen_range(0.3..0.8), rng.gen_range(-0.2..0.2)))
            .unzip();
        let coeffs = JacobiCoefficients::half_line(
            "random bounded",
            move |k| av[k as usize],
            move |k| bv[k as usize],
        );
        for _ in 0..5 {
            let x = c(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0));
            for (seq, kind) in [
                (eval_p(&coeffs, x, 250).unwrap(), "p"),
                (eval_r(&coeffs, x, 250).unwrap(), "r"),
            ] {
                for k in 1..250usize {
                    let ki = k as i64;
                    let lhs = coeffs.a(ki).unwrap() * seq.value(k + 1)
                        + coeffs.b(ki).unwrap() * seq.value(k)
                        + coeffs.a(ki - 1).unwrap() * seq.value(k - 1);
                    let res = (lhs - x * seq.value(k)).norm();
                    let scale = seq
                        .value(k - 1)
                        .norm()
                        .max(seq.value(k).norm())
                        .max(seq.value(k + 1).norm());
                    assert!(
                        res <= 1e-12 * scale.max(1e-300),
                        "{kind} residual {res} at k={k}, scale {scale}"
                    );
                }
            }
        }
    }

    #[test]
    fn wronskian_of_p_and_r_is_minus_one() {
        let coeffs = chebyshev();
        let x = c(0.37, 0.81);
        let p = eval_p(&coeffs, x, 30).unwrap();
        let r = eval_r(&coeffs, x, 30).unwrap();
        for k in 0..6 {
            let w = wronskian(&coeffs, &p, &r, k).unwrap();
            assert_relative_eq!(w.re, -1.0, epsilon = 1e-11);
            assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-11);
        }
        // Deeper in, the cancellation noise scales with the term magnitude.
        for k in 6..25 {
            let (w, ln_scale) = wronskian_with_scale(&coeffs, &p, &r, k).unwrap();
            let tol = 1e-12 * ln_scale.exp().max(1.0);
            assert!((w + c(1.0, 0.0)).norm() <= tol, "k={k}: {w}");
        }
        // Antisymmetry and the self-Wronskian.
        let w_pp = wronskian(&coeffs, &p, &p, 7).unwrap();
        assert_abs_diff_eq!(w_pp.norm(), 0.0, epsilon = 1e-12);
        let w_rp = wronskian(&coeffs, &r, &p, 7).unwrap();
        assert_relative_eq!(w_rp.re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn wronskian_scale_relative_constancy_deep_into_growth() {
        // Off the spectrum both sequences grow geometrically; the Wronskian
        // stays −1 relative to the collapsing product scale.
        let coeffs = chebyshev();
        let x = c(1.9, 0.3);
        let p = eval_p(&coeffs, x, 201).unwrap();
        let r = eval_r(&coeffs, x, 201).unwrap();
        for k in [0usize, 50, 120, 200] {
            let (w, ln_scale) = wronskian_with_scale(&coeffs, &p, &r, k).unwrap();
            let scale = ln_scale.exp().max(1.0);
            assert!(
                (w + c(1.0, 0.0)).norm() <= 1e-9 * scale,
                "k={k}: wronskian {w} deviates beyond 1e-9 of scale {scale}"
            );
        }
    }

    #[test]
    fn wronskian_is_bilinear() {
        let coeffs = chebyshev();
        let x = c(0.2, -0.4);
        let p = eval_p(&coeffs, x, 12).unwrap();
        let r = eval_r(&coeffs, x, 12).unwrap();
        let w = wronskian(&coeffs, &p, &r, 5).unwrap();
        // Scale both sequences by constants via fresh scaled copies.
        let mut p2 = p.clone();
        let mut r2 = r.clone();
        for m in p2.mantissas.iter_mut() {
            *m *= 2.5;
        }
        for m in r2.mantissas.iter_mut() {
            *m *= -1.5;
        }
        let w2 = wronskian(&coeffs, &p2, &r2, 5).unwrap();
        assert_relative_eq!(w2.re, (2.5 * -1.5) * w.re, epsilon = 1e-12);
    }

    #[test]
    fn cd_kernel_matches_direct_sum() {
        let coeffs = chebyshev();
        let mut rng = ChaCha8Rng::seed_from_u64(0x1ac0_b101);
        for _ in 0..10 {
            let x = c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.5..0.5));
            let y = c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.5..0.5));
            if (x - y).norm() < 1e-6 {
                continue;
            }
            for n in [1usize, 7, 40, 100] {
                let k = cd_kernel(&coeffs, x, y, n).unwrap();
                let px = eval_p(&coeffs, x, n - 1).unwrap();
                let py = eval_p(&coeffs, y, n - 1).unwrap();
                let direct: Complex64 = (0..n).map(|j| px.value(j) * py.value(j)).sum();
                assert_relative_eq!(k.re, direct.re, epsilon = 1e-10 * direct.norm().max(1.0));
                assert_relative_eq!(k.im, direct.im, epsilon = 1e-10 * direct.norm().max(1.0));
            }
        }
    }

    #[test]
    fn cd_kernel_confluent_form() {
        let coeffs = chebyshev();
        // Finite-difference derivative noise limits the confluent form to
        // roughly ε/h relative accuracy.
        assert_relative_eq!(
            cd_kernel(&coeffs, c(0.41, 0.0), c(0.41, 0.0), 1)
                .unwrap()
                .re,
            1.0,
            epsilon = 1e-9
        );
        let x = c(0.41, 0.0);
        for n in [5usize, 25] {
            let k = cd_kernel(&coeffs, x, x, n).unwrap();
            let p = eval_p(&coeffs, x, n - 1).unwrap();
            let direct: Complex64 = (0..n).map(|j| p.value(j) * p.value(j)).sum();
            assert_relative_eq!(k.re, direct.re, epsilon = 1e-8 * direct.norm());
        }
    }

    #[test]
    fn truncate_copies_coefficients() {
        let coeffs = chebyshev();
        let m = truncate(&coeffs, 0).unwrap();
        assert_eq!(m.diag, vec![0.0]);
        assert!(m.offdiag.is_empty());
        let m = truncate(&coeffs, 2).unwrap();
        assert_eq!(m.diag, vec![0.0, 0.0, 0.0]);
        assert_eq!(m.offdiag, vec![0.5, 0.5]);
    }

    #[test]
    fn eigen_small_cases() {
        let one = eigen(&TruncatedMatrix {
            diag: vec![0.7],
            offdiag: vec![],
        })
        .unwrap();
        assert_eq!(one.len(), 1);
        assert_relative_eq!(one[0].0, 0.7);
        assert_relative_eq!(one[0].1, 1.0);

        // 2×2 with zero diagonal and unit coupling: eigenvalues ±1, and the
        // first components of both unit eigenvectors are 1/√2.
        let two = eigen(&TruncatedMatrix {
            diag: vec![0.0, 0.0],
            offdiag: vec![1.0],
        })
        .unwrap();
        assert_relative_eq!(two[0].0, -1.0, epsilon = 1e-14);
        assert_relative_eq!(two[1].0, 1.0, epsilon = 1e-14);
        assert_relative_eq!(two[0].1, 0.5, epsilon = 1e-14);
        assert_relative_eq!(two[1].1, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn eigen_chebyshev_nodes_and_weights() {
        // zeros of U_{N+1} at cos(jπ/(N+2)) with weights 2 sin²(jπ/(N+2))/(N+2).
        let coeffs = chebyshev();
        let n = 7usize;
        let section = truncate(&coeffs, n).unwrap();
        let pairs = eigen(&section).unwrap();
        let m = n + 2;
        for (idx, (node, weight)) in pairs.iter().enumerate() {
            let j = (n + 1 - idx) as f64; // descending j gives ascending cos
            let theta = j * std::f64::consts::PI / m as f64;
            assert_relative_eq!(*node, theta.cos(), epsilon = 1e-13, max_relative = 1e-13);
            assert_relative_eq!(
                *weight,
                2.0 / m as f64 * theta.sin().powi(2),
                epsilon = 1e-13
            );
        }
        let total: f64 = pairs.iter().map(|(_, w)| w).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zeros_of_p_closed_form_and_interlacing() {
        let coeffs = chebyshev();
        let z1 = zeros_of_p(&coeffs, 1).unwrap();
        assert_abs_diff_eq!(z1[0], 0.0, epsilon = 1e-15);
        let z3 = zeros_of_p(&coeffs, 3).unwrap();
        let expected = [-(0.5f64).sqrt(), 0.0, (0.5f64).sqrt()];
        for (z, e) in z3.iter().zip(expected) {
            assert_abs_diff_eq!(*z, e, epsilon = 1e-13);
        }
        for n in [5usize, 12] {
            let zn = zeros_of_p(&coeffs, n).unwrap();
            let zn1 = zeros_of_p(&coeffs, n + 1).unwrap();
            // Simplicity and strict interlacing.
            for w in zn.windows(2) {
                assert!(w[1] - w[0] > 1e-8);
            }
            for (j, z) in zn.iter().enumerate() {
                assert!(zn1[j] < *z && *z < zn1[j + 1], "interlacing fails at {j}");
            }
        }
    }

    #[test]
    fn moments_chebyshev_catalan_values() {
        let coeffs = chebyshev();
        let m = moments(&coeffs, 10).unwrap();
        assert_eq!(m[0], 1.0);
        let catalan_over_4j = [1.0, 0.25, 0.125, 0.078125, 0.0546875, 0.041015625];
        for (j, expected) in catalan_over_4j.iter().enumerate() {
            assert_relative_eq!(m[2 * j], expected, epsilon = 1e-14);
        }
        for j in 0..5 {
            assert_abs_diff_eq!(m[2 * j + 1], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn quadrature_reproduces_moments() {
        let coeffs = chebyshev();
        let n = 10usize;
        let pairs = eigen(&truncate(&coeffs, n).unwrap()).unwrap();
        let ms = moments(&coeffs, 2 * n + 1).unwrap();
        for (m, expected) in ms.iter().enumerate() {
            let integral: f64 = pairs.iter().map(|(x, w)| w * x.powi(m as i32)).sum();
            assert_abs_diff_eq!(integral, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenvalues_respect_norm_bound() {
        let coeffs = chebyshev();
        let pairs = eigen(&truncate(&coeffs, 30).unwrap()).unwrap();
        for (x, _) in pairs {
            assert!(x.abs() <= 1.0 + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn wronskian_constant_for_random_arguments(
            re in -2.0f64..2.0,
            im in 0.05f64..1.5,
        ) {
            let coeffs = chebyshev();
            let x = Complex64::new(re, im);
            let p = eval_p(&coeffs, x, 41).unwrap();
            let r = eval_r(&coeffs, x, 41).unwrap();
            let w0 = wronskian(&coeffs, &p, &r, 0).unwrap();
            for k in [10usize, 25, 40] {
                let (wk, ln_scale) = wronskian_with_scale(&coeffs, &p, &r, k).unwrap();
                let tol = 1e-10 * ln_scale.exp().max(1.0);
                prop_assert!((wk - w0).norm() <= tol);
            }
        }
    }
}
