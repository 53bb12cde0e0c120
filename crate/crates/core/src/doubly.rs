//! Doubly infinite Jacobi operators.
//!
//! An operator on ℓ²(ℤ) splits into two half-line operators by cutting the
//! line between indices −1 and 0; deficiency indices of the whole are the
//! componentwise sums of the two sides, following Masson and Repka. Solutions
//! of the full-line recurrence live in two-dimensional spaces distinguished
//! by which end they are square-summable at, and a pair summable at opposite
//! ends builds the resolvent through the Green kernel
//! G_{k,l} = Φ_{min}·φ_{max}/[φ,Φ].

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jacobi::{IndexSet, JacobiCoefficients, TruncatedMatrix};
use crate::spectral::{classify, ClassificationReport, ClassifyOptions, GreenKernelValue, Verdict};
use crate::specialfn::ScaledValue;

/// Wronskians smaller than this fraction of their constituent product scale
/// count as zero; the Green kernel formula is invalid there.
const DEGENERATE_WRONSKIAN_REL: f64 = 1e-12;

/// Which end of ℤ a solution is square-summable at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SummableEnd {
    Plus,
    Minus,
    Both,
    Neither,
}

impl SummableEnd {
    fn at_plus(self) -> bool {
        matches!(self, SummableEnd::Plus | SummableEnd::Both)
    }

    fn at_minus(self) -> bool {
        matches!(self, SummableEnd::Minus | SummableEnd::Both)
    }
}

type SolutionFn = dyn Fn(i64) -> Result<ScaledValue> + Send + Sync;

/// A solution of the full-line recurrence at a fixed spectral parameter,
/// evaluated lazily and cached.
///
/// Values are stored in mantissa/log-scale form, since the interesting
/// solutions grow or decay beyond `f64` range within a hundred steps. The
/// cache is mutex-guarded, so concurrent reads are safe.
pub struct SolutionVector {
    label: String,
    z: Complex64,
    summable_end: SummableEnd,
    eval: Arc<SolutionFn>,
    cache: Mutex<HashMap<i64, ScaledValue>>,
}

impl std::fmt::Debug for SolutionVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionVector")
            .field("label", &self.label)
            .field("z", &self.z)
            .field("summable_end", &self.summable_end)
            .finish()
    }
}

impl SolutionVector {
    pub fn new<F>(label: impl Into<String>, z: Complex64, summable_end: SummableEnd, eval: F) -> Self
    where
        F: Fn(i64) -> Result<ScaledValue> + Send + Sync + 'static,
    {
        SolutionVector {
            label: label.into(),
            z,
            summable_end,
            eval: Arc::new(eval),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn summable_end(&self) -> SummableEnd {
        self.summable_end
    }

    /// Value in mantissa/exponent form, evaluated on first access.
    pub fn scaled(&self, k: i64) -> Result<ScaledValue> {
        if let Some(v) = self.cache.lock().expect("solution cache poisoned").get(&k) {
            return Ok(*v);
        }
        let v = (self.eval)(k)?;
        self.cache
            .lock()
            .expect("solution cache poisoned")
            .insert(k, v);
        Ok(v)
    }

    /// Collapsed value; overflows to infinity where the solution genuinely
    /// exceeds `f64` range.
    pub fn value(&self, k: i64) -> Result<Complex64> {
        Ok(self.scaled(k)?.value())
    }

    /// A copy rescaled by a constant factor; the cache is not shared.
    pub fn rescaled(&self, factor: Complex64) -> SolutionVector {
        let inner = self.eval.clone();
        SolutionVector::new(
            format!("{} (rescaled)", self.label),
            self.z,
            self.summable_end,
            move |k| {
                let v = inner(k)?;
                Ok(ScaledValue::new(v.mantissa * factor, v.ln_scale))
            },
        )
    }
}

/// Deficiency bookkeeping for a doubly infinite operator: per-side indices,
/// their sum, and the classification evidence behind each side. `None`
/// encodes an undecided side (and hence an undecided total).
#[derive(Debug)]
pub struct DeficiencyReport {
    pub plus_indices: Option<(u32, u32)>,
    pub minus_indices: Option<(u32, u32)>,
    pub total: Option<(u32, u32)>,
    pub evidence: (ClassificationReport, ClassificationReport),
}

/// Splits a full-line operator at the origin into half-line operators
/// J⁺: (a_k, b_k)_{k≥0} and J⁻: (a⁻_k, b⁻_k) = (a_{−k−2}, b_{−k−1}).
///
/// # Panics
///
/// If `l` is not a full-line family.
pub fn split(l: &JacobiCoefficients) -> (JacobiCoefficients, JacobiCoefficients) {
    assert_eq!(
        l.index_set(),
        IndexSet::FullLine,
        "split needs a full-line operator"
    );
    let (a, b) = l.share_closures();
    let plus = JacobiCoefficients::half_line(
        format!("{} (plus side)", l.label()),
        {
            let a = a.clone();
            move |k| a(k)
        },
        {
            let b = b.clone();
            move |k| b(k)
        },
    );
    let minus = JacobiCoefficients::half_line(
        format!("{} (minus side)", l.label()),
        move |k| a(-k - 2),
        move |k| b(-k - 1),
    );
    (plus, minus)
}

fn side_indices(report: &ClassificationReport) -> Option<(u32, u32)> {
    match report.verdict {
        Verdict::Determinate => Some((0, 0)),
        Verdict::Indeterminate => Some((1, 1)),
        Verdict::Undecided => None,
    }
}

/// Classifies both halves of a full-line operator and sums their deficiency
/// indices. An undecided side leaves the total undecided; the per-side
/// classification reports ride along as evidence either way.
pub fn deficiency(l: &JacobiCoefficients) -> Result<DeficiencyReport> {
    let (plus, minus) = split(l);
    let opts = ClassifyOptions::default();
    let plus_report = classify(&plus, &opts)?;
    let minus_report = classify(&minus, &opts)?;
    let plus_indices = side_indices(&plus_report);
    let minus_indices = side_indices(&minus_report);
    let total = match (plus_indices, minus_indices) {
        (Some(p), Some(m)) => Some((p.0 + m.0, p.1 + m.1)),
        _ => None,
    };
    Ok(DeficiencyReport {
        plus_indices,
        minus_indices,
        total,
        evidence: (plus_report, minus_report),
    })
}

/// Wronskian [u, v]_k = a_k(u_{k+1}v_k − u_k v_{k+1}) together with the log
/// of its constituent product scale, for solutions on the full line.
fn full_wronskian_with_scale(
    l: &JacobiCoefficients,
    u: &SolutionVector,
    v: &SolutionVector,
    k: i64,
) -> Result<(Complex64, f64)> {
    let a = l.a(k)?;
    let (u0, u1) = (u.scaled(k)?, u.scaled(k + 1)?);
    let (v0, v1) = (v.scaled(k)?, v.scaled(k + 1)?);
    let e1 = u1.ln_scale.re + v0.ln_scale.re;
    let e2 = u0.ln_scale.re + v1.ln_scale.re;
    let emax = e1.max(e2);
    let phase = |sv: ScaledValue| sv.mantissa * Complex64::new(0.0, sv.ln_scale.im).exp();
    let t1 = phase(u1) * phase(v0) * (e1 - emax).exp();
    let t2 = phase(u0) * phase(v1) * (e2 - emax).exp();
    let value = a * (t1 - t2) * emax.exp();
    let term_mag = t1.norm() + t2.norm();
    let ln_scale = a.ln() + term_mag.max(f64::MIN_POSITIVE).ln() + emax;
    Ok((value, ln_scale))
}

/// Wronskian [u, v]_k of two full-line solutions; constant in k when both
/// solve the recurrence at the same z.
///
/// # Errors
///
/// Propagates coefficient and solution evaluation failures.
pub fn full_wronskian(
    l: &JacobiCoefficients,
    u: &SolutionVector,
    v: &SolutionVector,
    k: i64,
) -> Result<Complex64> {
    Ok(full_wronskian_with_scale(l, u, v, k)?.0)
}

/// Green kernel G_{k,l}(z) = Φ_{min(k,l)}·φ_{max(k,l)}/[φ, Φ] of a doubly
/// infinite operator, from a solution φ summable at +∞ and Φ summable at −∞.
///
/// # Errors
///
/// [`Error::Domain`] when the solutions' spectral parameters differ or their
/// summable ends do not cover ±∞; [`Error::DegenerateWronskian`] when
/// |[φ, Φ]| sits below [`DEGENERATE_WRONSKIAN_REL`] of its product scale,
/// which happens exactly at spectrum points.
pub fn green_doubly(
    l: &JacobiCoefficients,
    phi: &SolutionVector,
    phi_cap: &SolutionVector,
    k: i64,
    l_idx: i64,
) -> Result<GreenKernelValue> {
    if phi.z() != phi_cap.z() {
        return Err(Error::Domain(
            "Green kernel needs both solutions at the same z".into(),
        ));
    }
    if !phi.summable_end().at_plus() {
        return Err(Error::Domain(
            "phi must be square-summable at +infinity".into(),
        ));
    }
    if !phi_cap.summable_end().at_minus() {
        return Err(Error::Domain(
            "Phi must be square-summable at -infinity".into(),
        ));
    }
    let lo = k.min(l_idx);
    let hi = k.max(l_idx);
    let (w, ln_w_scale) = full_wronskian_with_scale(l, phi, phi_cap, lo)?;
    let threshold = DEGENERATE_WRONSKIAN_REL * ln_w_scale.exp();
    if w.norm() < threshold {
        return Err(Error::DegenerateWronskian {
            value: w.norm(),
            threshold,
        });
    }
    let low = phi_cap.scaled(lo)?;
    let high = phi.scaled(hi)?;
    let ln = low.ln_scale + high.ln_scale;
    let phase = |sv: ScaledValue| sv.mantissa * Complex64::new(0.0, sv.ln_scale.im).exp();
    let value = phase(low) * phase(high) / w * (ln.re).exp();
    Ok(GreenKernelValue {
        k,
        l: l_idx,
        z: phi.z(),
        value,
    })
}

/// Finite window of a full-line operator covering indices −M..N, as a
/// symmetric tridiagonal of size M+N+1.
pub fn truncate_doubly(l: &JacobiCoefficients, m: usize, n: usize) -> Result<TruncatedMatrix> {
    let lo = -(m as i64);
    let hi = n as i64;
    let mut diag = Vec::with_capacity(m + n + 1);
    let mut offdiag = Vec::with_capacity(m + n);
    for k in lo..=hi {
        diag.push(l.b(k)?);
    }
    for k in lo..hi {
        offdiag.push(l.a(k)?);
    }
    Ok(TruncatedMatrix { diag, offdiag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::eigen;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant_full_line() -> JacobiCoefficients {
        JacobiCoefficients::full_line("constant", |_| 0.5, |_| 0.0).with_norm_bound(1.0)
    }

    /// Geometric solution ζ^k of the constant-coefficient recurrence at
    /// z = (ζ + 1/ζ)/2, built in log-scale form so deep indices stay finite.
    fn geometric_solution(label: &str, zeta: Complex64, end: SummableEnd) -> SolutionVector {
        let z = 0.5 * (zeta + zeta.inv());
        let ln_zeta = zeta.ln();
        SolutionVector::new(label, z, end, move |k| {
            let ln = ln_zeta * k as f64;
            Ok(ScaledValue::new(
                Complex64::new(1.0, 0.0),
                ln,
            ))
        })
    }

    #[test]
    fn split_reads_the_documented_indices() {
        let l = JacobiCoefficients::full_line("indexed", |k| 1000.0 + k as f64, |k| k as f64);
        let (plus, minus) = split(&l);
        // Round trip on the plus side.
        for k in 0..5 {
            assert_eq!(plus.a(k).unwrap(), l.a(k).unwrap());
            assert_eq!(plus.b(k).unwrap(), l.b(k).unwrap());
        }
        // Minus side reads a_{-k-2}, b_{-k-1}.
        assert_eq!(minus.a(0).unwrap(), 998.0);
        assert_eq!(minus.a(3).unwrap(), 995.0);
        assert_eq!(minus.b(0).unwrap(), -1.0);
        assert_eq!(minus.b(4).unwrap(), -5.0);
        // Half-line index discipline carries over.
        assert!(minus.a(-1).is_err());
    }

    #[test]
    fn split_of_constant_model_gives_two_constant_halves() {
        let (plus, minus) = split(&constant_full_line());
        for k in 0..10 {
            assert_eq!(plus.a(k).unwrap(), 0.5);
            assert_eq!(minus.a(k).unwrap(), 0.5);
            assert_eq!(plus.b(k).unwrap(), 0.0);
            assert_eq!(minus.b(k).unwrap(), 0.0);
        }
    }

    #[test]
    #[should_panic(expected = "full-line")]
    fn split_rejects_half_line_input() {
        let half = JacobiCoefficients::half_line("half", |_| 0.5, |_| 0.0);
        let _ = split(&half);
    }

    #[test]
    fn deficiency_of_bounded_operator_is_zero_zero() {
        let report = deficiency(&constant_full_line()).unwrap();
        assert_eq!(report.plus_indices, Some((0, 0)));
        assert_eq!(report.minus_indices, Some((0, 0)));
        assert_eq!(report.total, Some((0, 0)));
        assert_eq!(report.evidence.0.verdict, Verdict::Determinate);
        assert_eq!(report.evidence.1.verdict, Verdict::Determinate);
    }

    #[test]
    fn deficiency_undecided_side_propagates() {
        // a_k = (|k|+1)·ln(|k|+2) defeats every implemented criterion: it is
        // unbounded, grows faster than linearly, has growing one-sided sums,
        // and Σ|p_k(i)|² diverges.
        let l = JacobiCoefficients::full_line(
            "superlinear",
            |k| (k.unsigned_abs() + 1) as f64 * ((k.unsigned_abs() + 2) as f64).ln(),
            |_| 0.0,
        );
        let report = deficiency(&l).unwrap();
        assert_eq!(report.plus_indices, None);
        assert_eq!(report.minus_indices, None);
        assert_eq!(report.total, None);
        assert_eq!(report.evidence.0.verdict, Verdict::Undecided);
        assert_eq!(report.evidence.0.criteria.len(), 4);
    }

    #[test]
    fn full_wronskian_constant_across_the_line() {
        let l = constant_full_line();
        let zeta = c(0.4, 0.3);
        let u = geometric_solution("decaying", zeta, SummableEnd::Plus);
        let v = geometric_solution("growing", zeta.inv(), SummableEnd::Minus);
        let expected = 0.5 * (zeta - zeta.inv());
        for k in (-50..=50).step_by(10) {
            let w = full_wronskian(&l, &u, &v, k).unwrap();
            assert!(
                (w - expected).norm() <= 1e-9 * expected.norm(),
                "wronskian {w} at k={k}, expected {expected}"
            );
        }
        // Antisymmetry and degeneracy.
        let w_uv = full_wronskian(&l, &u, &v, 7).unwrap();
        let w_vu = full_wronskian(&l, &v, &u, 7).unwrap();
        assert!((w_uv + w_vu).norm() <= 1e-12 * w_uv.norm());
        let w_uu = full_wronskian(&l, &u, &u, 7).unwrap();
        assert_abs_diff_eq!(w_uu.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn green_doubly_symmetry_scaling_and_degeneracy() {
        let l = constant_full_line();
        let zeta = c(0.4, 0.3);
        let phi = geometric_solution("phi", zeta, SummableEnd::Plus);
        let phi_cap = geometric_solution("Phi", zeta.inv(), SummableEnd::Minus);

        let g = green_doubly(&l, &phi, &phi_cap, 3, -5).unwrap();
        let g_swapped = green_doubly(&l, &phi, &phi_cap, -5, 3).unwrap();
        assert_eq!(g.value, g_swapped.value);
        assert_eq!(g.z, phi.z());

        // Independent rescaling cancels against the Wronskian.
        let phi_scaled = phi.rescaled(c(3.0, -2.0));
        let phi_cap_scaled = phi_cap.rescaled(c(-0.7, 0.2));
        let g_scaled = green_doubly(&l, &phi_scaled, &phi_cap_scaled, 3, -5).unwrap();
        assert!((g.value - g_scaled.value).norm() <= 1e-12 * g.value.norm());

        // Same solution on both slots: Wronskian degenerates.
        let phi2 = geometric_solution("phi again", zeta, SummableEnd::Both);
        match green_doubly(&l, &phi, &phi2, 0, 0) {
            Err(Error::DegenerateWronskian { value, threshold }) => {
                assert!(value <= threshold);
            }
            other => panic!("expected DegenerateWronskian, got {other:?}"),
        }

        // End bookkeeping is enforced.
        assert!(matches!(
            green_doubly(&l, &phi_cap, &phi_cap, 0, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn green_doubly_resolvent_identity() {
        let l = constant_full_line();
        let zeta = c(0.4, 0.3);
        let z = 0.5 * (zeta + zeta.inv());
        let phi = geometric_solution("phi", zeta, SummableEnd::Plus);
        let phi_cap = geometric_solution("Phi", zeta.inv(), SummableEnd::Minus);
        let g: Vec<Complex64> = (-40..=40)
            .map(|j| green_doubly(&l, &phi, &phi_cap, j, 0).unwrap().value)
            .collect();
        let at = |j: i64| g[(j + 40) as usize];
        for j in -39..=39i64 {
            let lhs = 0.5 * at(j + 1) + 0.5 * at(j - 1) - z * at(j);
            let rhs = if j == 0 { 1.0 } else { 0.0 };
            assert!(
                (lhs - rhs).norm() <= 1e-8,
                "resolvent residual {} at row {j}",
                (lhs - rhs).norm()
            );
        }
    }

    #[test]
    fn truncate_doubly_windows() {
        let l = JacobiCoefficients::full_line("indexed", |k| 10.0 + k as f64, |k| k as f64);
        let w = truncate_doubly(&l, 0, 0).unwrap();
        assert_eq!(w.diag, vec![0.0]);
        assert!(w.offdiag.is_empty());

        let w = truncate_doubly(&l, 2, 3).unwrap();
        assert_eq!(w.size(), 6);
        assert_eq!(w.diag, vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(w.offdiag, vec![8.0, 9.0, 10.0, 11.0, 12.0]);

        let toeplitz = truncate_doubly(&constant_full_line(), 2, 2).unwrap();
        assert_eq!(toeplitz.diag, vec![0.0; 5]);
        assert_eq!(toeplitz.offdiag, vec![0.5; 4]);
    }

    #[test]
    fn doubly_sections_interlace_as_the_window_grows() {
        let l = constant_full_line();
        let small = eigen(&truncate_doubly(&l, 3, 3).unwrap()).unwrap();
        let large = eigen(&truncate_doubly(&l, 3, 4).unwrap()).unwrap();
        for (j, (x, _)) in small.iter().enumerate() {
            assert!(large[j].0 < *x && *x < large[j + 1].0, "interlacing at {j}");
        }
    }

    #[test]
    fn solution_vector_caches_and_reports_metadata() {
        let zeta = c(0.4, 0.3);
        let u = geometric_solution("probe", zeta, SummableEnd::Plus);
        assert_eq!(u.summable_end(), SummableEnd::Plus);
        let first = u.value(12).unwrap();
        let second = u.value(12).unwrap();
        assert_eq!(first, second);
        // Deep indices stay representable through the log scale.
        let deep = u.scaled(-4000).unwrap();
        assert!(deep.ln_abs().is_finite());
        assert!(deep.ln_abs() > 2000.0);
        let expected = zeta.norm().ln() * -4000.0;
        assert_relative_eq!(deep.ln_abs(), expected, epsilon = 1e-9);
    }
}
