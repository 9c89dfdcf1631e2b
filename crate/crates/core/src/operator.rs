//! Finite realizations of `C_φ`: the truncated matrix in the orthonormal
//! monomial basis, the Bergman kernel diagonal, and the Hilbert–Schmidt norm
//! by a basis sum and by a counting-function integral.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::counting::CountingFunction;
use crate::jacobi::singular_values;
use crate::quadrature::{integrate_over_radii, Measure, QuadratureRule};
use crate::selfmaps::{MapFamily, SelfMap};
use crate::weights::{compute_moments, MomentTable, Weight};
use crate::{pairwise_sum, CopopError, Result, C64};

/// Relative accuracy certified by [`kernel_diag`].
pub const KERNEL_TOLERANCE: f64 = 1e-10;
/// Geometric-decay ratio below which a series is read as convergent.
pub const GEOMETRIC_RATIO: f64 = 0.98;
/// Largest moment table [`moments_for_radius`] will build.
pub const MAX_KERNEL_MOMENTS: usize = 400_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesVerdict {
    Finite,
    Diverging,
    Inconclusive,
}

/// `‖R_z‖² = Σ_{n≥0} |z|^{2n} / pₙ`, the diagonal of the reproducing kernel
/// of `A²_ω`, summed until a ratio bound certifies the tail.
pub fn kernel_diag(moments: &MomentTable, z: C64) -> Result<f64> {
    let x = z.norm_sqr();
    if !(x < 1.0) {
        return Err(CopopError::Domain {
            what: "|z|",
            value: z.norm(),
            domain: "[0, 1)",
        });
    }
    if x == 0.0 {
        return Ok(1.0 / moments.p(0));
    }
    let mut sum = 1.0 / moments.p(0);
    let mut prev = sum;
    let mut xn = 1.0;
    let mut q = f64::INFINITY;
    for n in 1..=moments.nmax {
        xn *= x;
        let t = xn / moments.p(n);
        sum += t;
        if t == 0.0 {
            return Ok(sum);
        }
        q = t / prev;
        prev = t;
        // Ratios t_{n+1}/t_n decrease for the moment sequences in use, so the
        // current ratio bounds all later ones.
        if q < 1.0 && t * q / (1.0 - q) <= KERNEL_TOLERANCE * sum {
            return Ok(sum);
        }
    }
    let extra = if q < 1.0 {
        ((KERNEL_TOLERANCE * sum * (1.0 - q) / (prev * q)).ln() / q.ln()).ceil()
    } else {
        // terms still growing: at least until the geometric factor dominates
        (40.0 / (1.0 - x)).ceil()
    };
    let required = moments.nmax + (1.5 * extra.max(1.0)) as usize;
    Err(CopopError::InsufficientMoments {
        modulus: z.norm(),
        required: required.max(moments.nmax * 3 / 2),
        available: moments.nmax,
    })
}

/// Computes a moment table long enough for [`kernel_diag`] on `|z| ≤ rmax`
/// (and at least `min_nmax`), growing it on demand.
pub fn moments_for_radius(w: &Weight, rmax: f64, min_nmax: usize, radial_nodes: usize) -> Result<MomentTable> {
    let mut nmax = min_nmax.max(16);
    loop {
        let table = compute_moments(w, nmax, radial_nodes)?;
        match kernel_diag(&table, C64::new(rmax, 0.0)) {
            Ok(_) => return Ok(table),
            Err(CopopError::InsufficientMoments { required, .. }) if required <= MAX_KERNEL_MOMENTS => {
                nmax = required;
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// `|φ(0)|^{2n}/ωₙ` plus the derivative part.
    Full,
    /// Only `Σ_{k≥1} |c_{n,k}|² ω_k / ωₙ`, as in the Hilbert–Schmidt identity.
    DerivativeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageNorm {
    pub value: f64,
    /// Parseval mass of the discarded coefficients, scaled by `ω_M / ωₙ`.
    pub tail: f64,
}

/// Series truncation used when none is given: `nmax·deg φ` for polynomials,
/// `nmax·max(deg φ, 4)` otherwise.
pub fn default_truncation(phi: &SelfMap, nmax: usize) -> usize {
    match phi.family() {
        MapFamily::Polynomial | MapFamily::Dilation => nmax * phi.degree().max(1),
        _ => nmax * phi.degree().max(4),
    }
}

fn check_moments(moments: &MomentTable, m: usize) -> Result<()> {
    if moments.nmax < m {
        return Err(CopopError::InvalidArgument(format!(
            "moment table has nmax = {} but index {m} is needed",
            moments.nmax
        )));
    }
    Ok(())
}

fn norm_from_coeffs(coeffs: &[C64], moments: &MomentTable, n: usize, mode: NormMode) -> f64 {
    let terms: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c.norm_sqr() * moments.omega(k))
        .collect();
    let mut v = pairwise_sum(&terms);
    if mode == NormMode::Full {
        v += coeffs[0].norm_sqr();
    }
    v / moments.omega(n)
}

/// `‖C_φ(zⁿ/‖zⁿ‖)‖²` from the Taylor coefficients of `φⁿ` up to degree `m`.
pub fn image_norm(phi: &SelfMap, moments: &MomentTable, n: usize, m: usize, mode: NormMode) -> Result<ImageNorm> {
    if n == 0 {
        return Err(CopopError::InvalidArgument("image_norm needs n ≥ 1".into()));
    }
    check_moments(moments, m)?;
    let series = phi.power_coefficients(n, m);
    Ok(ImageNorm {
        value: norm_from_coeffs(&series.coeffs, moments, n, mode),
        tail: series.tail_l2 * moments.omega(m).max(1.0) / moments.omega(n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisHs {
    /// Partial sum plus extrapolated tail when finite; the partial sum otherwise.
    pub value: f64,
    pub partial_sum: f64,
    pub tail_estimate: f64,
    /// Coefficient mass lost to the series truncation.
    pub truncation_tail: f64,
    pub terms: Vec<f64>,
    /// Fitted decay exponent `s` in `tₙ ~ n^{-s}` over the second half.
    pub decay_exponent: Option<f64>,
    pub verdict: SeriesVerdict,
    pub nmax: usize,
    pub truncation: usize,
    pub mode: NormMode,
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Reads the tail of a non-negative series: geometric decay over the last
/// ten terms, else a power-law fit over the second half.
/// Returns (verdict, tail estimate, power-law exponent).
pub fn classify_series(terms: &[f64]) -> (SeriesVerdict, f64, Option<f64>) {
    let n = terms.len();
    let Some(&last) = terms.last() else {
        return (SeriesVerdict::Inconclusive, 0.0, None);
    };
    if last == 0.0 {
        return (SeriesVerdict::Finite, 0.0, None);
    }
    if n >= 10 {
        let first = terms[n - 10];
        if first > 0.0 {
            let q = (last / first).powf(1.0 / 9.0);
            if q < GEOMETRIC_RATIO {
                return (SeriesVerdict::Finite, last * q / (1.0 - q), None);
            }
        }
    }
    let half = n / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = terms
        .iter()
        .enumerate()
        .skip(half)
        .filter(|(_, t)| **t > 0.0)
        .map(|(i, t)| (((i + 1) as f64).ln(), t.ln()))
        .unzip();
    let s = slope(&xs, &ys).map(|v| -v);
    match s {
        Some(s) if s > 1.2 => (SeriesVerdict::Finite, last * n as f64 / (s - 1.0), Some(s)),
        Some(s) if s < 0.8 => (SeriesVerdict::Diverging, f64::INFINITY, Some(s)),
        other => (SeriesVerdict::Inconclusive, f64::NAN, other),
    }
}

/// `Σ_{n=1}^{nmax} ‖C_φ eₙ‖²` (derivative part), truncating every `φⁿ` at
/// degree `m` (default `nmax·max(deg φ, 4)`, or `nmax·deg φ` for polynomials).
pub fn hs_norm_basis(phi: &SelfMap, moments: &MomentTable, nmax: usize, m: Option<usize>) -> Result<BasisHs> {
    hs_norm_basis_with_mode(phi, moments, nmax, m, NormMode::DerivativeOnly)
}

/// As [`hs_norm_basis`], with the point-evaluation terms `|φ(0)|^{2n}/ωₙ`
/// included under [`NormMode::Full`].
pub fn hs_norm_basis_with_mode(
    phi: &SelfMap,
    moments: &MomentTable,
    nmax: usize,
    m: Option<usize>,
    mode: NormMode,
) -> Result<BasisHs> {
    if nmax < 1 {
        return Err(CopopError::InvalidArgument("nmax must be at least 1".into()));
    }
    let m = m.unwrap_or_else(|| default_truncation(phi, nmax));
    check_moments(moments, m)?;
    let table = phi.power_table(nmax, m);
    let mut terms = Vec::with_capacity(nmax);
    let mut truncation_tail = 0.0;
    for (n, coeffs) in table.iter().enumerate().skip(1) {
        terms.push(norm_from_coeffs(coeffs, moments, n, mode));
        truncation_tail += phi.tail_l2(n, coeffs) * moments.omega(m).max(1.0) / moments.omega(n);
    }
    let partial_sum = pairwise_sum(&terms);
    let (verdict, tail, decay_exponent) = classify_series(&terms);
    let value = if verdict == SeriesVerdict::Finite { partial_sum + tail } else { partial_sum };
    Ok(BasisHs {
        value,
        partial_sum,
        tail_estimate: tail,
        truncation_tail,
        terms,
        decay_exponent,
        verdict,
        nmax,
        truncation: m,
        mode,
    })
}

/// Verdict on cumulative integrals over growing radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrowth {
    pub increments: Vec<f64>,
    /// Least-squares slope of `ln(increment)` against `ln(1 - R)`.
    pub growth_exponent: Option<f64>,
    pub extrapolated: Option<f64>,
    pub verdict: SeriesVerdict,
}

/// Absolute increment size treated as exact convergence.
pub const INCREMENT_FLOOR: f64 = 1e-10;

pub fn classify_radial(radii: &[f64], values: &[f64]) -> RadialGrowth {
    let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let pts: (Vec<f64>, Vec<f64>) = increments
        .iter()
        .zip(&radii[1..])
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, r)| ((1.0 - r).ln(), d.ln()))
        .unzip();
    let growth_exponent = slope(&pts.0, &pts.1);
    let total = values.last().copied().unwrap_or(0.0);
    let k = increments.len();
    let (verdict, extrapolated) = if k == 0 {
        (SeriesVerdict::Inconclusive, None)
    } else if increments[k - 1].abs() <= INCREMENT_FLOOR.max(INCREMENT_FLOOR * total.abs()) {
        (SeriesVerdict::Finite, Some(total))
    } else if k >= 2 && increments[k - 2] > 0.0 {
        let q = increments[k - 1] / increments[k - 2];
        if q < 0.5 {
            (SeriesVerdict::Finite, Some(total + increments[k - 1] * q / (1.0 - q)))
        } else if q >= 1.0 {
            (SeriesVerdict::Diverging, None)
        } else {
            (SeriesVerdict::Inconclusive, None)
        }
    } else {
        (SeriesVerdict::Inconclusive, None)
    };
    RadialGrowth {
        increments,
        growth_exponent,
        extrapolated,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralHs {
    pub radii: Vec<f64>,
    /// `∫_{|z|<R} ‖R_z‖² N(z) dA(z)` per radius.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub growth: RadialGrowth,
    /// Extrapolated limit when finite, last value otherwise.
    pub value: f64,
    pub verdict: SeriesVerdict,
}

fn check_rseq(rseq: &[f64]) -> Result<()> {
    if rseq.is_empty() || rseq.iter().any(|r| !(*r > 0.0 && *r < 1.0)) || rseq.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CopopError::InvalidArgument("R sequence must be strictly increasing in (0, 1)".into()));
    }
    Ok(())
}

/// `∫_{|z|<R} ‖R_z‖² N_{φ,ω}(z) dA(z)` for each `R` in `rseq`.
pub fn hs_norm_integral(
    phi: &SelfMap,
    w: &Weight,
    moments: &MomentTable,
    rule: QuadratureRule,
    rseq: &[f64],
) -> Result<IntegralHs> {
    check_rseq(rseq)?;
    let n = CountingFunction::new(phi, w)?;
    let profile = integrate_over_radii(
        |z| {
            let v = n.value(z)?;
            if v == 0.0 {
                return Ok(0.0);
            }
            Ok(kernel_diag(moments, z)? * v)
        },
        rseq,
        &[phi.image_radius()],
        rule,
        Measure::Area,
    )?;
    let growth = classify_radial(rseq, &profile.cumulative);
    let value = growth.extrapolated.unwrap_or(*profile.cumulative.last().unwrap());
    Ok(IntegralHs {
        radii: profile.radii,
        verdict: growth.verdict,
        values: profile.cumulative,
        errors: profile.errors,
        growth,
        value,
    })
}

/// `∫_D K_N(z) N_{φ,ω}(z) dA(z)` with `K_N = Σ_{m<N} |z|^{2m}/p_m`: the exact
/// integral counterpart of the first `N` basis terms.
pub fn hs_partial_integral(phi: &SelfMap, w: &Weight, moments: &MomentTable, terms: usize, rule: QuadratureRule) -> Result<f64> {
    check_moments(moments, terms)?;
    let n = CountingFunction::new(phi, w)?;
    let kernel = |x: f64| {
        let mut xm = 1.0;
        let mut s = 0.0;
        for m in 0..terms {
            s += xm / moments.p(m);
            xm *= x;
        }
        s
    };
    let profile = integrate_over_radii(
        |z| {
            let v = n.value(z)?;
            Ok(if v == 0.0 { 0.0 } else { kernel(z.norm_sqr()) * v })
        },
        &[0.9, 0.99, 1.0],
        &[phi.image_radius()],
        rule,
        Measure::Area,
    )?;
    Ok(*profile.cumulative.last().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HsReport {
    pub basis: BasisHs,
    pub integral: IntegralHs,
    pub relative_gap: f64,
    pub verdict: SeriesVerdict,
}

/// Both routes and their agreement.
pub fn hs_report(basis: BasisHs, integral: IntegralHs) -> HsReport {
    let (b, i) = (basis.value, integral.value);
    let relative_gap = (b - i).abs() / b.max(i).max(1e-300);
    let verdict = if basis.verdict == integral.verdict {
        basis.verdict
    } else {
        SeriesVerdict::Inconclusive
    };
    HsReport {
        basis,
        integral,
        relative_gap,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub size: usize,
    /// `(m, n) ↦ ⟨C_φ eₙ, e_m⟩` with `e₀ = 1`, `eₙ = zⁿ/√ωₙ`.
    pub entries: DMatrix<C64>,
    /// Largest per-column coefficient mass lost to truncation.
    pub truncation_tail: f64,
}

impl OperatorMatrix {
    /// Rows `m,n,re,im` in row-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,re,im\n");
        for m in 0..self.size {
            for n in 0..self.size {
                let v = self.entries[(m, n)];
                out.push_str(&format!("{m},{n},{},{}\n", crate::fmt_f64(v.re), crate::fmt_f64(v.im)));
            }
        }
        out
    }
}

/// Matrix of `C_φ` on `span{e₀, …, e_M}` in the orthonormal monomial basis.
pub fn build_matrix(phi: &SelfMap, moments: &MomentTable, m: usize) -> Result<OperatorMatrix> {
    if m < 1 {
        return Err(CopopError::InvalidArgument("matrix size M must be at least 1".into()));
    }
    check_moments(moments, m)?;
    let table = phi.power_table(m, m);
    let mut entries = DMatrix::<C64>::zeros(m + 1, m + 1);
    let mut truncation_tail = 0.0f64;
    for (n, coeffs) in table.iter().enumerate() {
        let on = moments.omega(n);
        for (row, c) in coeffs.iter().enumerate() {
            entries[(row, n)] = c * (moments.omega(row) / on).sqrt();
        }
        truncation_tail = truncation_tail.max(phi.tail_l2(n, coeffs) * moments.omega(m).max(1.0) / on);
    }
    Ok(OperatorMatrix {
        size: m + 1,
        entries,
        truncation_tail,
    })
}

/// Singular values of the truncation, optionally without the constants'
/// row and column.
pub fn matrix_singular_values(mat: &OperatorMatrix, drop_first: bool) -> Result<Vec<f64>> {
    if drop_first {
        let k = mat.size - 1;
        singular_values(&mat.entries.view((1, 1), (k, k)).into_owned())
    } else {
        singular_values(&mat.entries)
    }
}

/// `(Σ σᵢ^p)^{1/p}` over the singular values of the truncation.
pub fn schatten_from_matrix(mat: &OperatorMatrix, p: f64, drop_first: bool) -> Result<f64> {
    if !(p > 0.0) {
        return Err(CopopError::Domain {
            what: "p",
            value: p,
            domain: "(0, ∞)",
        });
    }
    let sv = matrix_singular_values(mat, drop_first)?;
    let powers: Vec<f64> = sv.iter().map(|s| s.powf(p)).collect();
    Ok(pairwise_sum(&powers).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::standard_p_closed_form;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn moments(alpha: f64, nmax: usize) -> MomentTable {
        compute_moments(&Weight::standard(alpha).unwrap(), nmax, 64).unwrap()
    }

    fn z2() -> SelfMap {
        SelfMap::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let m = moments(0.0, 400);
        for r in [0.0, 0.3, 0.7, 0.9] {
            let x = r * r;
            let k = kernel_diag(&m, c(r, 0.0)).unwrap();
            assert!((k - 1.0 / ((1.0 - x) * (1.0 - x))).abs() <= 1e-9 * k);
        }
        assert_eq!(kernel_diag(&m, c(0.0, 0.0)).unwrap(), 1.0 / m.p(0));
        // brute force at ten times the terms
        let m1 = moments(1.0, 100);
        let p = standard_p_closed_form(1.0, 1000);
        let brute: f64 = (0..1000).map(|n| 0.25f64.powi(n as i32) / p[n]).sum();
        assert!((kernel_diag(&m1, c(0.5, 0.0)).unwrap() - brute).abs() < 1e-10 * brute);
        match kernel_diag(&m, c(0.999, 0.0)) {
            Err(CopopError::InsufficientMoments { required, available, .. }) => {
                assert_eq!(available, 400);
                assert!(required > 400);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn moments_grow_on_demand() {
        let w = Weight::standard(1.0).unwrap();
        let t = moments_for_radius(&w, 0.99, 50, 64).unwrap();
        let k = kernel_diag(&t, c(0.99, 0.0)).unwrap();
        let x: f64 = 0.99 * 0.99;
        let exact = 2.0 / (1.0 - x).powi(3);
        assert!((k - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn image_norm_examples() {
        let m = moments(0.0, 50);
        let l = 0.6;
        let d = SelfMap::dilation(c(l, 0.0)).unwrap();
        for n in [1, 3, 7] {
            for mode in [NormMode::Full, NormMode::DerivativeOnly] {
                let v = image_norm(&d, &m, n, 10, mode).unwrap().value;
                assert!((v - l.powi(2 * n as i32)).abs() < 1e-14);
            }
        }
        assert!((image_norm(&SelfMap::identity(), &m, 4, 10, NormMode::Full).unwrap().value - 1.0).abs() < 1e-14);
        assert!((image_norm(&z2(), &m, 1, 2, NormMode::DerivativeOnly).unwrap().value - 2.0).abs() < 1e-12);
        assert_eq!(image_norm(&z2(), &m, 1, 2, NormMode::DerivativeOnly).unwrap().tail, 0.0);
        let shifted = SelfMap::polynomial(vec![c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        let full = image_norm(&shifted, &m, 2, 4, NormMode::Full).unwrap().value;
        let deriv = image_norm(&shifted, &m, 2, 4, NormMode::DerivativeOnly).unwrap().value;
        assert!((full - deriv - 0.0625 / m.omega(2)).abs() < 1e-14);
    }

    #[test]
    fn basis_route_examples() {
        let m = moments(0.0, 200);
        let d = SelfMap::dilation(c(0.5, 0.0)).unwrap();
        let b = hs_norm_basis(&d, &m, 60, None).unwrap();
        assert_eq!(b.verdict, SeriesVerdict::Finite);
        assert!((b.value - 1.0 / 3.0).abs() < 1e-12);

        let b = hs_norm_basis(&SelfMap::identity(), &m, 60, None).unwrap();
        assert_eq!(b.verdict, SeriesVerdict::Diverging);

        let m1 = moments(1.0, 200);
        let s = SelfMap::moebius(c(0.5, 0.0), 0.0).unwrap();
        assert_eq!(hs_norm_basis(&s, &m1, 40, None).unwrap().verdict, SeriesVerdict::Diverging);
        assert_eq!(hs_norm_basis(&z2(), &m1, 60, None).unwrap().verdict, SeriesVerdict::Diverging);
    }

    #[test]
    fn series_classifier() {
        let geo: Vec<f64> = (1..=30).map(|n| 0.5f64.powi(n)).collect();
        let (v, tail, _) = classify_series(&geo);
        assert_eq!(v, SeriesVerdict::Finite);
        assert!((tail - 0.5f64.powi(30)).abs() < 1e-15);
        let p2: Vec<f64> = (1..=100).map(|n| (n as f64).powi(-2)).collect();
        assert_eq!(classify_series(&p2).0, SeriesVerdict::Finite);
        let harmonic: Vec<f64> = (1..=100).map(|n| 1.0 / n as f64).collect();
        assert_eq!(classify_series(&harmonic).0, SeriesVerdict::Inconclusive);
        let flat = vec![1.0; 50];
        assert_eq!(classify_series(&flat).0, SeriesVerdict::Diverging);
    }

    #[test]
    fn integral_route_examples() {
        let rule = QuadratureRule::default();
        let w0 = Weight::standard(0.0).unwrap();
        let m = moments(0.0, 400);
        let d = SelfMap::dilation(c(0.5, 0.0)).unwrap();
        let r = hs_norm_integral(&d, &w0, &m, rule, &[0.9, 0.99, 0.999]).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Finite);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-9, "{}", r.value);

        let m = moments_for_radius(&w0, 0.99, 200, 64).unwrap();
        let r = hs_norm_integral(&SelfMap::identity(), &w0, &m, rule, &[0.5, 0.9, 0.99]).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Diverging);
        for (rr, v) in r.radii.iter().zip(&r.values) {
            let exact = rr * rr / (1.0 - rr * rr);
            assert!((v - exact).abs() < 1e-7 * exact, "{v} vs {exact}");
        }
    }

    #[test]
    fn matched_truncations_agree() {
        let rule = QuadratureRule::default();
        let w1 = Weight::standard(1.0).unwrap();
        let m = moments(1.0, 200);
        for phi in [z2(), SelfMap::polynomial(vec![c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0)]).unwrap()] {
            let b = hs_norm_basis(&phi, &m, 20, None).unwrap();
            let i = hs_partial_integral(&phi, &w1, &m, 20, rule).unwrap();
            assert!((b.partial_sum - i).abs() < 1e-6 * i, "{} vs {i}", b.partial_sum);
        }
    }

    #[test]
    fn matrix_examples() {
        let m = moments(0.0, 20);
        let id = build_matrix(&SelfMap::identity(), &m, 6).unwrap();
        assert_eq!(id.entries, DMatrix::<C64>::identity(7, 7));

        let l = 0.5;
        let d = build_matrix(&SelfMap::dilation(c(l, 0.0)).unwrap(), &m, 8).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let e = if i == j { l.powi(i as i32) } else { 0.0 };
                assert!((d.entries[(i, j)] - c(e, 0.0)).norm() < 1e-15);
            }
        }

        let sq = build_matrix(&z2(), &m, 4).unwrap();
        assert!((sq.entries[(2, 1)].re - 2f64.sqrt()).abs() < 1e-12);
        assert!((sq.entries[(4, 2)].re - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn schatten_from_matrix_examples() {
        let m = moments(0.0, 40);
        let l = 0.5f64;
        let d = build_matrix(&SelfMap::dilation(c(l, 0.0)).unwrap(), &m, 40).unwrap();
        let s2 = schatten_from_matrix(&d, 2.0, true).unwrap();
        assert!((s2 - l / (1.0 - l * l).sqrt()).abs() < 1e-12);
        let id = build_matrix(&SelfMap::identity(), &m, 9).unwrap();
        for p in [0.5, 1.0, 3.0] {
            assert!((schatten_from_matrix(&id, p, false).unwrap() - 10f64.powf(1.0 / p)).abs() < 1e-9);
        }
        let b = hs_norm_basis(&SelfMap::dilation(c(l, 0.0)).unwrap(), &m, 40, None).unwrap();
        assert!((s2 * s2 - b.value).abs() < 1e-12);
        assert!(schatten_from_matrix(&d, 0.0, true).is_err());
    }

    #[test]
    fn matrix_composes_taylor_coefficients() {
        let m = moments(1.0, 60);
        let s = SelfMap::moebius(c(0.5, 0.0), 0.0).unwrap();
        let mat = build_matrix(&s, &m, 40).unwrap();
        // f(z) = 1 + 2z - z³
        let f = [c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
        let mut x = nalgebra::DVector::<C64>::zeros(41);
        for (k, a) in f.iter().enumerate() {
            x[k] = a * m.omega(k).sqrt();
        }
        let y = &mat.entries * x;
        // compare with Taylor coefficients of f∘σ
        let table = s.power_table(3, 40);
        for row in 0..41 {
            let direct: C64 = f.iter().enumerate().map(|(k, a)| a * table[k][row]).sum();
            assert!((y[row] / m.omega(row).sqrt() - direct).norm() < 1e-10);
        }
    }
}
