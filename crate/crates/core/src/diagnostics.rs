//! Numerical readings of the essential-norm, Schatten-class and closed-range
//! characterizations in terms of `τ = N_{φ,ω}/ω`, plus test-function norms
//! and weight comparability under `σ_b`.

use std::f64::consts::TAU;

use serde::{Serialize, Serializer};

use crate::counting::CountingFunction;
use crate::operator::{classify_radial, RadialGrowth, SeriesVerdict};
use crate::quadrature::{integrate, integrate_over_radii, Measure, QuadratureRule, Region};
use crate::selfmaps::{sigma, SelfMap};
use crate::weights::{boundary_grid, MomentTable, Weight};
use crate::{pairwise_sum, CopopError, Result, C64};

pub const DEFAULT_COMPACT_TOL: f64 = 1e-6;
pub const DEFAULT_NOTCOMPACT_TOL: f64 = 1e-3;
/// Consecutive suprema growing at least this fast read as unbounded.
pub const UNBOUNDED_RATIO: f64 = 1.5;
/// Infimum of closed-range ratios below which the probe fails.
pub const CLOSED_RANGE_FLOOR: f64 = 1e-4;
/// Angle doublings allowed while the argmax moves.
pub const MAX_ANGLE_DOUBLINGS: u32 = 3;
const GOLDEN_ITERATIONS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompactnessVerdict {
    Compact,
    NotCompact,
    #[serde(rename = "Unbounded-indicator")]
    UnboundedIndicator,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limsup {
    Value(f64),
    Diverging,
}

impl Serialize for Limsup {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Limsup::Value(v) => s.serialize_f64(*v),
            Limsup::Diverging => s.serialize_str("diverging"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssentialNormProfile {
    pub radii: Vec<f64>,
    /// Largest sampled `τ` on `|z| = r`.
    pub sup_values: Vec<f64>,
    /// Angle at which each supremum was attained.
    pub angular_argmax: Vec<f64>,
    pub angles_used: Vec<usize>,
    pub extrapolated_limsup: Limsup,
    pub verdict: CompactnessVerdict,
}

impl EssentialNormProfile {
    /// Rows `r,sup_tau`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,sup_tau\n");
        for (r, s) in self.radii.iter().zip(&self.sup_values) {
            out.push_str(&format!("{},{}\n", crate::fmt_f64(*r), crate::fmt_f64(*s)));
        }
        out
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CopopError::InvalidArgument("radii must be strictly increasing in (0, 1)".into()));
    }
    Ok(())
}

// Best (value, angle) on the circle |z| = r.
fn circle_sup(n: &CountingFunction<'_>, r: f64, base: usize) -> Result<(f64, f64, usize)> {
    let eval = |theta: f64| -> Result<(f64, f64)> { Ok((n.tau(C64::from_polar(r, theta))?, theta)) };
    let argmax = |vals: &[(f64, f64)]| {
        vals.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v.0 > best.1 { (i, v.0) } else { best })
            .0
    };
    let mut count = base;
    let mut vals: Vec<(f64, f64)> = (0..count)
        .map(|j| eval(TAU * j as f64 / count as f64))
        .collect::<Result<_>>()?;
    let mut j = argmax(&vals);
    for _ in 0..MAX_ANGLE_DOUBLINGS {
        let fine = 2 * count;
        let mut next = Vec::with_capacity(fine);
        for (k, v) in vals.iter().enumerate() {
            next.push(*v);
            next.push(eval(TAU * (2 * k + 1) as f64 / fine as f64)?);
        }
        let jf = argmax(&next);
        let moved = {
            let d = (jf as isize - 2 * j as isize).rem_euclid(fine as isize);
            d.min(fine as isize - d)
        };
        vals = next;
        count = fine;
        j = jf;
        if moved <= 2 {
            break;
        }
    }
    let mut best = vals[j];
    // golden-section search between the neighbouring samples
    let h = TAU / count as f64;
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..GOLDEN_ITERATIONS {
        for cand in [fc, fd] {
            if cand.0 > best.0 {
                best = cand;
            }
        }
        if fc.0 >= fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d)?;
        }
    }
    for cand in [fc, fd] {
        if cand.0 > best.0 {
            best = cand;
        }
    }
    Ok((best.0, best.1, count))
}

/// Angular suprema of `τ` on each circle `|z| = r`, with the compactness
/// verdict at the default tolerances.
pub fn essential_norm_profile(phi: &SelfMap, w: &Weight, radii: &[f64], angles: usize) -> Result<EssentialNormProfile> {
    essential_norm_profile_with(phi, w, radii, angles, DEFAULT_COMPACT_TOL, DEFAULT_NOTCOMPACT_TOL)
}

pub fn essential_norm_profile_with(
    phi: &SelfMap,
    w: &Weight,
    radii: &[f64],
    angles: usize,
    compact_tol: f64,
    notcompact_tol: f64,
) -> Result<EssentialNormProfile> {
    check_radii(radii)?;
    if angles < 4 {
        return Err(CopopError::InvalidArgument("need at least 4 angles per radius".into()));
    }
    let n = CountingFunction::new(phi, w)?;
    let mut sup_values = Vec::with_capacity(radii.len());
    let mut angular_argmax = Vec::with_capacity(radii.len());
    let mut angles_used = Vec::with_capacity(radii.len());
    for &r in radii {
        let (v, theta, used) = circle_sup(&n, r, angles)?;
        sup_values.push(v);
        angular_argmax.push(theta);
        angles_used.push(used);
    }
    let verdict = compactness_verdict(&sup_values, compact_tol, notcompact_tol);
    let extrapolated_limsup = extrapolate_limsup(&sup_values);
    Ok(EssentialNormProfile {
        radii: radii.to_vec(),
        sup_values,
        angular_argmax,
        angles_used,
        extrapolated_limsup,
        verdict,
    })
}

fn last_three(s: &[f64]) -> &[f64] {
    &s[s.len().saturating_sub(3)..]
}

/// Reads the last three suprema of a profile.
pub fn compactness_verdict(sup_values: &[f64], compact_tol: f64, notcompact_tol: f64) -> CompactnessVerdict {
    let tail = last_three(sup_values);
    if tail.is_empty() {
        return CompactnessVerdict::Inconclusive;
    }
    if tail.iter().all(|s| *s < compact_tol) {
        return CompactnessVerdict::Compact;
    }
    if tail.len() == 3 && tail.windows(2).all(|w| w[0] > 0.0 && w[1] >= UNBOUNDED_RATIO * w[0]) {
        return CompactnessVerdict::UnboundedIndicator;
    }
    if tail.iter().all(|s| *s >= notcompact_tol) {
        return CompactnessVerdict::NotCompact;
    }
    CompactnessVerdict::Inconclusive
}

/// Geometric extrapolation of the last three suprema.
pub fn extrapolate_limsup(sup_values: &[f64]) -> Limsup {
    let t = last_three(sup_values);
    match *t {
        [a, b, c] => {
            if a > 0.0 && b >= UNBOUNDED_RATIO * a && c >= UNBOUNDED_RATIO * b {
                return Limsup::Diverging;
            }
            let (d1, d2) = (b - a, c - b);
            if d2 == 0.0 || d1 == 0.0 {
                return Limsup::Value(c);
            }
            let q = d2 / d1;
            if q.abs() < 1.0 {
                Limsup::Value(c + d2 * q / (1.0 - q))
            } else {
                Limsup::Value(c)
            }
        }
        [.., c] => Limsup::Value(c),
        [] => Limsup::Value(f64::NAN),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SchattenVerdict {
    #[serde(rename = "in-Sp")]
    InSp,
    #[serde(rename = "not-in-Sp")]
    NotInSp,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl From<SeriesVerdict> for SchattenVerdict {
    fn from(v: SeriesVerdict) -> Self {
        match v {
            SeriesVerdict::Finite => SchattenVerdict::InSp,
            SeriesVerdict::Diverging => SchattenVerdict::NotInSp,
            SeriesVerdict::Inconclusive => SchattenVerdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchattenReport {
    pub p: f64,
    pub radii: Vec<f64>,
    /// `∫_{|z|<R} τ^{p/2} dλ` per radius.
    pub integral_values: Vec<f64>,
    pub errors: Vec<f64>,
    pub growth: RadialGrowth,
    pub growth_exponent: Option<f64>,
    pub verdict: SchattenVerdict,
}

impl SchattenReport {
    /// Rows `R,integral`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,integral\n");
        for (r, v) in self.radii.iter().zip(&self.integral_values) {
            out.push_str(&format!("{},{}\n", crate::fmt_f64(*r), crate::fmt_f64(*v)));
        }
        out
    }
}

/// `∫_{|z|<R} τ(z)^{p/2} dλ(z)` over an increasing sequence of radii.
pub fn schatten_integral(phi: &SelfMap, w: &Weight, p: f64, rule: QuadratureRule, rseq: &[f64]) -> Result<SchattenReport> {
    if !(p > 0.0) {
        return Err(CopopError::Domain {
            what: "p",
            value: p,
            domain: "(0, ∞)",
        });
    }
    check_radii(rseq)?;
    let n = CountingFunction::new(phi, w)?;
    let half = p / 2.0;
    let profile = integrate_over_radii(
        |z| {
            let t = n.tau(z)?;
            Ok(if t == 0.0 { 0.0 } else { t.powf(half) })
        },
        rseq,
        &[phi.image_radius()],
        rule,
        Measure::Hyperbolic,
    )?;
    let growth = classify_radial(rseq, &profile.cumulative);
    Ok(SchattenReport {
        p,
        radii: profile.radii,
        integral_values: profile.cumulative,
        errors: profile.errors,
        growth_exponent: growth.growth_exponent,
        verdict: growth.verdict.into(),
        growth,
    })
}

/// `ψ̂_r(z) = (1 / ((1-|z|²)² ω(z))) ∫_{Δ(z,r)} τ(t) ω(t) dA(t)`.
pub fn berezin_transform(phi: &SelfMap, w: &Weight, z: C64, r: f64, rule: QuadratureRule) -> Result<f64> {
    let n = CountingFunction::new(phi, w)?;
    berezin_with(&n, z, r, rule)
}

fn berezin_with(n: &CountingFunction<'_>, z: C64, r: f64, rule: QuadratureRule) -> Result<f64> {
    if !(z.norm() < 1.0) {
        return Err(CopopError::Domain {
            what: "|z|",
            value: z.norm(),
            domain: "[0, 1)",
        });
    }
    let w = n.weight();
    let integral = crate::quadrature::try_integrate(|t| n.tau(t), &Region::PseudoHyperbolic { a: z, r }, rule, Measure::Weighted(w))?;
    let s = crate::one_minus_sq(z.norm());
    Ok(integral.value / (s * s * w.value(z.norm())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerezinCheck {
    /// `ψ(z) = τ(z)`.
    pub psi: f64,
    pub transform: f64,
    /// `(2/r²) ψ̂_r(z)`.
    pub bound: f64,
    pub holds: bool,
}

/// The pointwise bound `ψ(z) ≤ (2/r²) ψ̂_r(z)`.
pub fn check_berezin_bound(phi: &SelfMap, w: &Weight, z: C64, r: f64, rule: QuadratureRule) -> Result<BerezinCheck> {
    let n = CountingFunction::new(phi, w)?;
    let psi = n.tau(z)?;
    let transform = berezin_with(&n, z, r, rule)?;
    let bound = 2.0 / (r * r) * transform;
    Ok(BerezinCheck {
        psi,
        transform,
        bound,
        holds: psi <= bound + crate::counting::SUBMEAN_SLACK,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunctionNorm {
    /// `‖f_a‖_{H_ω}`.
    pub norm: f64,
    /// Bound on the omitted squared-norm mass.
    pub tail_bound: f64,
    pub terms: usize,
}

/// Taylor coefficients of `f_a = (1-|a|²)^{1+δ} / (√ω(a) (1-āz)^{1+δ})`.
fn test_function_coefficients(w: &Weight, a: C64, delta: f64, m: usize) -> Vec<C64> {
    let beta = 1.0 + delta;
    let k0 = crate::one_minus_sq(a.norm()).powf(beta) / w.value(a.norm()).sqrt();
    let ac = a.conj();
    let mut out = Vec::with_capacity(m + 1);
    let mut b = C64::new(k0, 0.0);
    out.push(b);
    for k in 1..=m {
        b *= ac * ((beta + (k - 1) as f64) / k as f64);
        out.push(b);
    }
    out
}

/// `‖f_a‖² = |f_a(0)|² + Σ_{k≥1} |b_k|² ω_k`, summed to `m` terms.
pub fn test_function_norm(w: &Weight, moments: &MomentTable, a: C64, delta: f64, m: usize) -> Result<TestFunctionNorm> {
    if !(a.norm() < 1.0) {
        return Err(CopopError::Domain {
            what: "|a|",
            value: a.norm(),
            domain: "[0, 1)",
        });
    }
    if !(delta > 0.0) {
        return Err(CopopError::Domain {
            what: "delta",
            value: delta,
            domain: "(0, ∞)",
        });
    }
    if moments.nmax < m {
        return Err(CopopError::InvalidArgument(format!(
            "test function norm needs moments up to {m}, have {}",
            moments.nmax
        )));
    }
    let b = test_function_coefficients(w, a, delta, m);
    let terms: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm_sqr() * if k == 0 { 1.0 } else { moments.omega(k) })
        .collect();
    let sum = pairwise_sum(&terms);
    let tail_bound = match terms.as_slice() {
        [.., prev, last] if *prev > 0.0 && last / prev < 1.0 => {
            let q = last / prev;
            last * q / (1.0 - q)
        }
        [.., last] if *last == 0.0 => 0.0,
        _ => f64::INFINITY,
    };
    Ok(TestFunctionNorm {
        norm: sum.sqrt(),
        tail_bound,
        terms: m,
    })
}

/// Smallest truncation for which [`test_function_norm`] at `|a|` has a
/// ratio-certified relative tail below `1e-12` (heuristic sizing).
pub fn test_function_terms(a_modulus: f64, delta: f64) -> usize {
    if a_modulus == 0.0 {
        return 1;
    }
    let x = a_modulus * a_modulus;
    // terms ~ k^{2δ+1} x^k; beyond the peak they decay like x^k
    let peak = ((2.0 * delta + 1.0) / (1.0 - x)).ceil();
    (peak + (1e-14f64.ln() / x.ln()).ceil()).max(16.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparability {
    /// `sup ω(σ_b(z)) / ω(z)` over the grid.
    pub sup: f64,
    pub inf: f64,
    pub argsup: C64,
    pub arginf: C64,
}

/// Extremes of `ω(σ_b(z))/ω(z)` over a polar grid clustered at the boundary.
pub fn weight_comparability(w: &Weight, b: C64, radial: usize, angular: usize) -> Result<Comparability> {
    if !(b.norm() < 1.0) {
        return Err(CopopError::Domain {
            what: "|b|",
            value: b.norm(),
            domain: "[0, 1)",
        });
    }
    if radial < 4 || angular < 4 {
        return Err(CopopError::InvalidArgument("comparability grid too small".into()));
    }
    let mut radii: Vec<f64> = (0..radial).map(|i| 0.9 * i as f64 / radial as f64).collect();
    radii.extend(boundary_grid(0.9, radial));
    let mut out = Comparability {
        sup: f64::NEG_INFINITY,
        inf: f64::INFINITY,
        argsup: C64::new(0.0, 0.0),
        arginf: C64::new(0.0, 0.0),
    };
    for &r in &radii {
        for j in 0..angular {
            let z = C64::from_polar(r, TAU * j as f64 / angular as f64);
            let v = w.value(sigma(b, z).norm()) / w.value(z.norm());
            if v > out.sup {
                out.sup = v;
                out.argsup = z;
            }
            if v < out.inf {
                out.inf = v;
                out.arginf = z;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestFunction {
    /// `zⁿ`, `n ≥ 1`.
    Monomial(usize),
    /// `f_a` with exponent `1 + δ`.
    Kernel { a: C64, delta: f64 },
}

impl TestFunction {
    pub fn label(&self) -> String {
        match self {
            TestFunction::Monomial(n) => format!("z^{n}"),
            TestFunction::Kernel { a, .. } => format!("f_a({}{:+}i)", a.re, a.im),
        }
    }

    fn derivative_sq(&self, w: &Weight, z: C64) -> f64 {
        match *self {
            TestFunction::Monomial(n) => (n * n) as f64 * z.norm_sqr().powi(n as i32 - 1),
            TestFunction::Kernel { a, delta } => {
                let beta = 1.0 + delta;
                let k0 = crate::one_minus_sq(a.norm()).powf(beta) / w.value(a.norm()).sqrt();
                let d = (1.0 - a.conj() * z).norm();
                (k0 * beta * a.norm()).powi(2) * d.powf(-2.0 * (beta + 1.0))
            }
        }
    }
}

/// `∫ |f'|² τ ω dA / ∫ |f'|² ω dA`.
pub fn closed_range_ratio(phi: &SelfMap, w: &Weight, f: TestFunction, rule: QuadratureRule) -> Result<f64> {
    let n = CountingFunction::new(phi, w)?;
    closed_range_ratio_with(&n, f, rule)
}

fn closed_range_ratio_with(n: &CountingFunction<'_>, f: TestFunction, rule: QuadratureRule) -> Result<f64> {
    match f {
        TestFunction::Monomial(0) => return Err(CopopError::InvalidArgument("z^0 has zero derivative".into())),
        TestFunction::Kernel { a, delta } if a.norm() == 0.0 || !(a.norm() < 1.0) || !(delta > 0.0) => {
            return Err(CopopError::InvalidArgument(format!("test function f_a needs 0 < |a| < 1 and δ > 0, got a = {a}")))
        }
        _ => {}
    }
    let w = n.weight();
    let num = integrate_over_radii(
        |z| {
            let v = n.value(z)?;
            Ok(if v == 0.0 { 0.0 } else { f.derivative_sq(w, z) * v })
        },
        &[1.0],
        &[n.map().image_radius()],
        rule,
        Measure::Area,
    )?;
    let den = integrate(|z| f.derivative_sq(w, z), &Region::Disk { radius: 1.0 }, rule, Measure::Weighted(w))?;
    Ok(num.cumulative[0] / den.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedRangeVerdict {
    NecessaryConditionPasses,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedRangeReport {
    pub family: String,
    pub normalized_origin: bool,
    pub test_functions: Vec<String>,
    pub ratios: Vec<f64>,
    pub infimum: f64,
    pub verdict: ClosedRangeVerdict,
}

impl ClosedRangeReport {
    /// Rows `test_fn,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("test_fn,ratio\n");
        for (t, r) in self.test_functions.iter().zip(&self.ratios) {
            out.push_str(&format!("{t},{}\n", crate::fmt_f64(*r)));
        }
        out
    }
}

/// Test family `{zⁿ : 1 ≤ n ≤ nmax} ∪ {f_a : a ∈ a_grid, a ≠ 0}`.
pub fn test_family(nmax_monomials: usize, a_grid: &[C64], delta: f64) -> Vec<TestFunction> {
    let mut out: Vec<TestFunction> = (1..=nmax_monomials).map(TestFunction::Monomial).collect();
    out.extend(
        a_grid
            .iter()
            .filter(|a| a.norm() > 0.0)
            .map(|&a| TestFunction::Kernel { a, delta }),
    );
    out
}

/// Probes the closed-range inequality on a finite family. Can refute, never
/// certify. With `normalize_origin`, probes `σ_{φ(0)} ∘ φ` instead.
pub fn closed_range_probe(
    phi: &SelfMap,
    w: &Weight,
    family: &[TestFunction],
    rule: QuadratureRule,
    normalize_origin: bool,
) -> Result<ClosedRangeReport> {
    let target = if normalize_origin { phi.normalized_at_origin()? } else { phi.clone() };
    let n = CountingFunction::new(&target, w)?;
    let mut ratios = Vec::with_capacity(family.len());
    for f in family {
        ratios.push(closed_range_ratio_with(&n, *f, rule)?);
    }
    let infimum = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if ratios.is_empty() || ratios.iter().any(|r| !r.is_finite()) {
        ClosedRangeVerdict::Inconclusive
    } else if infimum < CLOSED_RANGE_FLOOR {
        ClosedRangeVerdict::Fails
    } else {
        ClosedRangeVerdict::NecessaryConditionPasses
    };
    Ok(ClosedRangeReport {
        family: target.describe(),
        normalized_origin: normalize_origin,
        test_functions: family.iter().map(TestFunction::label).collect(),
        ratios,
        infimum,
        verdict,
    })
}
