//! Radial weights `ω` on `[0, 1)`, their admissibility conditions and the
//! moment sequences that define the norms of `H_ω` and `A²_ω`.
//!
//! For `f(z) = Σ aₙ zⁿ`,
//!
//! ```text
//! ‖f‖²_{H_ω} = Σ |aₙ|² ωₙ,   ω₀ = 1,  ωₙ = 2n² ∫₀¹ r^{2n-1} ω(r) dr
//! ‖f‖²_{A²_ω} = Σ |aₙ|² pₙ,  pₙ = 2 ∫₀¹ r^{2n+1} ω(r) dr
//! ```
//!
//! so that `ωₙ = n² p_{n-1}` holds identically.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quadrature::unit_gauss_legendre;
use crate::spline::CubicSpline;
use crate::{one_minus_sq, pairwise_sum, CopopError, Result};

/// Central-difference step for custom weights without analytic derivatives.
pub const FD_STEP: f64 = 1e-5;
/// Slack allowed in sample-based monotonicity and sign checks.
pub const CHECK_SLACK: f64 = 1e-9;
pub const DEFAULT_GRID_SIZE: usize = 10_000;
pub const DEFAULT_DELTA_CANDIDATES: [f64; 5] = [0.1, 0.25, 0.5, 1.0, 2.0];

// The admissibility grids reach 1 - 10^-GRID_DECADES.
const GRID_DECADES: f64 = 8.0;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeScheme {
    Analytic,
    Supplied,
    CentralDifference,
    Spline,
}

#[derive(Clone)]
enum Kind {
    Standard {
        alpha: f64,
    },
    Custom {
        label: String,
        eval: RealFn,
        derivs: Option<(RealFn, RealFn)>,
    },
    Table {
        spline: CubicSpline,
    },
}

/// A positive radial weight on `[0, 1)` together with its first two
/// derivatives.
#[derive(Clone)]
pub struct Weight {
    kind: Kind,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl Weight {
    /// `ω_α(r) = (1 - r²)^α` with `α > -1`.
    pub fn standard(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(CopopError::Domain {
                what: "alpha",
                value: alpha,
                domain: "(-1, ∞)",
            });
        }
        Ok(Self {
            kind: Kind::Standard { alpha },
        })
    }

    /// A weight given only by its values; derivatives fall back to central
    /// differences.
    pub fn custom(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: Kind::Custom {
                label: label.into(),
                eval: Arc::new(eval),
                derivs: None,
            },
        }
    }

    pub fn custom_with_derivatives(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: Kind::Custom {
                label: label.into(),
                eval: Arc::new(eval),
                derivs: Some((Arc::new(deriv1), Arc::new(deriv2))),
            },
        }
    }

    /// Tabulated weight smoothed by a natural cubic spline.
    ///
    /// The abscissae must be strictly increasing, start at `r = 0` and end at
    /// `r = 1`; the interpolant must stay positive on `[0, 1)`.
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(CopopError::InvalidWeight("need at least two samples".into()));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
        if xs[0] != 0.0 || *xs.last().unwrap() != 1.0 {
            return Err(CopopError::InvalidWeight(
                "sample abscissae must start at r = 0 and end at r = 1".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CopopError::InvalidWeight("sample abscissae must be strictly increasing".into()));
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(CopopError::InvalidWeight("sample values must be finite".into()));
        }
        let spline = CubicSpline::natural(xs, ys);
        let n = DEFAULT_GRID_SIZE;
        for i in 0..n {
            let r = i as f64 / n as f64;
            let v = spline.eval3(r)[0];
            if !(v > 0.0) {
                return Err(CopopError::InvalidWeight(format!(
                    "spline interpolant is not positive at r = {r} (value {v})"
                )));
            }
        }
        Ok(Self {
            kind: Kind::Table { spline },
        })
    }

    pub fn from_descriptor(desc: &WeightDescriptor) -> Result<Self> {
        match desc.family {
            WeightFamilyTag::Standard => {
                if desc.samples.is_some() {
                    return Err(CopopError::InvalidWeight("standard weight takes no samples".into()));
                }
                let alpha = desc
                    .alpha
                    .ok_or_else(|| CopopError::InvalidWeight("standard weight needs alpha".into()))?;
                Self::standard(alpha)
            }
            WeightFamilyTag::CustomTable => {
                if desc.alpha.is_some() {
                    return Err(CopopError::InvalidWeight("custom-table weight takes no alpha".into()));
                }
                let samples = desc
                    .samples
                    .as_ref()
                    .ok_or_else(|| CopopError::InvalidWeight("custom-table weight needs samples".into()))?;
                let pairs: Vec<(f64, f64)> = samples.iter().map(|p| (p[0], p[1])).collect();
                Self::from_samples(&pairs)
            }
        }
    }

    /// `Some(α)` for the standard family.
    pub fn standard_alpha(&self) -> Option<f64> {
        match self.kind {
            Kind::Standard { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Tabulated weights are spline-smoothed, which is flagged in reports.
    pub fn is_smoothed(&self) -> bool {
        matches!(self.kind, Kind::Table { .. })
    }

    pub fn derivative_scheme(&self) -> DerivativeScheme {
        match &self.kind {
            Kind::Standard { .. } => DerivativeScheme::Analytic,
            Kind::Custom { derivs: Some(_), .. } => DerivativeScheme::Supplied,
            Kind::Custom { derivs: None, .. } => DerivativeScheme::CentralDifference,
            Kind::Table { .. } => DerivativeScheme::Spline,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Standard { alpha } => format!("standard(alpha={alpha})"),
            Kind::Custom { label, .. } => format!("custom({label})"),
            Kind::Table { spline } => format!("custom-table({} samples)", spline.knots().count()),
        }
    }

    /// `ω(r)` without domain checks. Callers guarantee `0 ≤ r < 1`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Standard { alpha } => {
                if *alpha == 0.0 {
                    1.0
                } else {
                    one_minus_sq(r).powf(*alpha)
                }
            }
            Kind::Custom { eval, .. } => eval(r),
            Kind::Table { spline } => spline.eval3(r)[0],
        }
    }

    /// `ω(r)` given `gap = 1 - r` exactly, for evaluation at the rim.
    fn value_with_gap(&self, r: f64, gap: f64) -> f64 {
        match &self.kind {
            Kind::Standard { alpha } if *alpha != 0.0 => (gap * (2.0 - gap)).powf(*alpha),
            _ => self.value(r),
        }
    }

    pub fn deriv1(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Standard { alpha } => {
                if *alpha == 0.0 {
                    0.0
                } else {
                    -2.0 * alpha * r * one_minus_sq(r).powf(alpha - 1.0)
                }
            }
            Kind::Custom { derivs: Some((d1, _)), .. } => d1(r),
            Kind::Custom { eval, derivs: None, .. } => {
                let h = fd_step(r);
                (eval(r + h) - eval((r - h).abs())) / (2.0 * h)
            }
            Kind::Table { spline } => spline.eval3(r)[1],
        }
    }

    pub fn deriv2(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Standard { alpha } => {
                if *alpha == 0.0 {
                    0.0
                } else {
                    let s = one_minus_sq(r);
                    -2.0 * alpha * s.powf(alpha - 1.0) + 4.0 * alpha * (alpha - 1.0) * r * r * s.powf(alpha - 2.0)
                }
            }
            Kind::Custom { derivs: Some((_, d2)), .. } => d2(r),
            Kind::Custom { eval, derivs: None, .. } => {
                let h = fd_step(r);
                (eval(r + h) - 2.0 * eval(r) + eval((r - h).abs())) / (h * h)
            }
            Kind::Table { spline } => spline.eval3(r)[2],
        }
    }
}

// Shrinks the step near r = 1 so the stencil stays inside the domain.
fn fd_step(r: f64) -> f64 {
    FD_STEP.min((1.0 - r) / 4.0)
}

/// Derivative order for [`eval_weight`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    First,
    Second,
}

/// `ω(r)`, `ω'(r)` or `ω''(r)` with the domain `0 ≤ r < 1` enforced.
pub fn eval_weight(w: &Weight, r: f64, order: Order) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(CopopError::Domain {
            what: "r",
            value: r,
            domain: "[0, 1)",
        });
    }
    Ok(match order {
        Order::Value => w.value(r),
        Order::First => w.deriv1(r),
        Order::Second => w.deriv2(r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFamilyTag {
    Standard,
    CustomTable,
}

/// Serialized form of a weight, as found in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightDescriptor {
    pub family: WeightFamilyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
}

impl WeightDescriptor {
    pub fn standard(alpha: f64) -> Self {
        Self {
            family: WeightFamilyTag::Standard,
            alpha: Some(alpha),
            samples: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Admissibility

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum W4Kind {
    #[serde(rename = "type-I")]
    TypeI,
    #[serde(rename = "type-II")]
    TypeII,
    #[serde(rename = "fails")]
    Fails,
}

/// Worst-case slack per condition; non-positive means satisfied strictly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityMargins {
    /// Largest relative increase of `ω` between neighbouring samples.
    pub w1: f64,
    /// Largest relative decrease of `ω(r)(1-r)^{-(1+δ)}` for the recorded δ
    /// (or the best candidate when none passes).
    pub w2: f64,
    /// `ω(r_max) / ω(0)` on the sample grid.
    pub w3: f64,
    /// Fitted power-law decay rate of `ω` over the last decades.
    pub w3_tail_rate: f64,
    /// `min ω''` on `[r₀, 1)`, scaled by `max(1, max |ω''|)`.
    pub w4_min_second: f64,
    /// `max ω''` on `[r₀, 1)`, same scaling.
    pub w4_max_second: f64,
    /// `|ω'(r_max)|` at the end of the grid.
    pub w4_derivative_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub w1: bool,
    pub w2: bool,
    pub delta: Option<f64>,
    pub w3: bool,
    pub w4: W4Kind,
    pub r0: f64,
    pub admissible: bool,
    pub margins: AdmissibilityMargins,
}

/// Points `1 - (1-lo)·10^{-8t}`, `t ∈ [0, 1]`, clustered toward `r = 1`.
pub fn boundary_grid(lo: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            1.0 - (1.0 - lo) * 10f64.powf(-GRID_DECADES * t)
        })
        .collect()
}

// Power-law decay rate of |f| over the last decades before r = 1.
fn tail_decay_rate(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let near = 1.0 - 10f64.powf(-(GRID_DECADES - 3.0));
    let far = 1.0 - 10f64.powf(-GRID_DECADES);
    let (a, b) = (f(near).abs(), f(far).abs());
    let rate = if a > 0.0 && b > 0.0 { (a / b).log10() / 3.0 } else if b == 0.0 { f64::INFINITY } else { 0.0 };
    (rate, b)
}

/// Sample-based check of the conditions (W1)–(W4).
///
/// W4 is certified on `[r0, 1)`. The first `δ` in `delta_candidates` for
/// which `ω(r)(1-r)^{-(1+δ)}` is non-decreasing is recorded.
pub fn check_admissible(
    w: &Weight,
    grid_size: usize,
    delta_candidates: &[f64],
    r0: f64,
) -> Result<AdmissibilityReport> {
    if grid_size < 100 {
        return Err(CopopError::InvalidArgument(format!("grid_size {grid_size} < 100")));
    }
    if !(0.0..1.0).contains(&r0) {
        return Err(CopopError::Domain {
            what: "r0",
            value: r0,
            domain: "[0, 1)",
        });
    }
    let grid = boundary_grid(0.0, grid_size);
    let vals: Vec<f64> = grid.iter().map(|&r| w.value(r)).collect();

    let w1_margin = vals
        .windows(2)
        .map(|p| (p[1] - p[0]) / p[0].abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let w1 = w1_margin <= CHECK_SLACK;

    let mut delta = None;
    let mut w2_margin = f64::INFINITY;
    for &d in delta_candidates.iter().filter(|d| **d > 0.0) {
        let g: Vec<f64> = grid
            .iter()
            .zip(&vals)
            .map(|(&r, &v)| v * (1.0 - r).powf(-(1.0 + d)))
            .collect();
        let margin = g
            .windows(2)
            .map(|p| (p[0] - p[1]) / p[0].abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max);
        if margin <= CHECK_SLACK {
            delta = Some(d);
            w2_margin = margin;
            break;
        }
        w2_margin = w2_margin.min(margin);
    }

    let (w3_rate, _) = tail_decay_rate(|r| w.value(r));
    let w3_ratio = vals[vals.len() - 1] / vals[0];
    let w3 = w3_ratio <= 1e-6 || (w3_rate >= 0.01 && w3_ratio < 1.0);

    let w4_grid = boundary_grid(r0, grid_size);
    let second: Vec<f64> = w4_grid.iter().map(|&r| w.deriv2(r)).collect();
    let scale = second.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let min2 = second.iter().copied().fold(f64::INFINITY, f64::min) / scale;
    let max2 = second.iter().copied().fold(f64::NEG_INFINITY, f64::max) / scale;
    let d1_scale = w4_grid.iter().fold(0.0f64, |m, &r| m.max(w.deriv1(r).abs()));
    let (d1_rate, d1_tail) = tail_decay_rate(|r| w.deriv1(r));
    let derivative_vanishes = d1_tail <= 1e-10 || d1_tail <= 1e-3 * d1_scale || d1_rate >= 0.01;
    let w4 = if min2 >= -CHECK_SLACK && derivative_vanishes {
        W4Kind::TypeI
    } else if max2 <= CHECK_SLACK {
        W4Kind::TypeII
    } else {
        W4Kind::Fails
    };

    Ok(AdmissibilityReport {
        w1,
        w2: delta.is_some(),
        delta,
        w3,
        w4,
        r0,
        admissible: w1 && delta.is_some() && w3 && w4 != W4Kind::Fails,
        margins: AdmissibilityMargins {
            w1: w1_margin,
            w2: w2_margin,
            w3: w3_ratio,
            w3_tail_rate: w3_rate,
            w4_min_second: min2,
            w4_max_second: max2,
            w4_derivative_tail: d1_tail,
        },
    })
}

/// Dyadic boundary ratios `ω(1-2^{-k-1}) / ω(1-2^{-k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Report {
    pub ratios: Vec<f64>,
    pub infimum: f64,
    /// Largest `k` at which both weight values were positive normal numbers.
    pub last_usable_k: usize,
    /// Whether the scan stopped before `kmax` because `ω` underflowed.
    pub underflowed: bool,
    pub holds: bool,
}

/// Ratios below this are read as "not bounded away from zero".
pub const L1_FLOOR: f64 = 1e-6;

pub fn check_l1(w: &Weight, kmax: usize) -> Result<L1Report> {
    if !(10..=51).contains(&kmax) {
        return Err(CopopError::InvalidArgument(format!(
            "kmax = {kmax} must lie in [10, 51] so that 1 - 2^(-kmax-1) < 1"
        )));
    }
    let at = |k: usize| w.value(1.0 - 0.5f64.powi(k as i32));
    let mut ratios = Vec::with_capacity(kmax + 1);
    let mut underflowed = false;
    for k in 0..=kmax {
        let (num, den) = (at(k + 1), at(k));
        if !(num.is_normal() && num > 0.0 && den.is_normal() && den > 0.0) {
            underflowed = true;
            break;
        }
        ratios.push(num / den);
    }
    let infimum = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let last_usable_k = ratios.len().saturating_sub(1);
    Ok(L1Report {
        holds: !underflowed && !ratios.is_empty() && infimum >= L1_FLOOR,
        infimum,
        last_usable_k,
        underflowed,
        ratios,
    })
}

// ---------------------------------------------------------------------------
// Moments

/// Moment sequences `ωₙ` and `pₙ` for `0 ≤ n ≤ nmax`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub nmax: usize,
    pub omega_n: Vec<f64>,
    pub p_n: Vec<f64>,
    /// Largest relative change between the last two refinement levels.
    pub quadrature_error: f64,
    pub radial_nodes: usize,
    /// For standard weights: largest relative deviation from the Beta
    /// closed forms.
    pub closed_form_deviation: Option<f64>,
}

impl MomentTable {
    #[inline]
    pub fn omega(&self, n: usize) -> f64 {
        self.omega_n[n]
    }

    #[inline]
    pub fn p(&self, n: usize) -> f64 {
        self.p_n[n]
    }

    /// CSV with header `n,omega_n,p_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,omega_n,p_n\n");
        for n in 0..=self.nmax {
            out.push_str(&format!(
                "{n},{},{}\n",
                crate::fmt_f64(self.omega_n[n]),
                crate::fmt_f64(self.p_n[n])
            ));
        }
        out
    }
}

pub const MOMENT_TOLERANCE: f64 = 1e-12;
pub const MAX_MOMENT_NODES: usize = 1 << 14;

// Integrand map r = 1 - (1-u)^4 concentrates nodes at r = 1 and absorbs the
// (1-r)^α endpoint behaviour of standard weights.
fn moment_nodes(w: &Weight, nodes: usize) -> Vec<(f64, f64)> {
    // r = 1 - s^q with q chosen so a (1-r²)^α singularity becomes s³
    let q = match w.standard_alpha() {
        Some(alpha) if alpha < 0.0 => 4.0 / (alpha + 1.0),
        _ => 4.0,
    };
    unit_gauss_legendre(nodes)
        .iter()
        .map(|&(u, wt)| {
            let s = 1.0 - u;
            let gap = s.powf(q);
            let r = 1.0 - gap;
            (r, 2.0 * wt * q * s.powf(q - 1.0) * w.value_with_gap(r, gap))
        })
        .collect()
}

fn moments_with(rule: &[(f64, f64)], nmax: usize) -> Vec<f64> {
    (0..=nmax)
        .into_par_iter()
        .map(|n| {
            let e = (2 * n + 1) as i32;
            let terms: Vec<f64> = rule.iter().map(|&(r, w)| w * r.powi(e)).collect();
            pairwise_sum(&terms)
        })
        .collect()
}

/// `pₙ = B(n+1, α+1)` for `ω_α`, via the product recurrence.
pub fn standard_p_closed_form(alpha: f64, nmax: usize) -> Vec<f64> {
    let b = alpha + 1.0;
    let mut out = Vec::with_capacity(nmax + 1);
    let mut beta = 1.0 / b;
    out.push(beta);
    for n in 1..=nmax {
        beta *= n as f64 / (n as f64 + b);
        out.push(beta);
    }
    out
}

/// Computes `ωₙ`, `pₙ` by Gauss–Legendre quadrature, doubling the rule
/// (starting from `radial_nodes`) until successive levels agree.
pub fn compute_moments(w: &Weight, nmax: usize, radial_nodes: usize) -> Result<MomentTable> {
    if nmax < 1 {
        return Err(CopopError::InvalidArgument("nmax must be at least 1".into()));
    }
    let mut nodes = radial_nodes.clamp(8, MAX_MOMENT_NODES);
    let mut coarse = moments_with(&moment_nodes(w, nodes), nmax);
    let (p_n, err, used) = loop {
        let fine_nodes = 2 * nodes;
        let fine = moments_with(&moment_nodes(w, fine_nodes), nmax);
        let err = fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| ((f - c) / f).abs())
            .fold(0.0f64, f64::max);
        if err <= MOMENT_TOLERANCE {
            break (fine, err, fine_nodes);
        }
        if fine_nodes >= MAX_MOMENT_NODES {
            if err <= 1e-10 {
                break (fine, err, fine_nodes);
            }
            return Err(CopopError::QuadratureRefinement {
                nodes: fine_nodes,
                achieved: err,
            });
        }
        nodes = fine_nodes;
        coarse = fine;
    };
    if p_n.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(CopopError::InvalidWeight("moments are not positive and finite".into()));
    }
    let mut omega_n = Vec::with_capacity(nmax + 1);
    omega_n.push(1.0);
    for n in 1..=nmax {
        omega_n.push((n * n) as f64 * p_n[n - 1]);
    }
    let closed_form_deviation = w.standard_alpha().map(|alpha| {
        standard_p_closed_form(alpha, nmax)
            .iter()
            .zip(&p_n)
            .map(|(e, p)| ((p - e) / e).abs())
            .fold(0.0f64, f64::max)
    });
    Ok(MomentTable {
        nmax,
        omega_n,
        p_n,
        quadrature_error: err,
        radial_nodes: used,
        closed_form_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(alpha: f64) -> Weight {
        Weight::standard(alpha).unwrap()
    }

    #[test]
    fn standard_values_and_derivatives() {
        assert_eq!(eval_weight(&w(1.0), 0.0, Order::Value).unwrap(), 1.0);
        assert!((eval_weight(&w(1.0), 0.5, Order::Value).unwrap() - 0.75).abs() < 1e-15);
        // d²/dr²(1 - r²) = -2
        assert!((eval_weight(&w(1.0), 0.5, Order::Second).unwrap() + 2.0).abs() < 1e-14);
        assert!(matches!(
            eval_weight(&w(1.0), 1.0, Order::Value),
            Err(CopopError::Domain { .. })
        ));
        assert!(eval_weight(&w(1.0), -0.1, Order::First).is_err());
        assert!(Weight::standard(-1.0).is_err());
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let h = 1e-5;
        for alpha in [0.5, 1.0, 2.0, 3.5] {
            let wt = w(alpha);
            for i in 1..40 {
                let r = i as f64 / 41.0;
                let fd1 = (wt.value(r + h) - wt.value(r - h)) / (2.0 * h);
                let fd2 = (wt.value(r + h) - 2.0 * wt.value(r) + wt.value(r - h)) / (h * h);
                let d1 = wt.deriv1(r);
                let d2 = wt.deriv2(r);
                assert!((fd1 - d1).abs() <= 1e-4 * d1.abs().max(1.0), "α={alpha} r={r}");
                assert!((fd2 - d2).abs() <= 1e-4 * d2.abs().max(1.0), "α={alpha} r={r}");
            }
        }
    }

    #[test]
    fn custom_weight_uses_central_differences() {
        let c = Weight::custom("1-r^2", |r| 1.0 - r * r);
        assert_eq!(c.derivative_scheme(), DerivativeScheme::CentralDifference);
        assert!((c.deriv1(0.3) + 0.6).abs() < 1e-8);
        assert!((c.deriv2(0.3) + 2.0).abs() < 1e-4);
        // radial symmetry at the origin
        assert!(c.deriv1(0.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_weight_is_smoothed_and_validated() {
        let samples: Vec<(f64, f64)> = (0..=100).map(|i| i as f64 / 100.0).map(|r| (r, 1.0 - r * r + 0.01)).collect();
        let t = Weight::from_samples(&samples).unwrap();
        assert!(t.is_smoothed());
        assert!((t.value(0.505) - (1.0 - 0.505f64.powi(2) + 0.01)).abs() < 1e-6);
        assert!(Weight::from_samples(&[(0.0, 1.0), (0.5, 1.0)]).is_err());
        assert!(Weight::from_samples(&[(0.0, 1.0), (0.5, -1.0), (1.0, 1.0)]).is_err());
        assert!(Weight::from_samples(&[(0.0, 1.0), (0.6, 0.5), (0.5, 0.4), (1.0, 0.1)]).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let r = check_admissible(&w(1.0), DEFAULT_GRID_SIZE, &DEFAULT_DELTA_CANDIDATES, 0.0).unwrap();
        assert!(r.w1 && r.w2 && r.w3);
        assert_eq!(r.w4, W4Kind::TypeII);
        assert_eq!(r.delta, Some(0.1));
        assert!(r.admissible);

        let r = check_admissible(&w(0.0), DEFAULT_GRID_SIZE, &DEFAULT_DELTA_CANDIDATES, 0.0).unwrap();
        assert!(!r.w3);
        assert!(!r.admissible);

        // ω₂'' = 12r² - 4 changes sign at 1/√3
        let r = check_admissible(&w(2.0), DEFAULT_GRID_SIZE, &DEFAULT_DELTA_CANDIDATES, 0.6).unwrap();
        assert_eq!(r.w4, W4Kind::TypeI);
        assert_eq!(r.delta, Some(1.0));
        let r = check_admissible(&w(2.0), DEFAULT_GRID_SIZE, &DEFAULT_DELTA_CANDIDATES, 0.0).unwrap();
        assert_eq!(r.w4, W4Kind::Fails);

        assert!(check_admissible(&w(1.0), 50, &DEFAULT_DELTA_CANDIDATES, 0.0).is_err());
        assert!(check_admissible(&w(1.0), 200, &DEFAULT_DELTA_CANDIDATES, 1.0).is_err());
    }

    #[test]
    fn report_invariants() {
        for alpha in [0.0, 0.5, 1.0, 2.0, 3.0] {
            for r0 in [0.0, 0.6, 0.9] {
                let r = check_admissible(&w(alpha), 1000, &DEFAULT_DELTA_CANDIDATES, r0).unwrap();
                assert_eq!(r.w2, r.delta.map_or(false, |d| d > 0.0));
                if r.w4 == W4Kind::TypeI {
                    assert!(r.margins.w4_min_second >= -CHECK_SLACK);
                }
            }
        }
    }

    #[test]
    fn l1_examples() {
        for alpha in [0.5, 1.0, 2.0] {
            let r = check_l1(&w(alpha), 40).unwrap();
            let limit = 2f64.powf(-alpha);
            assert!(r.holds);
            assert!(r.infimum >= limit * (1.0 - 1e-9));
            assert!((r.ratios.last().unwrap() - limit).abs() < 1e-6);
        }
        let c = check_l1(&w(0.0), 20).unwrap();
        assert!(c.ratios.iter().all(|&x| x == 1.0));
        assert!(c.holds);

        let e = check_l1(&Weight::custom("exp", |r| (-1.0 / (1.0 - r)).exp()), 30).unwrap();
        assert!(!e.holds && e.underflowed);
        for (k, ratio) in e.ratios.iter().enumerate() {
            let expected = (-(2f64.powi(k as i32))).exp();
            assert!((ratio - expected).abs() <= 1e-9 * expected, "k={k}");
        }
        assert!(check_l1(&w(1.0), 5).is_err());
    }

    #[test]
    fn moments_small_cases() {
        let m = compute_moments(&w(0.0), 5, 64).unwrap();
        assert!((m.omega(5) - 5.0).abs() < 1e-13);
        assert!((m.p(5) - 1.0 / 6.0).abs() < 1e-15);
        let m = compute_moments(&w(1.0), 3, 64).unwrap();
        assert!((m.omega(1) - 0.5).abs() < 1e-15);
        assert_eq!(m.omega(0), 1.0);
        assert!(compute_moments(&w(1.0), 0, 64).is_err());
    }

    #[test]
    fn moment_csv_header() {
        let m = compute_moments(&w(0.0), 2, 32).unwrap();
        let csv = m.to_csv();
        assert!(csv.starts_with("n,omega_n,p_n\n0,1,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn custom_weight_moments() {
        let c = Weight::custom("exp", |r| (-1.0 / (1.0 - r)).exp());
        let m = compute_moments(&c, 50, 64).unwrap();
        assert!(m.p_n.windows(2).all(|p| p[1] < p[0]));
        assert!(m.closed_form_deviation.is_none());
    }
}
