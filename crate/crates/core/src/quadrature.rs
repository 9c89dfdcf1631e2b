//! Polar product rules on subsets of the unit disk: Gauss–Legendre in the
//! radial variable, uniform trapezoid in the angle.
//!
//! All area integrals are taken against the normalized measure
//! `dA = dx dy / π`; the weighted measure is `ω(|z|) dA` and the hyperbolic
//! measure is `dλ = (1 - |z|²)^{-2} dA`.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;

use crate::selfmaps::sigma;
use crate::weights::Weight;
use crate::{one_minus_sq, pairwise_sum, CopopError, Result, C64};

/// Regions reaching beyond this modulus get boundary-clustered radial nodes.
pub const CLUSTER_THRESHOLD: f64 = 0.9;

type Rule = Arc<[(f64, f64)]>;

/// Gauss–Legendre nodes and weights on `[0, 1]` (weights sum to one),
/// cached per size.
pub(crate) fn unit_gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let gl = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
    let mut pairs: Vec<(f64, f64)> = gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rule: Rule = pairs.into();
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureRule {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl QuadratureRule {
    pub fn new(radial_nodes: usize, angular_nodes: usize) -> Result<Self> {
        if radial_nodes < 2 || angular_nodes < 2 {
            return Err(CopopError::InvalidArgument(format!(
                "quadrature rule needs at least 2 radial and 2 angular nodes, got {radial_nodes}×{angular_nodes}"
            )));
        }
        Ok(Self {
            radial_nodes,
            angular_nodes,
        })
    }

    pub fn doubled(&self) -> Self {
        Self {
            radial_nodes: 2 * self.radial_nodes,
            angular_nodes: 2 * self.angular_nodes,
        }
    }

    fn halved(&self) -> Self {
        Self {
            radial_nodes: (self.radial_nodes / 2).max(2),
            angular_nodes: (self.angular_nodes / 2).max(2),
        }
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            radial_nodes: 96,
            angular_nodes: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `|z| < radius`, `radius ≤ 1`.
    Disk { radius: f64 },
    /// `inner < |z| < outer`, `outer ≤ 1`.
    Annulus { inner: f64, outer: f64 },
    /// Euclidean disk `|z - center| < radius` compactly inside the unit disk.
    EuclideanDisk { center: C64, radius: f64 },
    /// Pseudo-hyperbolic disk `Δ(a, r) = {z : |σ_a(z)| < r}`.
    PseudoHyperbolic { a: C64, r: f64 },
}

impl Region {
    // (center, radial interval, largest modulus reached)
    fn polar(&self) -> Result<(C64, f64, f64, f64)> {
        let zero = C64::new(0.0, 0.0);
        match *self {
            Region::Disk { radius } => {
                if !(radius > 0.0 && radius <= 1.0) {
                    return Err(CopopError::Geometry(format!("disk radius {radius} not in (0, 1]")));
                }
                Ok((zero, 0.0, radius, radius))
            }
            Region::Annulus { inner, outer } => {
                if !(inner >= 0.0 && inner < outer && outer <= 1.0) {
                    return Err(CopopError::Geometry(format!("annulus ({inner}, {outer}) invalid")));
                }
                Ok((zero, inner, outer, outer))
            }
            Region::EuclideanDisk { center, radius } => {
                let far = center.norm() + radius;
                if !(radius > 0.0) || !(far < 1.0) {
                    return Err(CopopError::Geometry(format!(
                        "disk D({center}, {radius}) is not inside the unit disk"
                    )));
                }
                Ok((center, 0.0, radius, far))
            }
            Region::PseudoHyperbolic { a, r } => {
                let (center, radius) = pseudo_hyperbolic_params(a, r)?;
                Ok((center, 0.0, radius, center.norm() + radius))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Measure<'a> {
    Area,
    Weighted(&'a Weight),
    Hyperbolic,
}

impl Measure<'_> {
    #[inline]
    fn density(&self, z: C64) -> f64 {
        match self {
            Measure::Area => 1.0,
            Measure::Weighted(w) => w.value(z.norm()),
            Measure::Hyperbolic => {
                let s = one_minus_sq(z.norm());
                1.0 / (s * s)
            }
        }
    }
}

/// Integral value with the change against the rule at half resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

fn evaluate<F>(f: &F, region: &Region, rule: QuadratureRule, measure: Measure<'_>) -> Result<f64>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    let (center, lo, hi, far) = region.polar()?;
    let cluster = far > CLUSTER_THRESHOLD;
    let radial = unit_gauss_legendre(rule.radial_nodes);
    let na = rule.angular_nodes;
    let rows: Vec<Vec<f64>> = radial
        .par_iter()
        .map(|&(u, wu)| {
            let (t, jac) = if cluster {
                let v = 1.0 - u;
                (1.0 - v * v, 2.0 * v)
            } else {
                (u, 1.0)
            };
            let s = lo + (hi - lo) * t;
            let ring = 2.0 * s * (hi - lo) * jac * wu / na as f64;
            (0..na)
                .map(|j| {
                    let theta = TAU * (j as f64 + 0.5) / na as f64;
                    let z = center + C64::from_polar(s, theta);
                    let v = f(z)?;
                    if !v.is_finite() {
                        return Err(CopopError::NonFinite { re: z.re, im: z.im });
                    }
                    Ok(v * ring * measure.density(z))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(pairwise_sum(&flat))
}

/// Integrates a fallible pointwise map over `region`.
pub fn try_integrate<F>(f: F, region: &Region, rule: QuadratureRule, measure: Measure<'_>) -> Result<Integral>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    let value = evaluate(&f, region, rule, measure)?;
    let coarse = evaluate(&f, region, rule.halved(), measure)?;
    Ok(Integral {
        value,
        error: (value - coarse).abs(),
    })
}

pub fn integrate<F>(f: F, region: &Region, rule: QuadratureRule, measure: Measure<'_>) -> Result<Integral>
where
    F: Fn(C64) -> f64 + Sync,
{
    try_integrate(|z| Ok(f(z)), region, rule, measure)
}

/// Cumulative integrals over `|z| < R` for an increasing list of radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub errors: Vec<f64>,
}

/// Integrates over `|z| < R` for every `R` in `radii`, assembling each value
/// from annular pieces. Radii in `breakpoints` (where the integrand may have
/// a kink or jump) become piece boundaries.
pub fn integrate_over_radii<F>(
    f: F,
    radii: &[f64],
    breakpoints: &[f64],
    rule: QuadratureRule,
    measure: Measure<'_>,
) -> Result<RadialProfile>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(CopopError::InvalidArgument("radii must be positive and strictly increasing".into()));
    }
    let rmax = *radii.last().unwrap();
    let mut edges: Vec<f64> = radii.to_vec();
    edges.extend(breakpoints.iter().copied().filter(|&b| b > 0.0 && b < rmax));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    let mut cumulative = Vec::with_capacity(radii.len());
    let mut errors = Vec::with_capacity(radii.len());
    let (mut total, mut total_err, mut inner) = (0.0, 0.0, 0.0);
    let mut next = 0;
    for &outer in &edges {
        let region = if inner == 0.0 {
            Region::Disk { radius: outer }
        } else {
            Region::Annulus { inner, outer }
        };
        let piece = try_integrate(&f, &region, rule, measure)?;
        total += piece.value;
        total_err += piece.error;
        inner = outer;
        if next < radii.len() && (outer - radii[next]).abs() <= 1e-15 {
            cumulative.push(total);
            errors.push(total_err);
            next += 1;
        }
    }
    Ok(RadialProfile {
        radii: radii.to_vec(),
        cumulative,
        errors,
    })
}

/// Euclidean center and radius of `Δ(a, r)`.
pub fn pseudo_hyperbolic_params(a: C64, r: f64) -> Result<(C64, f64)> {
    if !(a.norm() < 1.0) {
        return Err(CopopError::Domain {
            what: "|a|",
            value: a.norm(),
            domain: "[0, 1)",
        });
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(CopopError::Domain {
            what: "r",
            value: r,
            domain: "(0, 1)",
        });
    }
    let a2 = a.norm_sqr();
    let den = 1.0 - r * r * a2;
    let center = a * ((1.0 - r * r) / den);
    let radius = (1.0 - a2) * r / den;
    for k in 0..16 {
        let z = center + C64::from_polar(radius, TAU * k as f64 / 16.0);
        let m = sigma(a, z).norm();
        if (m - r).abs() > 1e-10 {
            return Err(CopopError::Geometry(format!(
                "pseudo-hyperbolic boundary check failed: |σ_a| = {m} at {z}, expected {r}"
            )));
        }
    }
    Ok((center, radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule() -> QuadratureRule {
        QuadratureRule::new(48, 64).unwrap()
    }

    #[test]
    fn unit_rule_is_normalized() {
        let r = unit_gauss_legendre(37);
        let total: f64 = r.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-14);
        // exact for x^5
        let m5: f64 = r.iter().map(|&(x, w)| w * x.powi(5)).sum();
        assert!((m5 - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_and_second_moment() {
        let one = integrate(|_| 1.0, &Region::Disk { radius: 1.0 }, rule(), Measure::Area).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12);
        let m2 = integrate(|z| z.norm_sqr(), &Region::Disk { radius: 1.0 }, rule(), Measure::Area).unwrap();
        assert!((m2.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_disk_mass() {
        let h = integrate(|_| 1.0, &Region::Disk { radius: 0.5 }, rule(), Measure::Hyperbolic).unwrap();
        assert!((h.value - 1.0 / 3.0).abs() < 1e-12);
        for r in [0.9, 0.99] {
            let h = integrate(|_| 1.0, &Region::Disk { radius: r }, QuadratureRule::new(128, 8).unwrap(), Measure::Hyperbolic)
                .unwrap();
            let exact = r * r / (1.0 - r * r);
            assert!(((h.value - exact) / exact).abs() < 1e-8, "R={r}: {} vs {exact}", h.value);
        }
    }

    #[test]
    fn weighted_measure() {
        let w = Weight::standard(1.0).unwrap();
        // ∫ (1 - |z|²) dA = 1/2
        let v = integrate(|_| 1.0, &Region::Disk { radius: 1.0 }, rule(), Measure::Weighted(&w)).unwrap();
        assert!((v.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pseudo_hyperbolic_geometry() {
        let (c, r) = pseudo_hyperbolic_params(C64::new(0.0, 0.0), 0.5).unwrap();
        assert_eq!((c, r), (C64::new(0.0, 0.0), 0.5));
        // Δ(0.5, 0.5) meets the real axis at 0 and 0.8
        let (c, r) = pseudo_hyperbolic_params(C64::new(0.5, 0.0), 0.5).unwrap();
        assert!((c.re - 0.4).abs() < 1e-15 && c.im == 0.0);
        assert!((r - 0.4).abs() < 1e-15);
        let (_, r) = pseudo_hyperbolic_params(C64::new(0.999, 0.0), 0.5).unwrap();
        assert!(r < (1.0 - 0.999f64.powi(2)) * 0.5 / 0.75 + 1e-12);
        assert!(pseudo_hyperbolic_params(C64::new(1.0, 0.0), 0.5).is_err());
        assert!(pseudo_hyperbolic_params(C64::new(0.1, 0.0), 1.0).is_err());
    }

    #[test]
    fn area_of_pseudo_hyperbolic_disk() {
        for (a, r) in [(C64::new(0.3, 0.4), 0.5), (C64::new(-0.9, 0.0), 0.3), (C64::new(0.0, 0.7), 0.8)] {
            let (_, rho) = pseudo_hyperbolic_params(a, r).unwrap();
            let area = integrate(|_| 1.0, &Region::PseudoHyperbolic { a, r }, rule(), Measure::Area).unwrap();
            assert!((area.value - rho * rho).abs() <= area.error.max(1e-13));
        }
    }

    #[test]
    fn region_validation() {
        let bad = [
            Region::Disk { radius: 1.2 },
            Region::Annulus { inner: 0.5, outer: 0.4 },
            Region::EuclideanDisk { center: C64::new(0.8, 0.0), radius: 0.3 },
        ];
        for region in bad {
            assert!(matches!(
                integrate(|_| 1.0, &region, rule(), Measure::Area),
                Err(CopopError::Geometry(_))
            ));
        }
        assert!(QuadratureRule::new(1, 10).is_err());
    }

    #[test]
    fn non_finite_samples_are_located() {
        let err = integrate(|z| if z.re > 0.5 { f64::NAN } else { 1.0 }, &Region::Disk { radius: 1.0 }, rule(), Measure::Area)
            .unwrap_err();
        match err {
            CopopError::NonFinite { re, .. } => assert!(re > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cumulative_radii_with_breakpoint() {
        // indicator of |z| < 0.5: exact with a breakpoint
        let f = |z: C64| Ok(if z.norm() < 0.5 { 1.0 } else { 0.0 });
        let prof = integrate_over_radii(f, &[0.6, 0.9, 0.99], &[0.5], rule(), Measure::Area).unwrap();
        for v in &prof.cumulative {
            assert!((v - 0.25).abs() < 1e-14);
        }
        assert!(integrate_over_radii(f, &[0.9, 0.6], &[], rule(), Measure::Area).is_err());
    }

    #[test]
    fn refinement_invariant_on_regression_corpus() {
        let corpus: Vec<Box<dyn Fn(C64) -> f64 + Sync>> = vec![
            Box::new(|_| 1.0),
            Box::new(|z| z.norm_sqr()),
            Box::new(|z| z.re + 1.0),
            Box::new(|z| (z.re * 3.0).cos() + 2.0),
            Box::new(|z| (z.norm_sqr() * 2.0).exp()),
            Box::new(|z| z.im * z.im * z.re.abs()),
            Box::new(|z| 1.0 / (1.5 - z.re)),
            Box::new(|z| (1.0 - z.norm_sqr()).sqrt()),
            Box::new(|z| z.norm().powi(7)),
            Box::new(|z| (z * z).re + 1.0),
            Box::new(|z| 1.0 / (1.0 + 4.0 * z.norm_sqr())),
            Box::new(|z| (z.arg()).sin().powi(2)),
            Box::new(|z| (1.0 - z.norm()).powi(3)),
            Box::new(|z| z.re.powi(4) + z.im.powi(2)),
            Box::new(|z| (z.re + z.im).abs()),
            Box::new(|z| (-(z - 0.5).norm_sqr() * 4.0).exp()),
            Box::new(|z| z.norm().ln_1p()),
            Box::new(|z| 1.0 / (2.0 - z.norm())),
            Box::new(|z| (z.re * 5.0).sin().powi(2)),
            Box::new(|z| (z.powu(3)).norm()),
        ];
        let rule = QuadratureRule::new(32, 64).unwrap();
        for (i, f) in corpus.iter().enumerate() {
            for region in [Region::Disk { radius: 0.8 }, Region::Annulus { inner: 0.2, outer: 0.95 }] {
                let a = integrate(f, &region, rule, Measure::Area).unwrap();
                let b = integrate(f, &region, rule.doubled(), Measure::Area).unwrap();
                assert!(
                    (a.value - b.value).abs() <= a.error.max(1e-14),
                    "integrand {i} on {region:?}: |Δ| = {:e}, estimate {:e}",
                    (a.value - b.value).abs(),
                    a.error
                );
            }
        }
    }
}
