//! Analytic self-maps of the unit disk.
//!
//! Every supported family is a rational function `φ = N/D` whose
//! denominator has no zeros in the closed disk, which gives uniform
//! preimage solving (roots of `N - zD`) and power-series expansion
//! (division by `D`). Closed forms are used where they exist.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::poly::{self, axpy, find_roots, horner, multiply};
use crate::{CopopError, Result, C64};

/// Boundary samples used by [`validate_selfmap`].
pub const BOUNDARY_SAMPLES: usize = 2048;
/// Slack on `sup |φ(e^{it})| ≤ 1`.
pub const BOUNDARY_SLACK: f64 = 1e-12;
/// Roots with modulus at least `1 - ROOT_EDGE` are not in the open disk.
pub const ROOT_EDGE: f64 = 1e-14;
/// Required `|φ(a) - z|` for an accepted preimage.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Roots closer than this (relative) are merged into one with multiplicity.
pub const CLUSTER_TOLERANCE: f64 = 1e-5;
/// `z` within this distance of `φ(0)` is flagged.
pub const PHI0_TOLERANCE: f64 = 1e-12;

/// `σ_a(z) = (a - z) / (1 - ā z)`, an involutive automorphism of the disk.
#[inline]
pub fn sigma(a: C64, z: C64) -> C64 {
    (a - z) / (1.0 - a.conj() * z)
}

/// `σ_a'(z) = (|a|² - 1) / (1 - ā z)²`.
#[inline]
pub fn sigma_deriv(a: C64, z: C64) -> C64 {
    let d = 1.0 - a.conj() * z;
    (a.norm_sqr() - 1.0) / (d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapFamily {
    Polynomial,
    Dilation,
    Moebius,
    Blaschke,
    /// `e^{iθ} σ_a ∘ ψ` for another supported map `ψ`.
    Composed,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Polynomial(Vec<C64>),
    Dilation(C64),
    Moebius { a: C64, theta: f64 },
    Blaschke { zeros: Vec<C64>, theta: f64 },
    Composed { a: C64, theta: f64, inner: Box<SelfMap> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfMap {
    kind: Kind,
    num: Vec<C64>,
    den: Vec<C64>,
    degree: usize,
}

fn unimodular(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

fn check_in_disk(what: &'static str, a: C64) -> Result<()> {
    if !(a.norm() < 1.0) || !a.is_finite() {
        return Err(CopopError::InvalidMap(format!("{what} = {a} must lie in the open unit disk")));
    }
    Ok(())
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

impl SelfMap {
    fn build(kind: Kind) -> Self {
        let (num, den, degree) = match &kind {
            Kind::Polynomial(c) => {
                let c = poly::trim(c);
                let d = poly::degree(&c).unwrap_or(0);
                (c, vec![one()], d)
            }
            Kind::Dilation(l) => (vec![C64::new(0.0, 0.0), *l], vec![one()], usize::from(l.norm() > 0.0)),
            Kind::Moebius { a, theta } => {
                let u = unimodular(*theta);
                (vec![u * a, -u], vec![one(), -a.conj()], 1)
            }
            Kind::Blaschke { zeros, theta } => {
                let u = unimodular(*theta);
                let num = zeros.iter().fold(vec![u], |acc, &a| multiply(&acc, &[-a, one()]));
                let den = zeros.iter().fold(vec![one()], |acc, &a| multiply(&acc, &[one(), -a.conj()]));
                (num, den, zeros.len())
            }
            Kind::Composed { a, theta, inner } => {
                let u = unimodular(*theta);
                // e^{iθ} (a D - N) / (D - ā N)
                let num: Vec<C64> = axpy(&inner.den.iter().map(|d| d * a).collect::<Vec<_>>(), -one(), &inner.num)
                    .into_iter()
                    .map(|c| c * u)
                    .collect();
                let den = axpy(&inner.den, -a.conj(), &inner.num);
                (num, den, inner.degree)
            }
        };
        Self { kind, num, den, degree }
    }

    /// `φ(z) = Σ c_k z^k`; constants are representable but flagged.
    pub fn polynomial(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CopopError::InvalidMap("polynomial needs finite coefficients".into()));
        }
        Ok(Self::build(Kind::Polynomial(coeffs)))
    }

    pub fn identity() -> Self {
        Self::build(Kind::Polynomial(vec![C64::new(0.0, 0.0), one()]))
    }

    /// `φ(z) = λz` with `|λ| ≤ 1`.
    pub fn dilation(lambda: C64) -> Result<Self> {
        if !(lambda.norm() <= 1.0) {
            return Err(CopopError::InvalidMap(format!("dilation factor {lambda} must satisfy |λ| ≤ 1")));
        }
        Ok(Self::build(Kind::Dilation(lambda)))
    }

    pub fn rotation(theta: f64) -> Self {
        Self::build(Kind::Dilation(unimodular(theta)))
    }

    /// `φ = e^{iθ} σ_a`.
    pub fn moebius(a: C64, theta: f64) -> Result<Self> {
        check_in_disk("a", a)?;
        Ok(Self::build(Kind::Moebius { a, theta }))
    }

    /// `φ(z) = e^{iθ} ∏ (z - a_j) / (1 - ā_j z)`.
    pub fn blaschke(zeros: Vec<C64>, theta: f64) -> Result<Self> {
        if zeros.is_empty() {
            return Err(CopopError::InvalidMap("Blaschke product needs at least one zero".into()));
        }
        for &a in &zeros {
            check_in_disk("Blaschke zero", a)?;
        }
        Ok(Self::build(Kind::Blaschke { zeros, theta }))
    }

    /// `e^{iθ} σ_a ∘ inner`.
    pub fn compose_moebius(a: C64, theta: f64, inner: SelfMap) -> Result<Self> {
        check_in_disk("a", a)?;
        Ok(Self::build(Kind::Composed {
            a,
            theta,
            inner: Box::new(inner),
        }))
    }

    /// `σ_{φ(0)} ∘ φ`, which fixes the origin. Returns a clone when
    /// `φ(0) = 0` already.
    pub fn normalized_at_origin(&self) -> Result<Self> {
        let b = self.value(C64::new(0.0, 0.0));
        if b.norm() <= 1e-15 {
            return Ok(self.clone());
        }
        Self::compose_moebius(b, 0.0, self.clone())
    }

    pub fn from_descriptor(desc: &MapDescriptor) -> Result<Self> {
        let cx = |p: &[f64; 2]| C64::new(p[0], p[1]);
        let theta = desc.theta.unwrap_or(0.0);
        let reject = |field: &str| CopopError::InvalidMap(format!("field `{field}` is not used by family {:?}", desc.family));
        match desc.family {
            MapFamilyTag::Polynomial => {
                if desc.a.is_some() || desc.zeros.is_some() || desc.theta.is_some() {
                    return Err(reject("a/zeros/theta"));
                }
                let c = desc
                    .coeffs
                    .as_ref()
                    .ok_or_else(|| CopopError::InvalidMap("polynomial needs `coeffs`".into()))?;
                Self::polynomial(c.iter().map(cx).collect())
            }
            MapFamilyTag::Dilation => {
                if desc.zeros.is_some() || desc.theta.is_some() {
                    return Err(reject("zeros/theta"));
                }
                let lambda = match (&desc.a, &desc.coeffs) {
                    (Some(a), None) => cx(a),
                    (None, Some(c)) if c.len() == 1 => cx(&c[0]),
                    _ => {
                        return Err(CopopError::InvalidMap(
                            "dilation needs λ as `a` or as a single entry of `coeffs`".into(),
                        ))
                    }
                };
                Self::dilation(lambda)
            }
            MapFamilyTag::Moebius => {
                if desc.coeffs.is_some() || desc.zeros.is_some() {
                    return Err(reject("coeffs/zeros"));
                }
                let a = desc.a.as_ref().ok_or_else(|| CopopError::InvalidMap("moebius needs `a`".into()))?;
                Self::moebius(cx(a), theta)
            }
            MapFamilyTag::Blaschke => {
                if desc.coeffs.is_some() || desc.a.is_some() {
                    return Err(reject("coeffs/a"));
                }
                let zeros = desc
                    .zeros
                    .as_ref()
                    .ok_or_else(|| CopopError::InvalidMap("blaschke needs `zeros`".into()))?;
                Self::blaschke(zeros.iter().map(cx).collect(), theta)
            }
        }
    }

    pub fn family(&self) -> MapFamily {
        match self.kind {
            Kind::Polynomial(_) => MapFamily::Polynomial,
            Kind::Dilation(_) => MapFamily::Dilation,
            Kind::Moebius { .. } => MapFamily::Moebius,
            Kind::Blaschke { .. } => MapFamily::Blaschke,
            Kind::Composed { .. } => MapFamily::Composed,
        }
    }

    /// Valence bound: the number of preimages of a generic point.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_constant(&self) -> bool {
        self.degree == 0
    }

    /// Numerator and denominator of the rational representation.
    pub fn rational(&self) -> (&[C64], &[C64]) {
        (&self.num, &self.den)
    }

    pub fn describe(&self) -> String {
        let c = |z: &C64| format!("{}{:+}i", z.re, z.im);
        match &self.kind {
            Kind::Polynomial(cs) => format!("polynomial[{}]", cs.iter().map(c).collect::<Vec<_>>().join(", ")),
            Kind::Dilation(l) => format!("dilation({})", c(l)),
            Kind::Moebius { a, theta } => format!("moebius(a={}, theta={theta})", c(a)),
            Kind::Blaschke { zeros, theta } => format!(
                "blaschke(zeros=[{}], theta={theta})",
                zeros.iter().map(c).collect::<Vec<_>>().join(", ")
            ),
            Kind::Composed { a, theta, inner } => format!("moebius(a={}, theta={theta}) ∘ {}", c(a), inner.describe()),
        }
    }

    /// `φ(z)` without domain checks.
    pub fn value(&self, z: C64) -> C64 {
        match &self.kind {
            Kind::Polynomial(c) => horner(c, z),
            Kind::Dilation(l) => l * z,
            Kind::Moebius { a, theta } => unimodular(*theta) * sigma(*a, z),
            Kind::Blaschke { zeros, theta } => zeros
                .iter()
                .fold(unimodular(*theta), |acc, &a| acc * (z - a) / (1.0 - a.conj() * z)),
            Kind::Composed { a, theta, inner } => unimodular(*theta) * sigma(*a, inner.value(z)),
        }
    }

    /// `φ'(z)` without domain checks.
    pub fn deriv(&self, z: C64) -> C64 {
        match &self.kind {
            Kind::Polynomial(c) => poly::horner_with_derivative(c, z).1,
            Kind::Dilation(l) => *l,
            Kind::Moebius { a, theta } => unimodular(*theta) * sigma_deriv(*a, z),
            Kind::Blaschke { zeros, theta } => {
                let factors: Vec<C64> = zeros.iter().map(|&a| (z - a) / (1.0 - a.conj() * z)).collect();
                let mut total = C64::new(0.0, 0.0);
                for (j, &a) in zeros.iter().enumerate() {
                    let d = 1.0 - a.conj() * z;
                    let dj = (1.0 - a.norm_sqr()) / (d * d);
                    let rest: C64 = factors.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, f)| *f).product();
                    total += dj * rest;
                }
                unimodular(*theta) * total
            }
            Kind::Composed { a, theta, inner } => {
                unimodular(*theta) * sigma_deriv(*a, inner.value(z)) * inner.deriv(z)
            }
        }
    }

    /// `z ↦ φ(e^{iθ} z)`.
    pub fn rotate_input(&self, theta: f64) -> Self {
        let u = unimodular(theta);
        let kind = match &self.kind {
            Kind::Polynomial(c) => Kind::Polynomial(
                c.iter()
                    .enumerate()
                    .map(|(k, &a)| a * unimodular(theta * k as f64))
                    .collect(),
            ),
            Kind::Dilation(l) => Kind::Dilation(l * u),
            Kind::Moebius { a, theta: t } => Kind::Moebius {
                a: a * u.conj(),
                theta: t + theta,
            },
            Kind::Blaschke { zeros, theta: t } => Kind::Blaschke {
                zeros: zeros.iter().map(|a| a * u.conj()).collect(),
                theta: t + theta * zeros.len() as f64,
            },
            Kind::Composed { a, theta: t, inner } => Kind::Composed {
                a: *a,
                theta: *t,
                inner: Box::new(inner.rotate_input(theta)),
            },
        };
        Self::build(kind)
    }

    /// `z ↦ e^{iθ} φ(z)`.
    pub fn rotate_output(&self, theta: f64) -> Self {
        let u = unimodular(theta);
        let kind = match &self.kind {
            Kind::Polynomial(c) => Kind::Polynomial(c.iter().map(|a| a * u).collect()),
            Kind::Dilation(l) => Kind::Dilation(l * u),
            Kind::Moebius { a, theta: t } => Kind::Moebius { a: *a, theta: t + theta },
            Kind::Blaschke { zeros, theta: t } => Kind::Blaschke {
                zeros: zeros.clone(),
                theta: t + theta,
            },
            Kind::Composed { a, theta: t, inner } => Kind::Composed {
                a: *a,
                theta: t + theta,
                inner: inner.clone(),
            },
        };
        Self::build(kind)
    }

    /// Radius beyond which `φ(D)` has no points (up to sampling for
    /// polynomials). Used as a quadrature breakpoint.
    pub fn image_radius(&self) -> f64 {
        match &self.kind {
            Kind::Dilation(l) => l.norm(),
            Kind::Polynomial(_) => boundary_max(self).0.min(1.0),
            _ => 1.0,
        }
    }

    /// Values of `φ` at its critical points inside the disk.
    pub fn critical_values(&self) -> Result<Vec<C64>> {
        if self.degree <= 1 {
            return Ok(Vec::new());
        }
        // N'D - ND'
        let dn = poly::derivative(&self.num);
        let dd = poly::derivative(&self.den);
        let w = axpy(&multiply(&dn, &self.den), -one(), &multiply(&self.num, &dd));
        if poly::degree(&w).is_none() {
            return Ok(Vec::new());
        }
        Ok(find_roots(&w)?
            .into_iter()
            .filter(|c| c.norm() < 1.0)
            .map(|c| self.value(c))
            .collect())
    }

    /// All solutions of `φ(a) = z` in the open disk, with multiplicity.
    pub fn preimages(&self, z: C64) -> Result<Preimages> {
        if self.is_constant() {
            return Err(CopopError::ConstantMap);
        }
        let at_phi0 = (z - self.value(C64::new(0.0, 0.0))).norm() <= PHI0_TOLERANCE;
        let roots = match &self.kind {
            Kind::Dilation(l) => single(z / l),
            Kind::Moebius { a, theta } => single(sigma(*a, unimodular(-theta) * z)),
            _ => {
                let p = axpy(&self.num, -z, &self.den);
                let mut out = Vec::new();
                for cluster in cluster_roots(find_roots(&p)?) {
                    if cluster.point.norm() >= 1.0 - ROOT_EDGE {
                        continue;
                    }
                    out.push(self.polish(cluster, z)?);
                }
                out
            }
        };
        Ok(Preimages { roots, at_phi0 })
    }

    fn polish(&self, mut pre: Preimage, z: C64) -> Result<Preimage> {
        let residual = (self.value(pre.point) - z).norm();
        if residual <= RESIDUAL_TOLERANCE {
            return Ok(pre);
        }
        let d = self.deriv(pre.point);
        if d.norm() > 0.0 {
            pre.point -= (self.value(pre.point) - z) / d;
        }
        let residual = (self.value(pre.point) - z).norm();
        if residual <= RESIDUAL_TOLERANCE {
            Ok(pre)
        } else {
            Err(CopopError::RootFinding {
                degree: self.degree,
                iterations: poly::MAX_ABERTH_ITERATIONS,
                residual,
            })
        }
    }

    /// `φ⁰, φ¹, …, φ^{nmax}` as Taylor coefficient vectors of length `m + 1`.
    pub fn power_table(&self, nmax: usize, m: usize) -> Vec<Vec<C64>> {
        let mut table = Vec::with_capacity(nmax + 1);
        let mut cur = vec![C64::new(0.0, 0.0); m + 1];
        cur[0] = one();
        table.push(cur.clone());
        let polynomial = self.den.len() == 1 && self.den[0] == one();
        for _ in 0..nmax {
            cur = mul_truncated(&cur, &self.num, m);
            if !polynomial {
                cur = div_truncated(&cur, &self.den, m);
            }
            table.push(cur.clone());
        }
        table
    }

    /// Taylor coefficients of `φⁿ` at the origin up to degree `m`.
    pub fn power_coefficients(&self, n: usize, m: usize) -> PowerSeries {
        let coeffs = self.power_table(n, m).pop().unwrap();
        let tail_l2 = self.tail_l2(n, &coeffs);
        PowerSeries { coeffs, tail_l2 }
    }

    /// `Σ_{k>m} |c_{n,k}|²` from Parseval on the unit circle. Exactly zero
    /// for polynomials once `m ≥ n·deg φ`.
    pub fn tail_l2(&self, n: usize, coeffs: &[C64]) -> f64 {
        let m = coeffs.len().saturating_sub(1);
        if matches!(self.kind, Kind::Polynomial(_) | Kind::Dilation(_)) && m >= n * self.degree.max(1) {
            return 0.0;
        }
        let mass = circle_mean(|z| self.value(z).norm_sqr().powi(n as i32), 1.0, (4 * (m + 1)).max(4096));
        let partial: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        (mass - partial).max(0.0)
    }
}

fn single(a: C64) -> Vec<Preimage> {
    if a.norm() < 1.0 - ROOT_EDGE {
        vec![Preimage { point: a, multiplicity: 1 }]
    } else {
        Vec::new()
    }
}

fn cluster_roots(roots: Vec<C64>) -> Vec<Preimage> {
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for r in roots {
        let tol = CLUSTER_TOLERANCE * r.norm().max(1.0);
        match clusters.iter_mut().find(|(c, k)| (c / *k as f64 - r).norm() <= tol) {
            Some((sum, k)) => {
                *sum += r;
                *k += 1;
            }
            None => clusters.push((r, 1)),
        }
    }
    clusters
        .into_iter()
        .map(|(sum, k)| Preimage {
            point: sum / k as f64,
            multiplicity: k,
        })
        .collect()
}

fn mul_truncated(s: &[C64], p: &[C64], m: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m + 1];
    for (i, &a) in s.iter().enumerate().take(m + 1) {
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        for (j, &b) in p.iter().enumerate().take(m + 1 - i) {
            out[i + j] += a * b;
        }
    }
    out
}

fn div_truncated(s: &[C64], d: &[C64], m: usize) -> Vec<C64> {
    let mut q = vec![C64::new(0.0, 0.0); m + 1];
    let inv0 = d[0].inv();
    for k in 0..=m {
        let mut acc = s[k];
        for j in 1..d.len().min(k + 1) {
            acc -= d[j] * q[k - j];
        }
        q[k] = acc * inv0;
    }
    q
}

// Mean of f over `samples` equally spaced points of |z| = radius.
fn circle_mean(f: impl Fn(C64) -> f64, radius: f64, samples: usize) -> f64 {
    let vals: Vec<f64> = (0..samples)
        .map(|j| f(C64::from_polar(radius, TAU * j as f64 / samples as f64)))
        .collect();
    crate::pairwise_sum(&vals) / samples as f64
}

fn boundary_max(phi: &SelfMap) -> (f64, f64) {
    (0..BOUNDARY_SAMPLES)
        .map(|j| {
            let t = TAU * j as f64 / BOUNDARY_SAMPLES as f64;
            (phi.value(C64::from_polar(1.0, t)).norm(), t)
        })
        .fold((f64::NEG_INFINITY, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub point: C64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preimages {
    pub roots: Vec<Preimage>,
    /// `z` coincides with `φ(0)`, where the counting function is not defined.
    pub at_phi0: bool,
}

impl Preimages {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    pub coeffs: Vec<C64>,
    /// Coefficient mass `Σ_{k>m} |c_k|²` beyond the truncation.
    pub tail_l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapOrder {
    Value,
    Derivative,
}

/// `φ(z)` or `φ'(z)` with the domain `|z| < 1` enforced.
pub fn eval_map(phi: &SelfMap, z: C64, order: MapOrder) -> Result<C64> {
    if !(z.norm() < 1.0) {
        return Err(CopopError::Domain {
            what: "|z|",
            value: z.norm(),
            domain: "[0, 1)",
        });
    }
    Ok(match order {
        MapOrder::Value => phi.value(z),
        MapOrder::Derivative => phi.deriv(z),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub max_modulus: f64,
    /// Angle of the boundary sample attaining `max_modulus`.
    pub angle: f64,
    /// Passed by construction (automorphisms and Blaschke products).
    pub structural: bool,
}

/// Checks `sup |φ(e^{it})| ≤ 1 + 1e-12` on 2048 boundary samples.
pub fn validate_selfmap(phi: &SelfMap) -> Result<ValidationReport> {
    let (max_modulus, angle) = boundary_max(phi);
    let structural = match &phi.kind {
        Kind::Moebius { .. } | Kind::Blaschke { .. } => true,
        Kind::Composed { inner, .. } => validate_selfmap(inner).is_ok(),
        _ => false,
    };
    if !structural && max_modulus > 1.0 + BOUNDARY_SLACK {
        return Err(CopopError::NotSelfMap { max_modulus, angle });
    }
    Ok(ValidationReport {
        max_modulus,
        angle,
        structural,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapFamilyTag {
    Polynomial,
    Dilation,
    Moebius,
    Blaschke,
}

/// Serialized form of a self-map, as found in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDescriptor {
    pub family: MapFamilyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<[f64; 2]>>,
}
