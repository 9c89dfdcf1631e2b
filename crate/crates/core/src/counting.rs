//! The generalized Nevanlinna counting function
//! `N_{φ,ω}(z) = Σ_{φ(a) = z} ω(a)` and the ratio `τ = N/ω`.

use serde::Serialize;

use crate::quadrature::{integrate, integrate_over_radii, try_integrate, Measure, QuadratureRule, Region};
use crate::selfmaps::{SelfMap, PHI0_TOLERANCE};
use crate::weights::Weight;
use crate::{CopopError, Result, C64};

/// Nodes this close to a critical value of `φ` are moved radially.
pub const CRITICAL_PROXIMITY: f64 = 1e-10;
pub const CRITICAL_JITTER: f64 = 1e-8;
/// Slack allowed in the sub-mean inequality.
pub const SUBMEAN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingSample {
    pub z: C64,
    pub value: f64,
    /// Number of preimages counted with multiplicity.
    pub preimage_count: usize,
    pub at_phi0: bool,
}

/// `N_{φ,ω}` bound to a map and weight, with the critical values of `φ`
/// precomputed.
#[derive(Debug, Clone)]
pub struct CountingFunction<'a> {
    phi: &'a SelfMap,
    w: &'a Weight,
    critical: Vec<C64>,
    phi0: C64,
}

impl<'a> CountingFunction<'a> {
    pub fn new(phi: &'a SelfMap, w: &'a Weight) -> Result<Self> {
        if phi.is_constant() {
            return Err(CopopError::ConstantMap);
        }
        Ok(Self {
            phi,
            w,
            critical: phi.critical_values()?,
            phi0: phi.value(C64::new(0.0, 0.0)),
        })
    }

    pub fn map(&self) -> &SelfMap {
        self.phi
    }

    pub fn weight(&self) -> &Weight {
        self.w
    }

    fn jitter(&self, z: C64) -> C64 {
        if !self.critical.iter().any(|c| (c - z).norm() <= CRITICAL_PROXIMITY) {
            return z;
        }
        let m = z.norm();
        let dir = if m > 0.0 { z / m } else { C64::new(1.0, 0.0) };
        if m + CRITICAL_JITTER < 1.0 {
            z + dir * CRITICAL_JITTER
        } else {
            z - dir * CRITICAL_JITTER
        }
    }

    pub fn sample(&self, z: C64) -> Result<CountingSample> {
        if !(z.norm() < 1.0) {
            return Err(CopopError::Domain {
                what: "|z|",
                value: z.norm(),
                domain: "[0, 1)",
            });
        }
        let pre = self.phi.preimages(self.jitter(z))?;
        let mut value = 0.0;
        let mut count = 0;
        for r in &pre.roots {
            value += r.multiplicity as f64 * self.w.value(r.point.norm());
            count += r.multiplicity;
        }
        Ok(CountingSample {
            z,
            value,
            preimage_count: count,
            at_phi0: (z - self.phi0).norm() <= PHI0_TOLERANCE,
        })
    }

    pub fn value(&self, z: C64) -> Result<f64> {
        Ok(self.sample(z)?.value)
    }

    /// `τ(z) = N(z) / ω(z)`.
    pub fn tau(&self, z: C64) -> Result<f64> {
        Ok(self.value(z)? / self.w.value(z.norm()))
    }
}

pub fn counting_function(phi: &SelfMap, w: &Weight, z: C64) -> Result<CountingSample> {
    CountingFunction::new(phi, w)?.sample(z)
}

pub fn tau(phi: &SelfMap, w: &Weight, z: C64) -> Result<f64> {
    CountingFunction::new(phi, w)?.tau(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangeOfVariables {
    /// `∫ f(φ) |φ'|² ω dA`.
    pub lhs: f64,
    /// `∫ f N dA`.
    pub rhs: f64,
    pub relative_difference: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
}

/// Both sides of `∫ f(φ(z)) |φ'(z)|² ω(z) dA(z) = ∫ f(z) N_{φ,ω}(z) dA(z)`.
pub fn verify_change_of_variables<F>(phi: &SelfMap, w: &Weight, f: F, rule: QuadratureRule) -> Result<ChangeOfVariables>
where
    F: Fn(C64) -> f64 + Sync,
{
    let n = CountingFunction::new(phi, w)?;
    let lhs = integrate(
        |z| f(phi.value(z)) * phi.deriv(z).norm_sqr(),
        &Region::Disk { radius: 1.0 },
        rule,
        Measure::Weighted(w),
    )?;
    let rhs = integrate_over_radii(|z| Ok(f(z) * n.value(z)?), &[1.0], &[phi.image_radius()], rule, Measure::Area)?;
    let rhs_value = rhs.cumulative[0];
    let scale = lhs.value.abs().max(rhs_value.abs()).max(1e-300);
    Ok(ChangeOfVariables {
        lhs: lhs.value,
        rhs: rhs_value,
        relative_difference: (lhs.value - rhs_value).abs() / scale,
        lhs_error: lhs.error,
        rhs_error: rhs.errors[0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubmeanCheck {
    /// `N(z)`.
    pub lhs: f64,
    /// `(2/r²) ∫_{|ζ-z|<r} N dA`.
    pub rhs: f64,
    pub holds: bool,
}

/// The sub-mean value inequality on a disk `D(z, r)` inside `1/2 < |ζ| < 1`.
pub fn check_submean(phi: &SelfMap, w: &Weight, z: C64, r: f64, rule: QuadratureRule) -> Result<SubmeanCheck> {
    if !(r > 0.0) || !(z.norm() - r > 0.5) || !(z.norm() + r < 1.0) {
        return Err(CopopError::Geometry(format!(
            "D({z}, {r}) must lie in 1/2 < |ζ| < 1"
        )));
    }
    let n = CountingFunction::new(phi, w)?;
    let lhs = n.value(z)?;
    let integral = try_integrate(|t| n.value(t), &Region::EuclideanDisk { center: z, radius: r }, rule, Measure::Area)?;
    let rhs = 2.0 / (r * r) * integral.value;
    Ok(SubmeanCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + SUBMEAN_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfmaps::sigma;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn w1() -> Weight {
        Weight::standard(1.0).unwrap()
    }

    fn z2() -> SelfMap {
        SelfMap::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn counting_examples() {
        let s = counting_function(&SelfMap::identity(), &w1(), c(0.6, 0.0)).unwrap();
        assert!((s.value - 0.64).abs() < 1e-15);
        assert_eq!(s.preimage_count, 1);

        let z = C64::from_polar(0.49, 1.0);
        let s = counting_function(&z2(), &w1(), z).unwrap();
        assert!((s.value - 1.02).abs() < 1e-13);
        assert_eq!(s.preimage_count, 2);

        let a = c(0.5, 0.0);
        let s = SelfMap::moebius(a, 0.0).unwrap();
        let w = Weight::standard(2.0).unwrap();
        for z in [c(0.1, 0.3), c(-0.8, 0.1)] {
            let v = counting_function(&s, &w, z).unwrap().value;
            assert!((v - w.value(sigma(a, z).norm())).abs() < 1e-14);
        }

        let half = SelfMap::dilation(c(0.5, 0.0)).unwrap();
        let s = counting_function(&half, &w1(), c(0.8, 0.0)).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.preimage_count, 0);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(&SelfMap::identity(), &w1(), c(0.3, 0.4)).unwrap(), 1.0);
        let minus = SelfMap::moebius(c(0.0, 0.0), 0.0).unwrap();
        assert!((tau(&minus, &w1(), c(0.3, -0.2)).unwrap() - 1.0).abs() < 1e-15);
        let half = SelfMap::dilation(c(0.5, 0.0)).unwrap();
        assert!((tau(&half, &w1(), c(0.3, 0.0)).unwrap() - 0.64 / 0.91).abs() < 1e-15);
    }

    #[test]
    fn phi0_is_flagged_and_constant_rejected() {
        let s = counting_function(&z2(), &w1(), c(0.0, 0.0)).unwrap();
        assert!(s.at_phi0);
        assert_eq!(s.preimage_count, 2);
        // the branch point is sampled just off the critical value
        assert!((s.value - 2.0).abs() < 1e-7);
        let k = SelfMap::polynomial(vec![c(0.2, 0.0)]).unwrap();
        assert_eq!(counting_function(&k, &w1(), c(0.2, 0.0)), Err(CopopError::ConstantMap));
        assert!(counting_function(&z2(), &w1(), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn critical_values_are_jittered() {
        let lens = SelfMap::polynomial(vec![c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        let w = w1();
        let n = CountingFunction::new(&lens, &w).unwrap();
        let s = n.sample(c(-0.125, 0.0)).unwrap();
        assert_eq!(s.preimage_count, 2);
        let near = n.value(c(-0.125 + 1e-7, 0.0)).unwrap();
        assert!((s.value - near).abs() < 1e-5);
    }

    #[test]
    fn change_of_variables_examples() {
        let rule = QuadratureRule::default();
        let lambda = 0.7;
        let d = SelfMap::dilation(c(lambda, 0.0)).unwrap();
        let r = verify_change_of_variables(&d, &w1(), |_| 1.0, rule).unwrap();
        assert!((r.lhs - lambda * lambda / 2.0).abs() < 1e-10);
        assert!((r.rhs - lambda * lambda / 2.0).abs() < 1e-8);
        assert!(r.relative_difference <= 1e-6);

        let w = Weight::standard(2.0).unwrap();
        let r = verify_change_of_variables(&SelfMap::identity(), &w, |z| z.norm_sqr(), rule).unwrap();
        assert!(r.relative_difference < 1e-13);

        let r = verify_change_of_variables(&z2(), &w1(), |_| 1.0, rule).unwrap();
        // 4∫|z|²ω₁ dA = 4·(1/2 - 1/3)
        assert!((r.lhs - 2.0 / 3.0).abs() < 1e-10);
        assert!(r.relative_difference <= 1e-4);
    }

    #[test]
    fn submean_examples() {
        let rule = QuadratureRule::new(24, 64).unwrap();
        let r = check_submean(&SelfMap::identity(), &w1(), c(0.7, 0.0), 0.1, rule).unwrap();
        assert!(r.holds);
        assert!(matches!(
            check_submean(&SelfMap::identity(), &w1(), c(0.55, 0.0), 0.1, rule),
            Err(CopopError::Geometry(_))
        ));
        let r = check_submean(&z2(), &w1(), c(0.7, 0.0), 0.05, rule).unwrap();
        assert!(r.holds, "{r:?}");
    }
}
