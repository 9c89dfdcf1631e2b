//! Numerical toolkit for composition operators `C_φ f = f ∘ φ` acting on
//! weighted Hilbert spaces `H_ω` of analytic functions on the unit disk.
//!
//! The crate is organised bottom-up:
//!
//! * [`weights`]: radial weights, admissibility checks and moment sequences;
//! * [`selfmaps`]: analytic self-maps of the disk (polynomials, dilations,
//!   disk automorphisms, finite Blaschke products) with preimage solving and
//!   power-series expansion;
//! * [`quadrature`]: polar Gauss–Legendre × trapezoid rules on disks,
//!   annuli and pseudo-hyperbolic disks;
//! * [`counting`]: the generalized Nevanlinna counting function `N_{φ,ω}`;
//! * [`operator`]: truncated matrices of `C_φ`, kernel diagonals and the
//!   Hilbert–Schmidt norm by two routes;
//! * [`diagnostics`]: essential-norm profiles, Schatten integrals,
//!   Berezin-type transforms and closed-range probes.
//!
//! Area integrals use the normalized measure `dA = dx dy / π`, so the unit
//! disk has mass one.

pub mod counting;
pub mod diagnostics;
mod error;
pub mod jacobi;
pub mod operator;
pub mod poly;
pub mod quadrature;
pub mod selfmaps;
mod spline;
pub mod weights;

pub use error::{CopopError, Result};
pub use num_complex::Complex64 as C64;

/// Sums in a fixed pairwise order so reductions are reproducible regardless
/// of how the terms were produced.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `1 - x^2` without cancellation for `x` close to one.
#[inline]
pub(crate) fn one_minus_sq(x: f64) -> f64 {
    (1.0 - x) * (1.0 + x)
}

/// Shortest round-trip decimal form of `x`, switching to exponent notation
/// outside `[1e-5, 1e16)`. Used for every CSV artifact.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-20, -2.5e17, 12345.678, 7e-6, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1e-20), "1e-20");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }
}
