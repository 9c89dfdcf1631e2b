//! Dense complex polynomials in ascending coefficient order and a
//! simultaneous (Aberth–Ehrlich) root finder.

use nalgebra::DMatrix;

use crate::{CopopError, Result, C64};

pub const MAX_ABERTH_ITERATIONS: usize = 500;
/// Largest degree for which the companion-matrix fallback is attempted.
pub const COMPANION_MAX_DEGREE: usize = 30;
// Fixed angular offset of the initial guesses; keeps them off symmetry axes.
const START_ANGLE: f64 = 0.4;

pub fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Value and first derivative in one pass.
pub fn horner_with_derivative(c: &[C64], z: C64) -> (C64, C64) {
    let zero = C64::new(0.0, 0.0);
    c.iter().rev().fold((zero, zero), |(p, dp), &a| (p * z + a, dp * z + p))
}

pub fn derivative(c: &[C64]) -> Vec<C64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| a * k as f64).collect()
}

pub fn multiply(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a + s·b`, padded to the longer length.
pub fn axpy(a: &[C64], s: C64, b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_default() + s * b.get(k).copied().unwrap_or_default())
        .collect()
}

/// Drops leading (highest-degree) coefficients that are negligible relative
/// to the largest one.
pub fn trim(c: &[C64]) -> Vec<C64> {
    let scale = c.iter().fold(0.0f64, |m, a| m.max(a.norm()));
    let mut end = c.len();
    while end > 1 && c[end - 1].norm() <= 1e-14 * scale {
        end -= 1;
    }
    c[..end].to_vec()
}

/// Degree after trimming; `None` for the zero polynomial.
pub fn degree(c: &[C64]) -> Option<usize> {
    let t = trim(c);
    if t.len() == 1 && t[0].norm() == 0.0 {
        None
    } else {
        Some(t.len() - 1)
    }
}

// Fujiwara's bound on the moduli of the roots.
fn root_bound(c: &[C64]) -> f64 {
    let d = c.len() - 1;
    let lead = c[d].norm();
    (1..=d)
        .map(|k| {
            let a = c[d - k].norm() / lead;
            if k == d {
                (a / 2.0).powf(1.0 / k as f64)
            } else {
                a.powf(1.0 / k as f64)
            }
        })
        .fold(0.0f64, f64::max)
        * 2.0
}

fn backward_ok(c: &[C64], z: C64) -> bool {
    let p = horner(c, z).norm();
    let az = z.norm();
    let scale = c.iter().rev().fold(0.0, |acc, a| acc * az + a.norm());
    p <= 8.0 * c.len() as f64 * f64::EPSILON * scale
}

fn newton_polish(c: &[C64], z: C64) -> C64 {
    let (p, dp) = horner_with_derivative(c, z);
    if dp.norm() == 0.0 {
        return z;
    }
    let next = z - p / dp;
    if horner(c, next).norm() < p.norm() {
        next
    } else {
        z
    }
}

fn quadratic_roots(c: &[C64]) -> [C64; 2] {
    let (a, b, cc) = (c[2], c[1], c[0]);
    let disc = (b * b - a * cc * 4.0).sqrt();
    // choose the sign that avoids cancellation
    let sq = if (b.conj() * disc).re >= 0.0 { disc } else { -disc };
    let q = -(b + sq) * 0.5;
    if q.norm() == 0.0 {
        [C64::new(0.0, 0.0); 2]
    } else {
        [q / a, cc / q]
    }
}

fn aberth(c: &[C64]) -> Option<Vec<C64>> {
    let d = c.len() - 1;
    let bound = root_bound(c);
    if bound == 0.0 {
        return Some(vec![C64::new(0.0, 0.0); d]);
    }
    let radius = 1.2 * bound;
    let mut z: Vec<C64> = (0..d)
        .map(|k| C64::from_polar(radius, START_ANGLE + std::f64::consts::TAU * k as f64 / d as f64))
        .collect();
    for _ in 0..MAX_ABERTH_ITERATIONS {
        let mut max_step = 0.0f64;
        for i in 0..d {
            let (p, dp) = horner_with_derivative(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let s: C64 = (0..d).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let denom = dp - p * s;
            if denom.norm() == 0.0 || !denom.is_finite() {
                continue;
            }
            let w = p / denom;
            z[i] -= w;
            max_step = max_step.max(w.norm() / z[i].norm().max(1.0));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if max_step <= 4.0 * f64::EPSILON || z.iter().all(|&v| backward_ok(c, v)) {
            return Some(z);
        }
    }
    None
}

fn companion_roots(c: &[C64]) -> Option<Vec<C64>> {
    let d = c.len() - 1;
    let lead = c[d];
    let mut m = DMatrix::<C64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -c[i] / lead;
    }
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)?;
    schur.eigenvalues().map(|v| v.iter().copied().collect())
}

/// All complex roots of `c[0] + c[1] z + … + c[d] z^d`, with multiplicity.
///
/// Aberth iteration from points equally spaced on a circle of radius
/// `1.2 ×` Fujiwara's root bound, followed by one Newton polish per root.
/// When the iteration does not converge and `d ≤ 30`, the eigenvalues of the
/// companion matrix are used instead.
pub fn find_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let c = trim(coeffs);
    let d = c.len() - 1;
    if d == 0 {
        if c[0].norm() == 0.0 {
            return Err(CopopError::InvalidArgument("zero polynomial has no isolated roots".into()));
        }
        return Ok(Vec::new());
    }
    let roots = match d {
        1 => vec![-c[0] / c[1]],
        2 => quadratic_roots(&c).to_vec(),
        _ => match aberth(&c) {
            Some(z) => z,
            None if d <= COMPANION_MAX_DEGREE => companion_roots(&c).ok_or(CopopError::RootFinding {
                degree: d,
                iterations: MAX_ABERTH_ITERATIONS,
                residual: f64::NAN,
            })?,
            None => {
                return Err(CopopError::RootFinding {
                    degree: d,
                    iterations: MAX_ABERTH_ITERATIONS,
                    residual: f64::NAN,
                })
            }
        },
    };
    Ok(roots.into_iter().map(|z| newton_polish(&c, z)).collect())
}
