//! Singular values by one-sided (Hestenes) Jacobi rotations.
//!
//! One-sided Jacobi attains high relative accuracy for the small singular
//! values of graded matrices, which is what truncated composition-operator
//! matrices look like.

use nalgebra::DMatrix;

use crate::{CopopError, Result, C64};

pub const MAX_SWEEPS: usize = 100;
/// Columns count as orthogonal once `|⟨a_i, a_j⟩| ≤ TOL·‖a_i‖‖a_j‖`.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-15;

/// Singular values of `a`, in decreasing order.
pub fn singular_values(a: &DMatrix<C64>) -> Result<Vec<f64>> {
    // Work on whichever of A, A* has fewer columns.
    let work = if a.ncols() > a.nrows() { a.adjoint() } else { a.clone() };
    let (m, n) = work.shape();
    if n == 0 || m == 0 {
        return Ok(Vec::new());
    }
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| work.column(j).iter().copied().collect()).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v.norm_sqr()).sum()).collect();

    let mut converged = false;
    let mut off = 0.0f64;
    for _ in 0..MAX_SWEEPS {
        off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let (alpha, beta) = (norms[i], norms[j]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma: C64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                let rel = g / (alpha * beta).sqrt();
                off = off.max(rel);
                if rel <= ORTHOGONALITY_TOLERANCE {
                    continue;
                }
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                let (ci, cj) = (&mut left[i], &mut right[0]);
                for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
                    let yb = *y * phase.conj();
                    let xi = *x;
                    *x = xi * c - yb * s;
                    *y = xi * s + yb * c;
                }
                norms[i] = ci.iter().map(|v| v.norm_sqr()).sum();
                norms[j] = cj.iter().map(|v| v.norm_sqr()).sum();
            }
        }
        if off <= ORTHOGONALITY_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(CopopError::SvdNoConvergence { sweeps: MAX_SWEEPS, off });
    }
    let mut sv: Vec<f64> = norms.iter().map(|v| v.sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn agrees_with_reference_svd() {
        for (m, n, seed) in [(6, 6, 1), (9, 4, 2), (4, 9, 3), (20, 20, 4)] {
            let a = random(m, n, seed);
            let ours = singular_values(&a).unwrap();
            let mut reference: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
            reference.sort_by(|a, b| b.total_cmp(a));
            for (x, y) in ours.iter().zip(&reference) {
                assert!((x - y).abs() <= 1e-12 * reference[0], "{x} vs {y}");
            }
        }
    }

    #[test]
    fn graded_diagonal_is_exact() {
        let d: Vec<f64> = (0..12).map(|k| 0.5f64.powi(3 * k)).collect();
        let a = DMatrix::from_fn(12, 12, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) });
        let sv = singular_values(&a).unwrap();
        for (x, y) in sv.iter().zip(&d) {
            assert!((x - y).abs() <= 1e-15 * y);
        }
    }

    #[test]
    fn frobenius_norm_is_preserved() {
        let a = random(15, 11, 7);
        let fro: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        let s: f64 = singular_values(&a).unwrap().iter().map(|v| v * v).sum();
        assert!((fro - s).abs() < 1e-12 * fro);
    }

    #[test]
    fn zero_columns_are_handled() {
        let mut a = random(5, 5, 9);
        a.column_mut(2).fill(C64::new(0.0, 0.0));
        let sv = singular_values(&a).unwrap();
        assert_eq!(sv[4], 0.0);
    }
}
