//! Cross-checks against independent closed forms and brute-force sums.

use copop_core::counting::{counting_function, verify_change_of_variables};
use copop_core::operator::{build_matrix, hs_norm_basis, image_norm, kernel_diag, schatten_from_matrix, NormMode};
use copop_core::quadrature::{integrate, Measure, QuadratureRule, Region};
use copop_core::selfmaps::SelfMap;
use copop_core::weights::{compute_moments, Weight};
use copop_core::C64;
use statrs::function::beta::ln_beta;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn moments_match_beta_function() {
    for alpha in [-0.7, -0.3, 0.0, 0.5, 1.0, 2.0, 3.7] {
        let t = compute_moments(&Weight::standard(alpha).unwrap(), 200, 64).unwrap();
        for n in 0..=200 {
            let p = ln_beta(n as f64 + 1.0, alpha + 1.0).exp();
            assert!((t.p(n) - p).abs() <= 1e-10 * p, "alpha {alpha}, n {n}");
            if n >= 1 {
                let w = (n * n) as f64 * ln_beta(n as f64, alpha + 1.0).exp();
                assert!((t.omega(n) - w).abs() <= 1e-10 * w);
            }
        }
    }
}

#[test]
fn custom_weight_moments_by_direct_integration() {
    // ω(r) = exp(-r²) has p_n = γ(n+1, 1), computed here by the series
    // γ(s, 1) = e^{-1} Σ_k 1/(s (s+1) ... (s+k)).
    let w = Weight::custom("gauss", |r| (-r * r).exp());
    let t = compute_moments(&w, 30, 64).unwrap();
    for n in 0..=30 {
        let s = n as f64 + 1.0;
        let mut term = 1.0 / s;
        let mut sum = term;
        for k in 1..80 {
            term /= s + k as f64;
            sum += term;
        }
        let p = sum * (-1.0f64).exp();
        assert!((t.p(n) - p).abs() < 1e-12 * p, "n = {n}");
    }
}

#[test]
fn kernel_diagonal_closed_form_for_standard_weights() {
    for alpha in [0.0, 1.0, 2.5] {
        let t = compute_moments(&Weight::standard(alpha).unwrap(), 3000, 64).unwrap();
        for r in [0.1, 0.5, 0.8, 0.95, 0.99] {
            let x: f64 = r * r;
            let exact = (alpha + 1.0) / (1.0 - x).powf(alpha + 2.0);
            let k = kernel_diag(&t, C64::from_polar(r, 0.3)).unwrap();
            assert!((k - exact).abs() <= 1e-8 * exact, "alpha {alpha}, r {r}: {k} vs {exact}");
        }
    }
}

#[test]
fn image_norm_equals_weighted_area_integral() {
    // ‖(φⁿ)'‖²_ω / ωₙ = n² ∫ |φ|^{2(n-1)} |φ'|² ω dA / ωₙ
    let w = Weight::standard(1.0).unwrap();
    let t = compute_moments(&w, 400, 64).unwrap();
    let maps = [
        SelfMap::polynomial(vec![c(0.1, 0.0), c(0.5, 0.0), c(0.3, 0.1)]).unwrap(),
        SelfMap::moebius(c(0.3, 0.2), 0.5).unwrap(),
        SelfMap::blaschke(vec![c(0.5, 0.0), c(-0.3, 0.0)], 0.0).unwrap(),
    ];
    let rule = QuadratureRule::new(128, 256).unwrap();
    for phi in &maps {
        for n in [1usize, 3, 6] {
            let nf = n as f64;
            let direct = integrate(
                |z| nf * nf * phi.value(z).norm_sqr().powi(n as i32 - 1) * phi.deriv(z).norm_sqr(),
                &Region::Disk { radius: 1.0 },
                rule,
                Measure::Weighted(&w),
            )
            .unwrap()
            .value
                / t.omega(n);
            let series = image_norm(phi, &t, n, 400, NormMode::DerivativeOnly).unwrap();
            assert!(series.tail < 1e-10);
            assert!((series.value - direct).abs() < 1e-7 * direct, "{}: {} vs {direct}", phi.describe(), series.value);
        }
    }
}

#[test]
fn dilation_hs_norm_closed_form_on_several_weights() {
    for alpha in [0.0, 1.0, 2.0] {
        let t = compute_moments(&Weight::standard(alpha).unwrap(), 200, 64).unwrap();
        for l in [0.3, 0.5, 0.8] {
            let d = SelfMap::dilation(c(l, 0.0)).unwrap();
            let b = hs_norm_basis(&d, &t, 150, None).unwrap();
            let exact = l * l / (1.0 - l * l);
            assert!((b.value - exact).abs() < 1e-12, "alpha {alpha}, λ {l}");
            let m = build_matrix(&d, &t, 150).unwrap();
            let s = schatten_from_matrix(&m, 1.0, true).unwrap();
            assert!((s - l / (1.0 - l)).abs() < 1e-10);
        }
    }
}

#[test]
fn automorphism_counting_function_closed_form() {
    let w = Weight::standard(2.0).unwrap();
    for (a, theta) in [(c(0.5, 0.0), 0.0), (c(-0.2, 0.6), 1.3)] {
        let phi = SelfMap::moebius(a, theta).unwrap();
        for z in [c(0.0, 0.0), c(0.4, -0.3), c(-0.9, 0.05)] {
            // φ⁻¹(z) = σ_a(e^{-iθ} z)
            let pre = copop_core::selfmaps::sigma(a, C64::from_polar(1.0, -theta) * z);
            let n = counting_function(&phi, &w, z).unwrap().value;
            assert!((n - w.value(pre.norm())).abs() < 1e-14);
        }
    }
}

#[test]
fn change_of_variables_with_nonradial_test_function() {
    let w = Weight::standard(1.0).unwrap();
    let b = SelfMap::blaschke(vec![c(0.5, 0.0), c(-0.3, 0.0)], 0.0).unwrap();
    let r = verify_change_of_variables(&b, &w, |z| 1.0 + z.re + 0.5 * z.im * z.im, QuadratureRule::default()).unwrap();
    assert!(r.relative_difference < 1e-4, "{r:?}");
}
