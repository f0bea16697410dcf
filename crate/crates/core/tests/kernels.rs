mod common;

use common::*;
use dwl_core::kernels::*;
use proptest::prelude::*;

fn unit() -> KernelParams {
    KernelParams::new(1.0, 1.0).unwrap()
}

#[test]
fn theta_matches_fourier_series() {
    for &(eps, c) in &[(1.0, 1.0), (0.5, 1.0), (2.0, 1.5)] {
        let p = KernelParams::new(eps, c).unwrap();
        for &t in &[0.05, 0.5, 2.0] {
            for &x in &[0.0, 0.3, 0.7, 1.0, 1.6, -0.4] {
                let got = theta(x, t, &p).unwrap();
                let want = theta_fourier(x, t, eps, c);
                let tol = (2.0 * got.est_error).max(1e-9);
                assert!((got.value - want).abs() < tol, "eps={eps} c={c} t={t} x={x}: {got:?} vs {want}");
            }
        }
    }
    // more images remove the truncation error
    let p = KernelParams::new(2.0, 1.5).unwrap().with_terms_for_horizon(2.0);
    let got = theta(1.0, 2.0, &p).unwrap();
    assert!((got.value - theta_fourier(1.0, 2.0, 2.0, 1.5)).abs() < 1e-10);
    assert!(got.est_error < 1e-10);
}

#[test]
fn known_theta_values() {
    let p = unit();
    assert!((theta(0.3, 0.5, &p).unwrap().value - 0.2802383).abs() < 1e-7);
    assert!((theta(1.0, 0.5, &p).unwrap().value - 0.1884037).abs() < 1e-7);
    assert!((theta(0.7, 2.0, &p).unwrap().value - 0.99175538).abs() < 1e-8);
}

#[test]
fn k_matches_brute_force_simpson() {
    let p = unit();
    let k = fundamental_k(1.0, 0.5, &p).unwrap();
    let oracle = k_simpson(1.0, 0.5, 1.0, 1.0, 1000, 4000, 12.0);
    assert!((k.value - oracle).abs() < 1e-6, "{} vs {oracle}", k.value);
    assert!(k.est_error < 1e-8);
}

#[test]
fn k_is_nonnegative_on_grid() {
    let p = unit();
    for &t in &[0.01, 0.1, 1.0, 3.0] {
        for i in 0..12 {
            let x = 0.5 * i as f64;
            assert!(fundamental_k(x, t, &p).unwrap().value >= 0.0);
        }
    }
}

#[test]
fn theta_symmetries_are_exact() {
    let p = unit();
    let t = 0.4;
    let a = theta(0.3, t, &p).unwrap().value;
    assert_eq!(a, theta(-0.3, t, &p).unwrap().value);
    for &x in &[0.25, 0.5, 0.875] {
        let v = theta(x, t, &p).unwrap().value;
        assert_eq!(v, theta(x + 2.0, t, &p).unwrap().value);
        assert_eq!(v, theta(-x, t, &p).unwrap().value);
    }
    assert_eq!(theta(0.6, 0.0, &p).unwrap().value, 0.0);
}

#[test]
fn w_derivatives_match_series() {
    let (eps, c) = (1.0, 1.0);
    let p = unit();
    let s = 0.3;
    let (x, xi) = (0.35, 0.6);
    let wt = green_w_derivatives(x, xi, s, &p, Which::T).unwrap().value;
    let wt_o = theta_t_fourier(x - xi, s, eps, c) - theta_t_fourier(x + xi, s, eps, c);
    assert!((wt - wt_o).abs() < 1e-8, "{wt} vs {wt_o}");
    let wxx = green_w_derivatives(x, xi, s, &p, Which::XX).unwrap().value;
    let wxx_o = theta_xx_fourier(x - xi, s, eps, c) - theta_xx_fourier(x + xi, s, eps, c);
    assert!((wxx - wxx_o).abs() < 1e-6, "{wxx} vs {wxx_o}");
}

#[test]
fn w_x_is_minus_xi_derivative_of_first_theta_term() {
    // d/dx w = theta'(x - xi) - theta'(x + xi); check the first piece against a
    // difference quotient in xi of theta(x - xi).
    let p = unit();
    let (x, xi, s) = (0.7, 0.2, 0.4);
    let h = 1e-4;
    let dxi = -(theta(x - (xi + h), s, &p).unwrap().value - theta(x - (xi - h), s, &p).unwrap().value)
        / (2.0 * h);
    let direct = theta_derivative(x - xi, s, 1, &p).unwrap().value;
    assert!((dxi - direct).abs() < 1e-6);
    let wx = green_w_derivatives(x, xi, s, &p, Which::X).unwrap().value;
    let second = theta_derivative(x + xi, s, 1, &p).unwrap().value;
    assert!((wx - (direct - second)).abs() < 1e-12);
}

#[test]
fn w_t_integral_is_at_most_one() {
    let p = unit();
    let rep = verify_kernel_bounds(0.5, 0.3, &p).unwrap();
    let c = rep.checks.iter().find(|c| c.name == "int_abs_w_t").unwrap();
    assert!(c.value <= 1.0 + c.tol);
    let w = rep.checks.iter().find(|c| c.name == "int_abs_w").unwrap();
    assert!(w.value <= 0.3 + w.tol);
}

#[test]
fn profile_derivatives_match_series() {
    let p = unit();
    let prof = ThetaProfile::build(0.05, &p).unwrap();
    for &x in &[0.05, 0.2, 0.5, 0.9] {
        assert!((prof.theta_xx(x) - theta_xx_fourier(x, 0.05, 1.0, 1.0)).abs() < 1e-7);
        assert!((prof.theta_t(x) - theta_t_fourier(x, 0.05, 1.0, 1.0)).abs() < 1e-9);
    }
}

#[test]
fn small_s_derivatives_stay_finite() {
    let p = unit();
    for &s in &[1e-3, 5e-3] {
        for &xi in &[0.1, 0.45, 0.9] {
            let v = green_w_derivatives(0.5, xi, s, &p, Which::XX).unwrap();
            assert!(v.value.is_finite());
        }
    }
}

#[test]
fn lemma_residual_is_small() {
    let p = unit();
    for &(x, t) in &[(0.3, 0.1), (0.6, 0.5), (0.85, 1.5)] {
        let r = ltheta_residual(x, t, &p).unwrap();
        assert!(r.value.abs() < 1e-3, "({x},{t}): {}", r.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn bessel_is_monotone(a in 0.0f64..40.0, d in 1e-3f64..5.0) {
        prop_assert!(bessel_i0(a + d).unwrap() > bessel_i0(a).unwrap());
    }

    #[test]
    fn theta_is_even_and_periodic(x in -3.0f64..3.0, t in 0.05f64..1.5) {
        let p = KernelParams::new(1.0, 1.0).unwrap();
        let a = theta(x, t, &p).unwrap().value;
        prop_assert_eq!(a, theta(-x, t, &p).unwrap().value);
        let b = theta(x + 2.0, t, &p).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }
}
