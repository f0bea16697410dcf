use std::f64::consts::PI;

use dwl_core::core_model::{
    homogenize_boundaries, pde_residual, perturbation_spec, rescale_unit_wavespeed, BoundaryLift,
    GridFunction, ProblemSpec, Smooth1,
};
use dwl_core::fdsolver::{manufactured_forcing, solve_fd, FDConfig, Manufactured};
use dwl_core::Error;

#[test]
fn rescaling_unit_speed_is_identity() {
    let s = ProblemSpec::new(0.4, 1.0).with_initial(Smooth1::sine_mode(1.0, 1.0), Smooth1::zero());
    let r = rescale_unit_wavespeed(&s);
    assert_eq!(r.epsilon, s.epsilon);
    assert_eq!(r.c, 1.0);
    for &x in &[0.1, 0.5, 0.77] {
        assert_eq!(r.u0.eval(x), s.u0.eval(x));
        assert_eq!(r.f(x, 0.3, 0.1, 0.2, 0.3, 0.4), s.f(x, 0.3, 0.1, 0.2, 0.3, 0.4));
    }
}

#[test]
fn rescaled_spec_is_solved_by_compressed_solution() {
    let (eps, c) = (1.0, 2.0);
    let m = Manufactured::decaying_sine(1.0);
    let f = manufactured_forcing(&m, eps, c);
    let spec = ProblemSpec::new(eps, c).with_forcing(move |x, t, _, _, _, _| f(x, t));
    let r = rescale_unit_wavespeed(&spec);
    assert_eq!(r.c, 1.0);
    assert!((r.epsilon - eps / c).abs() < 1e-15);
    // U(x, s) = u(x, s / c): exact residual of the rescaled operator
    for &(x, s) in &[(0.2, 0.1), (0.5, 1.0), (0.9, 3.7)] {
        let t = s / c;
        let us = (m.ut)(x, t) / c;
        let uss = (m.utt)(x, t) / (c * c);
        let uxxs = (m.uxxt)(x, t) / c;
        let lhs = -r.epsilon * uxxs - (m.uxx)(x, t) + uss;
        let rhs = r.f(x, s, (m.u)(x, t), (m.ux)(x, t), (m.uxx)(x, t), us);
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }
    // finite-difference residual of the sampled compressed solution
    let (nx, ds) = (201, 1e-3);
    let mut g = GridFunction::zeros(nx, 400, 0.0, ds).unwrap();
    for n in 0..g.nt {
        for i in 0..nx {
            g.u[n * nx + i] = (m.u)(g.x(i), g.t(n) / c);
        }
    }
    assert!(pde_residual(&r, &g).unwrap() < 1e-3);
}

#[test]
fn rescaling_maps_back() {
    let s = ProblemSpec::new(1.0, 3.0)
        .with_initial(Smooth1::new(|x| x * (1.0 - x)), Smooth1::new(|x: f64| (PI * x).sin()))
        .with_boundary(Smooth1::zero(), Smooth1::zero())
        .with_horizon(2.0);
    let r = rescale_unit_wavespeed(&s);
    let c = r.scaling.time_factor;
    assert_eq!(c, 3.0);
    for &x in &[0.0, 0.3, 0.6] {
        assert!((c * r.u1.eval(x) - s.u1.eval(x)).abs() < 1e-12);
        assert!((r.u0.eval(x) - s.u0.eval(x)).abs() < 1e-12);
    }
    assert!((r.horizon.unwrap() / c - 2.0).abs() < 1e-12);
    // solutions correspond on the compressed time axis
    let a = solve_fd(&s, &FDConfig::new(51, 1e-3), 1.0).unwrap();
    let b = solve_fd(&r, &FDConfig::new(51, 3e-3), 3.0).unwrap();
    assert_eq!(a.nt, b.nt);
    assert!(a.sup_diff(&b).unwrap() < 1e-6);
}

#[test]
fn homogenization_identity_and_steady_profile() {
    let s = ProblemSpec::new(1.0, 1.0).with_initial(Smooth1::sine_mode(0.2, 1.0), Smooth1::zero());
    let h = homogenize_boundaries(&s);
    assert_eq!(h.u0.eval(0.4), s.u0.eval(0.4));

    let s = ProblemSpec::new(1.0, 1.0)
        .with_initial(Smooth1::new(|x| 1.0 - x), Smooth1::zero())
        .with_boundary(Smooth1::constant(1.0), Smooth1::zero());
    s.validate().unwrap();
    let h = homogenize_boundaries(&s);
    let v = solve_fd(&h, &FDConfig::new(41, 0.01), 1.0).unwrap();
    assert!(v.u.iter().all(|a| a.abs() < 1e-14));
    let u = BoundaryLift::of(&s).lift_grid(&v);
    let direct = solve_fd(&s, &FDConfig::new(41, 0.01), 1.0).unwrap();
    assert!(u.sup_diff(&direct).unwrap() < 1e-12);
}

#[test]
fn homogenization_with_time_dependent_boundary() {
    let s = ProblemSpec::new(1.0, 1.0)
        .with_initial(Smooth1::zero(), Smooth1::new(|x| 1.0 - x))
        .with_boundary(Smooth1::with_derivatives(f64::sin, f64::cos, |t| -t.sin()), Smooth1::zero())
        .with_forcing(|_, _, u, _, _, ut| -0.5 * ut - u.sin());
    s.validate().unwrap();
    let h = homogenize_boundaries(&s);
    assert!(h.has_zero_boundaries());
    // -p_tt = (1 - x) sin t enters the forcing at the zero state shifted by p
    let (x, t) = (0.3f64, 0.8f64);
    let p = (1.0 - x) * t.sin();
    let pt = (1.0 - x) * t.cos();
    let expect = -0.5 * pt - p.sin() + (1.0 - x) * t.sin();
    assert!((h.f(x, t, 0.0, 0.0, 0.0, 0.0) - expect).abs() < 1e-12);

    let cfg = FDConfig::new(101, 1e-3);
    let v = solve_fd(&h, &cfg, 1.0).unwrap();
    let u = BoundaryLift::of(&s).lift_grid(&v);
    let direct = solve_fd(&s, &cfg, 1.0).unwrap();
    assert!(u.sup_diff(&direct).unwrap() < 1e-4);
    assert!(u.boundary_mismatch(f64::sin, |_| 0.0) < 1e-12);
    assert!(pde_residual(&s, &u).unwrap() < 1e-2);
}

#[test]
fn perturbation_of_zero_reference_keeps_forcing() {
    let s = ProblemSpec::new(1.0, 1.0).with_forcing(|_, _, u, _, _, ut| -u.sin() - 0.5 * ut);
    let zero = GridFunction::zeros(11, 5, 0.0, 0.1).unwrap();
    let p = perturbation_spec(&s, &zero).unwrap();
    for &(u, ut) in &[(0.1, 0.2), (-0.4, 1.0)] {
        assert!((p.f(0.3, 0.2, u, 0.0, 0.0, ut) - s.f(0.3, 0.2, u, 0.0, 0.0, ut)).abs() < 1e-14);
    }
}

#[test]
fn perturbation_around_pi() {
    let s = ProblemSpec::new(1.0, 1.0)
        .with_forcing(|_, _, u, _, _, _| -u.sin())
        .with_initial(Smooth1::constant(PI), Smooth1::zero())
        .with_boundary(Smooth1::constant(PI), Smooth1::constant(PI));
    s.validate().unwrap();
    let star = solve_fd(&s, &FDConfig::new(21, 0.01), 1.0).unwrap();
    let p = perturbation_spec(&s, &star).unwrap();
    assert!(p.has_zero_boundaries());
    for &(x, t, u) in &[(0.2, 0.1, 0.3f64), (0.7, 0.9, -1.2), (0.5, 0.5, 2.0)] {
        assert!((p.f(x, t, u, 0.0, 0.0, 0.0) - u.sin()).abs() < 1e-12);
        assert!(p.f(x, t, 0.0, 0.0, 0.0, 0.0).abs() <= 1e-12);
    }
}

#[test]
fn perturbation_rejects_non_solution() {
    let s = ProblemSpec::new(1.0, 1.0);
    let mut g = GridFunction::zeros(21, 20, 0.0, 0.01).unwrap();
    for n in 0..g.nt {
        for i in 0..g.nx {
            g.u[n * g.nx + i] = (g.t(n) * 3.0).exp() * (PI * g.x(i)).sin();
        }
    }
    assert!(matches!(perturbation_spec(&s, &g), Err(Error::Residual(_))));
}

#[test]
fn consistency_violations_are_errors() {
    let s = ProblemSpec::new(1.0, 1.0)
        .with_initial(Smooth1::constant(1.0), Smooth1::zero())
        .with_boundary(Smooth1::zero(), Smooth1::zero());
    assert!(s.validate().is_err());
    assert!(ProblemSpec::new(0.0, 1.0).validate().is_err());
}

#[test]
fn csv_round_trip() {
    let s = ProblemSpec::new(1.0, 1.0).with_initial(Smooth1::sine_mode(0.1, 1.0), Smooth1::zero());
    let g = solve_fd(&s, &FDConfig::new(11, 0.05), 0.5).unwrap();
    let mut buf = Vec::new();
    g.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("x,t,u,ut\n"));
    let back = GridFunction::read_csv(&buf[..]).unwrap();
    assert_eq!(back.nx, g.nx);
    assert_eq!(back.nt, g.nt);
    assert!(back.sup_diff(&g).unwrap() < 1e-12);
}
