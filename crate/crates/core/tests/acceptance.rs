//! Acceptance suite with its own runner: one PASS/FAIL line per criterion,
//! non-zero exit when any criterion fails. `-- --ignored` (or
//! `--include-ignored`) also counts the known-failing literal check.

use std::f64::consts::PI;
use std::panic;
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use dwl_core::comparison::{
    lemma1_constants, lemma2_attraction_time, solve_comparison_ode, verify_hyp_averaged,
    verify_hyp_growth, AveragedHypotheses, OdeVariant, ScalarForcing,
};
use dwl_core::core_model::{ProblemSpec, Smooth1, StatePair};
use dwl_core::fdsolver::{convergence_study, solve_fd, FDConfig, Manufactured, StudyPlan};
use dwl_core::forcing_examples::{spike_hypothesis_constants, spike_integral, spike_value, SpikeFamily};
use dwl_core::functionals::*;
use dwl_core::kernels::{ltheta_residual, verify_kernel_bounds, KernelParams};
use dwl_core::picard::{solve_picard, PicardConfig};
use dwl_core::quad::{adaptive_pieces, QuadOptions};
use dwl_core::scenarios::{
    run_boundedness_experiment, run_decay_experiment, BoundednessConfig, Damping, ExperimentConfig,
    StabilityReport, Theorem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static RESULT: Mutex<Option<(bool, String)>> = Mutex::new(None);

fn line(n: u8, name: &str, pass: bool, detail: String) {
    let text = format!("criterion {n:>2} {}: {name} ({detail})", if pass { "PASS" } else { "FAIL" });
    *RESULT.lock().unwrap() = Some((pass, text));
}

const PI2: f64 = PI * PI;

/// Random sine polynomial with exact Fourier integrals.
struct Modes {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Modes {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let k = rng.gen_range(1..=8);
        let decay = rng.gen_range(0.0..2.5);
        let scale = 10f64.powf(rng.gen_range(-2.0..0.3));
        let a = (1..=k).map(|j| scale / (j as f64).powf(decay) * rng.gen_range(-1.0..1.0)).collect();
        let b = (1..=k).map(|j| 3.0 * scale / (j as f64).powf(decay) * rng.gen_range(-1.0..1.0)).collect();
        Modes { a, b }
    }

    fn state(&self, nx: usize) -> StatePair {
        let w = |k: usize| (k + 1) as f64 * PI;
        let (a0, a1, a2, b) = (self.a.clone(), self.a.clone(), self.a.clone(), self.b.clone());
        StatePair::from_fns(
            nx,
            move |x| a0.iter().enumerate().map(|(k, c)| c * (w(k) * x).sin()).sum(),
            move |x| a1.iter().enumerate().map(|(k, c)| c * w(k) * (w(k) * x).cos()).sum(),
            move |x| a2.iter().enumerate().map(|(k, c)| -c * w(k).powi(2) * (w(k) * x).sin()).sum(),
            move |x| b.iter().enumerate().map(|(k, c)| c * (w(k) * x).sin()).sum(),
        )
    }
}

fn criterion_01_constants() {
    let p4 = PI2 * PI2;
    let (w1, w2, w3) = (p4 / (1.0 + p4), p4 / (1.0 + PI2 + p4), PI2 / (1.0 + PI2));
    let mut ok = (omega1() - w1).abs() < 1e-12 && (omega2() - w2).abs() < 1e-12 && (omega3() - w3).abs() < 1e-12;
    let r2 = |v: f64| (v * 100.0).round() / 100.0;
    ok &= r2(omega1()) == 0.99 && r2(omega2()) == 0.90 && r2(omega3()) == 0.91;
    let k = compute_constants(1.0, 1.0, 1.0, None).unwrap();
    ok &= (k.c2_sq - 1.5).abs() < 1e-5 && (k.c1_sq - 0.12373).abs() < 1e-5 && (k.a - 2.5).abs() < 1e-5;
    // c3^2 and p against direct evaluation of eps w2 / 2 and c3^2 / c2^2
    let c3 = w2 / 2.0;
    ok &= (k.c3_sq - c3).abs() < 1e-12 && (k.p - c3 / 1.5).abs() < 1e-12;
    line(
        1,
        "constants regression",
        ok,
        format!(
            "w = {:.5}/{:.5}/{:.5}, c2^2 = {}, c1^2 = {:.5}, A = {}, c3^2 = {:.8}, p = {:.8}",
            omega1(),
            omega2(),
            omega3(),
            k.c2_sq,
            k.c1_sq,
            k.a,
            k.c3_sq,
            k.p
        ),
    );
}

/// The two literals for c3^2 and p quoted with 1e-5 tolerance do not match
/// the defining formulas (0.449807..., 0.299871...); see README.
fn criterion_01_quoted_literals() {
    let k = compute_constants(1.0, 1.0, 1.0, None).unwrap();
    let ok = (k.c3_sq - 0.44977).abs() < 1e-5 && (k.p - 0.29985).abs() < 1e-5;
    line(1, "quoted c3^2 / p literals", ok, format!("c3^2 = {:.8}, p = {:.8}", k.c3_sq, k.p));
}

fn criterion_02_poincare() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let m = Modes::random(&mut rng);
        if m.a.iter().all(|c| c.abs() < 1e-12) {
            continue;
        }
        let (r1, r2) = poincare_check(&m.state(257)).unwrap();
        worst = worst.min(r1.min(r2));
    }
    let (e1, e2) = poincare_check(&StatePair::from_fns(
        257,
        |x| (PI * x).sin(),
        |x| PI * (PI * x).cos(),
        |x| -PI2 * (PI * x).sin(),
        |_| 0.0,
    ))
    .unwrap();
    let eq = (e1 - PI2).abs().max((e2 - PI2).abs());
    line(
        2,
        "Poincare ratios",
        worst >= PI2 * (1.0 - 1e-6) && eq < 1e-8,
        format!("min ratio / pi^2 = {:.9}, sin(pi x) deviation = {eq:.2e}", worst / PI2),
    );
}

fn criterion_03_kernel_bounds() {
    let p = KernelParams::new(1.0, 1.0).unwrap().with_terms_for_horizon(2.0);
    let xs: Vec<f64> = (0..10).map(|k| 0.05 + 0.1 * k as f64).collect();
    let ss: Vec<f64> = (0..10).map(|k| 0.05 * (40f64).powf(k as f64 / 9.0)).collect();
    let mut fails = 0;
    let mut worst_res = 0.0f64;
    for &s in &ss {
        for &x in &xs {
            let r = verify_kernel_bounds(x, s, &p).unwrap();
            if !r.all_pass() {
                fails += 1;
            }
            worst_res = worst_res.max(ltheta_residual(x, s, &p).unwrap().value.abs());
        }
    }
    line(
        3,
        "kernel integral bounds and L theta residual",
        fails == 0 && worst_res < 1e-3,
        format!("{fails} failing points of 100, max |L theta| = {worst_res:.2e}, s in [{}, {:.2}]", ss[0], ss[9]),
    );
}

fn criterion_04_mms() {
    let m = Manufactured::decaying_sine(1.0);
    let spec = ProblemSpec::new(1.0, 1.0)
        .with_forcing(|_, _, u, _, _, _| u)
        .with_initial(Smooth1::sine_mode(1.0, 1.0), Smooth1::sine_mode(-1.0, 1.0));
    let plan = StudyPlan {
        nxs: vec![51, 101, 201],
        dt_space: 2e-4,
        dts: vec![0.04, 0.02, 0.01],
        nx_time: 51,
        horizon: 1.0,
    };
    let r = convergence_study(&spec, Some(&m), &plan).unwrap();
    let min = r.space_orders.iter().chain(&r.time_orders).cloned().fold(f64::INFINITY, f64::min);
    line(
        4,
        "manufactured-solution convergence",
        min >= 1.8,
        format!("space orders {:?}, time orders {:?}", r.space_orders, r.time_orders),
    );
}

fn criterion_05_picard_vs_fd() {
    let spec = ProblemSpec::new(1.0, 1.0)
        .with_forcing(|_, _, u, _, _, ut| -u.sin() - 0.5 * ut)
        .with_initial(Smooth1::sine_mode(0.1, 1.0), Smooth1::zero());
    let cfg = PicardConfig {
        nx: 101,
        dt: 0.01,
        horizon: Some(1.0),
        ..PicardConfig::default()
    };
    let (g, reps) = solve_picard(&spec, &cfg).unwrap();
    let fd = solve_fd(&spec, &FDConfig::new(101, 1e-4).with_store_every(100), 1.0).unwrap();
    let diff = g.sup_diff(&fd).unwrap();
    let worst = reps.iter().map(|r| r.max_contraction).fold(0.0, f64::max);
    line(
        5,
        "Picard and FD agree",
        diff < 1e-3 && worst < 1.0,
        format!("sup diff = {diff:.2e}, {} segments, max contraction = {worst:.3}", reps.len()),
    );
}

fn criterion_06_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let k7 = PotentialSpec::linear(7.0);
    let sg = PotentialSpec::sine_gordon(1.0);
    let mut worst = [f64::INFINITY; 4];
    for i in 0..1000 {
        let s = Modes::random(&mut rng).state(257);
        let d2 = distance_d_sq(&s);
        if d2 == 0.0 {
            continue;
        }
        let gamma = [0.75, 1.0, 2.0][i % 3];
        let eps = [0.5, 1.0, 2.0][(i / 3) % 3];
        let v = lyapunov_v(&s, gamma, eps);
        worst[0] = worst[0].min(v / (c1_sq(eps, gamma) * d2));
        worst[1] = worst[1].min(c2_sq(eps, gamma) * d2 / v);
        for (pot, kb) in [(&k7, 7.0), (&sg, 1.0)] {
            let k = compute_constants(eps, gamma, kb, None).unwrap();
            worst[2] = worst[2].min(lyapunov_w(&s, gamma, eps, pot) / (k.k1_sq * d2));
            worst[3] = worst[3].min(hamiltonian_v(&s, pot) / (distance_d1(&s).powi(2) / 16.0));
        }
    }
    let tol = 1.0 - 1e-12;
    line(
        6,
        "sandwich inequalities",
        worst.iter().all(|&w| w >= tol),
        format!(
            "min ratios V/(c1^2 d^2) = {:.4}, c2^2 d^2/V = {:.4}, W/(k1^2 d^2) = {:.4}, v/(d1^2/16) = {:.4}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
}

fn random_hypotheses(rng: &mut ChaCha8Rng, p: f64, i: usize) -> AveragedHypotheses {
    let mut h = match i % 3 {
        0 => {
            let alpha: f64 = rng.gen_range(1.0..2.0);
            let beta = (alpha - rng.gen_range(0.0f64..0.8)).max(alpha - 0.999);
            let fam = SpikeFamily::new(rng.gen_range(0.02..0.6) * p, alpha, beta).unwrap();
            spike_hypothesis_constants(&fam, p).unwrap()
        }
        1 => {
            let g0 = rng.gen_range(0.0..0.6) * p;
            AveragedHypotheses::new(ScalarForcing::constant(g0), p)
                .with_sigma(0.01)
                .with_growth(1.0, 1.0, g0, 1.5 * g0)
        }
        _ => {
            let g0 = rng.gen_range(0.05..0.6) * p;
            let g = ScalarForcing::new("g0(1+sin t)", move |t| g0 * (1.0 + t.sin()))
                .with_integral(move |a, b| g0 * ((b - a) - b.cos() + a.cos()));
            let sup = verify_hyp_averaged(&g, p, 200.0, 4000, 0.0).unwrap().sup;
            AveragedHypotheses::new(g, p)
                .with_sigma(sup * 1.01 + 1e-3)
                .with_growth(1.0, 1.0, g0, 1.5 * g0)
        }
    };
    if rng.gen_bool(0.5) {
        let (c, r) = (rng.gen_range(0.0..2.0), rng.gen_range(0.2..1.0));
        h = h.with_g1(move |t, _| c * (-r * t).exp());
    }
    if rng.gen_bool(0.5) {
        let (c, r) = (rng.gen_range(0.0..2.0), rng.gen_range(0.2..1.0));
        h = h.with_g2(move |t, eta| c * (-r * t).exp() * eta.min(1.0));
    }
    h.with_horizon(200.0)
}

fn criterion_07_comparison_engine() {
    let zero = AveragedHypotheses::new(ScalarForcing::zero(), 0.3).with_sigma(0.1).with_growth(1.0, 1.0, 0.0, 1.0);
    let y10 = solve_comparison_ode(&zero, 1.0, 0.0, 10.0, OdeVariant::StateDependent).unwrap().last();
    let closed = (y10 - (-3f64).exp()).abs();

    let p = compute_constants(1.0, 1.0, 1.0, None).unwrap().p;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let (mut bounded, mut attracted, mut checked) = (f64::INFINITY, f64::INFINITY, 0);
    for i in 0..50 {
        let hyp = random_hypotheses(&mut rng, p, i);
        let av = verify_hyp_averaged(&hyp.g, p, 200.0, 4000, hyp.sigma).unwrap();
        let gr = verify_hyp_growth(&hyp.g, hyp.chi, hyp.kappa, hyp.q, hyp.m_bound, 200.0).unwrap();
        assert!(av.pass && gr.pass, "set {i} is not admissible: {av:?} {gr:?}");
        let alpha = rng.gen_range(0.2..2.0);
        let lc = lemma1_constants(&hyp, alpha).unwrap();
        let t0 = lc.s_tilde + rng.gen_range(0.0..5.0);
        let span = 120.0;
        for _ in 0..3 {
            let y0 = rng.gen_range(0.0..=alpha);
            let y = solve_comparison_ode(&hyp, y0, t0, span, OdeVariant::StateDependent).unwrap();
            bounded = bounded.min((lc.beta_tilde - y.max()) / lc.beta_tilde);
        }
        let rho = alpha * rng.gen_range(0.05..0.5);
        let r = lemma2_attraction_time(&hyp.clone().with_horizon(span), rho, alpha, lc.beta_tilde, t0).unwrap();
        for _ in 0..3 {
            let z0 = rng.gen_range(0.0..=alpha);
            let z = solve_comparison_ode(&hyp, z0, t0, span, OdeVariant::Frozen(lc.beta_tilde)).unwrap();
            for (&t, &v) in z.t.iter().zip(&z.y) {
                if t > t0 + r.t_hat {
                    attracted = attracted.min((rho - v) / rho);
                    checked += 1;
                }
            }
        }
    }
    line(
        7,
        "comparison engine",
        closed < 1e-8 && bounded > 0.0 && attracted > 0.0 && checked > 0,
        format!(
            "|y(10) - e^-3| = {closed:.1e}, min margin below beta = {bounded:.3}, below rho after T_hat = {attracted:.3}"
        ),
    );
}

fn criterion_08_spike_example() {
    let p = compute_constants(1.0, 1.0, 1.0, None).unwrap().p;
    let mut ok = true;
    let mut detail = Vec::new();
    for (b, a, be) in [(0.2, 1.0, 0.6), (0.1, 1.0, 1.0), (0.2, 1.5, 1.0)] {
        let fam = SpikeFamily::new(b, a, be).unwrap();
        let h = spike_hypothesis_constants(&fam, p).unwrap();
        let av = verify_hyp_averaged(&h.g, p, 200.0, 4000, h.sigma).unwrap();
        let gr = verify_hyp_growth(&h.g, h.chi, h.kappa, h.q, h.m_bound, 200.0).unwrap();
        ok &= av.pass && gr.pass;
        detail.push(format!("({b},{a},{be}): sup {:.3} <= {:.3}", av.sup, h.sigma));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut err = 0.0f64;
    for _ in 0..60 {
        let fam = SpikeFamily::new(rng.gen_range(0.05..0.5), 1.0, rng.gen_range(0.1..1.0)).unwrap();
        let t0 = rng.gen_range(0.0..80.0);
        let t = t0 + rng.gen_range(0.0..20.0);
        let mut pts = vec![t0];
        pts.extend(fam.knots(t0, t));
        pts.push(t);
        let q = adaptive_pieces(|s| spike_value(s, &fam), &pts, QuadOptions::tol(1e-14, 1e-13)).unwrap().value;
        err = err.max((q - spike_integral(t0, t, &fam)).abs());
    }
    ok &= err < 1e-10;
    line(8, "spike example", ok, format!("{}; quadrature error {err:.1e}", detail.join(", ")));
}

fn summary(r: &StabilityReport, key: &str) -> (bool, f64) {
    let vs: Vec<_> = r.verdicts.iter().filter(|v| v.claim.contains(key)).collect();
    (!vs.is_empty() && vs.iter().all(|v| v.pass), vs.iter().map(|v| v.margin).fold(f64::INFINITY, f64::min))
}

fn criterion_09_theorem_level_decay() {
    let cfg = ExperimentConfig {
        theorem: Theorem::Two,
        ..Default::default()
    };
    let r2 = run_decay_experiment(&cfg, &PotentialSpec::sine_gordon(1.0), &Damping::constant(0.5)).unwrap();
    let cfg4 = ExperimentConfig {
        theorem: Theorem::Four,
        d_pot: 1.0 / 1.5,
        tau_pot: 0.5,
        ..Default::default()
    };
    let r4 = run_decay_experiment(&cfg4, &PotentialSpec::root(0.5), &Damping::constant(0.5)).unwrap();
    let (env_ok, env_m) = summary(&r2, "envelope");
    let (w_ok, w_m) = summary(&r2, "Wdot");
    let (p_ok, p_m) = summary(&r4, "power envelope");
    let hyp_ok = summary(&r2, "hypothesis").0 && summary(&r4, "hypothesis").0;
    let t_found = r4.runs.iter().all(|run| run.envelope.t_tilde.is_some());
    let rates: Vec<f64> = r2.runs.iter().filter_map(|run| run.fitted_rate).collect();
    let c = r2.runs[0].envelope.c_rate.unwrap();
    line(
        9,
        "theorem-level decay",
        env_ok && w_ok && p_ok && hyp_ok && t_found && r2.all_pass() && r4.all_pass(),
        format!(
            "{} + {} runs, exp envelope margin {env_m:.3}, Wdot margin {w_m:.1e}, power margin {p_m:.3}, C = {c:.4}, fitted rates {:.3}..{:.3}",
            r2.runs.len(),
            r4.runs.len(),
            rates.iter().cloned().fold(f64::INFINITY, f64::min),
            rates.iter().cloned().fold(0.0, f64::max)
        ),
    );
}

fn criterion_10_theorem_one_boundedness() {
    let r = run_boundedness_experiment(&BoundednessConfig::default()).unwrap();
    let (b_ok, b_m) = summary(&r, "bounded");
    let (c_ok, c_m) = summary(&r, "comparison");
    let max_d = r
        .runs
        .iter()
        .flat_map(|run| run.series.iter().map(|row| row.d))
        .fold(0.0, f64::max);
    line(
        10,
        "theorem-one boundedness",
        b_ok && c_ok,
        format!("{} runs, alpha in {{0.5, 1}}, max d = {max_d:.3}, margin below beta = {b_m:.3}, V <= y margin = {c_m:.2e}", r.runs.len()),
    );
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let strict = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let criteria: [(fn(), bool); 11] = [
        (criterion_01_constants, true),
        (criterion_01_quoted_literals, false),
        (criterion_02_poincare, true),
        (criterion_03_kernel_bounds, true),
        (criterion_04_mms, true),
        (criterion_05_picard_vs_fd, true),
        (criterion_06_sandwich, true),
        (criterion_07_comparison_engine, true),
        (criterion_08_spike_example, true),
        (criterion_09_theorem_level_decay, true),
        (criterion_10_theorem_one_boundedness, true),
    ];
    let mut failed = 0;
    for (k, (run, counted)) in criteria.iter().enumerate() {
        let start = Instant::now();
        *RESULT.lock().unwrap() = None;
        let outcome = panic::catch_unwind(run);
        let (pass, text) = match (outcome, RESULT.lock().unwrap().take()) {
            (Ok(()), Some(r)) => r,
            (_, _) => (false, format!("criterion entry {} FAIL: panicked before reporting", k + 1)),
        };
        let counts = *counted || strict;
        let note = if counts { "" } else { "  [known failure, not counted; see README]" };
        println!("{text} [{:.1}s]{note}", start.elapsed().as_secs_f64());
        if !pass && counts {
            failed += 1;
        }
    }
    println!("acceptance: {failed} counted criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
