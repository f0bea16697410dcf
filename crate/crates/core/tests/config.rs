use dwl_core::config::*;
use dwl_core::forcing_examples::{spike_value, SpikeFamily};

const SOLVE_TOML: &str = r#"
method = "fd"
[problem]
epsilon = 1.0
horizon = 0.5
initial = { u0 = [0.1], u1 = [] }
[problem.forcing]
kind = "sine_gordon"
damping = 0.5
[fd]
nx = 41
dt = 0.005
store_every = 5
"#;

#[test]
fn solve_config_from_toml_and_json() {
    let c: SolveConfig = parse_config(SOLVE_TOML, false).unwrap();
    assert_eq!(c.method, Method::Fd);
    assert_eq!(c.fd.nx, 41);
    let json = serde_json::to_string(&c).unwrap();
    let back: SolveConfig = parse_config(&json, true).unwrap();
    assert_eq!(back.problem, c.problem);
    let spec = c.problem.build().unwrap();
    let u = 0.3f64;
    assert!((spec.f(0.2, 0.0, u, 0.0, 0.0, 2.0) - (-u.sin() - 1.0)).abs() < 1e-15);
    let g = dwl_core::fdsolver::solve_fd(&spec, &c.fd.to_config(), 0.5).unwrap();
    assert!(g.t_end() >= 0.5 - 1e-12);
    // the Picard block takes partial input
    let p: SolveConfig = parse_config("method = \"picard\"\n[picard]\nrho = 0.5\n", false).unwrap();
    assert_eq!(p.method, Method::Picard);
    assert_eq!(p.picard.rho, 0.5);
    assert_eq!(p.picard.max_iter, 60);
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(parse_config::<SolveConfig>("[problem]\nepsilon = 1\nbogus = 2\n", false).is_err());
    assert!(parse_config::<SolveConfig>("[problem.forcing]\nkind = \"nope\"\n", false).is_err());
}

#[test]
fn forcing_variants() {
    let mk = |f: ForcingConfig| {
        ProblemConfig {
            forcing: f,
            ..Default::default()
        }
        .build()
        .unwrap()
    };
    let s = mk(ForcingConfig::LinearDamping { k: 2.0, damping: 0.3 });
    assert!((s.f(0.5, 1.0, 0.4, 0.0, 0.0, 1.0) - (-0.8 - 0.3)).abs() < 1e-15);
    let s = mk(ForcingConfig::Spike {
        b0_sq: 0.2,
        alpha: 1.0,
        beta: 0.6,
        damping: 0.0,
        t0: 1.0,
    });
    let fam = SpikeFamily::new(0.2, 1.0, 0.6).unwrap();
    let t = 1.05;
    assert!((s.f(0.5, t, 1.0, 0.0, 0.0, 0.0) - spike_value(t + 1.0, &fam).sqrt() * 1f64.sin()).abs() < 1e-14);
    let table = Table {
        t: vec![0.0, 1.0, 3.0],
        values: vec![0.0, 2.0, 0.0],
    };
    assert_eq!(table.eval(0.5), 1.0);
    assert_eq!(table.eval(2.0), 1.0);
    assert_eq!(table.eval(-1.0), 0.0);
    assert_eq!(table.eval(9.0), 0.0);
    let s = mk(ForcingConfig::CustomTable { table, damping: 0.0 });
    assert!((s.f(0.1, 0.5, 0.7, 0.0, 0.0, 0.0) - 0.7f64.sin()).abs() < 1e-15);
    let bad = ForcingConfig::CustomTable {
        table: Table {
            t: vec![1.0, 1.0],
            values: vec![0.0, 0.0],
        },
        damping: 0.0,
    };
    assert!(ProblemConfig {
        forcing: bad,
        ..Default::default()
    }
    .build()
    .is_err());
}

#[test]
fn custom_table_toml() {
    let t = r#"
[problem.forcing]
kind = "custom_table"
t = [0.0, 1.0]
values = [1.0, 1.0]
damping = 0.2
"#;
    let c: SolveConfig = parse_config(t, false).unwrap();
    match c.problem.forcing {
        ForcingConfig::CustomTable { table, damping } => {
            assert_eq!(table.values, vec![1.0, 1.0]);
            assert_eq!(damping, 0.2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn scalar_sine_integral() {
    let g = ScalarConfig::Sine { g0: 0.1 }.build().unwrap();
    let q = g.integrate(0.3, 7.0).unwrap();
    let exact = 0.1 * (6.7 - 7f64.cos() + 0.3f64.cos());
    assert!((q - exact).abs() < 1e-14);
}

#[test]
fn lemma_run_for_spikes() {
    let json = r#"{
        "p": 0.29987, "g": {"kind": "spike", "b0_sq": 0.2, "alpha": 1.0, "beta": 0.6},
        "sigma": 0.90524, "chi": 0.6, "kappa": 0.6, "q": 0.33334, "M": 1.5,
        "horizon": 120.0, "alpha_tilde": 1.0, "rho_tilde": 0.2
    }"#;
    let cfg: LemmaConfig = parse_config(json, true).unwrap();
    let out = run_lemma(&cfg).unwrap();
    assert!(out.verdicts.iter().all(|v| v.pass), "{:?}", out.verdicts);
    assert_eq!(out.verdicts.len(), 4);
    assert!(out.attraction.unwrap().t_hat > 0.0);
    assert!(!out.trajectory.is_empty());
    assert_eq!(out.trajectory[0].1, 1.0);

    // an undersized sigma is reported, not hidden
    let mut bad = cfg.clone();
    bad.sigma = 1e-3;
    let out = run_lemma(&bad).unwrap();
    assert!(!out.verdicts[0].pass);
}

#[test]
fn experiment_file_plans() {
    let f: ExperimentFile = parse_config(
        "theorem = 4\ndamping = 0.5\n[potential]\nkind = \"root\"\ntau = 0.5\n[decay]\nhorizon = 2.0\nd_pot = 0.6666\n",
        false,
    )
    .unwrap();
    match f.plan().unwrap() {
        ExperimentPlan::Decay(cfg, pot, d) => {
            assert_eq!(cfg.theorem, dwl_core::scenarios::Theorem::Four);
            assert_eq!(cfg.horizon, 2.0);
            assert_eq!(cfg.nx, 201);
            assert!((pot.f(0.25) + 0.5).abs() < 1e-15);
            assert_eq!(d.inf_a, 0.5);
        }
        _ => panic!("expected a decay plan"),
    }
    let f: ExperimentFile = parse_config("theorem = 1\n", false).unwrap();
    assert!(matches!(f.plan().unwrap(), ExperimentPlan::Boundedness(_)));
    let f: ExperimentFile = parse_config("theorem = 5\n", false).unwrap();
    assert!(f.plan().is_err());
}

#[test]
fn certify_defaults() {
    let c = certify(&CertifyConfig::default()).unwrap();
    assert!(c.verdicts.iter().all(|v| v.pass));
    assert_eq!(c.schedule.len(), 4);
    assert!((c.constants.c2_sq - 1.5).abs() < 1e-15);
}

#[test]
fn kernel_rows_shape() {
    let cfg = KernelTableConfig {
        xs: vec![0.25, 0.5],
        ss: vec![0.1, 1.0],
        ..Default::default()
    };
    let rows = kernel_rows(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.k > 0.0 && r.theta > 0.0 && r.err >= 0.0));
    assert_eq!(KERNEL_HEADER.split(',').count(), 9);
}
