use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dwl_core::comparison::{verify_hyp_averaged, verify_hyp_growth};
use dwl_core::config::{
    certify, kernel_rows, load_config, run_lemma, CertifyConfig, ExperimentFile, ExperimentPlan,
    KernelTableConfig, LemmaConfig, Method, SolveConfig, KERNEL_HEADER,
};
use dwl_core::core_model::{GridFunction, StatePair};
use dwl_core::fdsolver::solve_fd;
use dwl_core::forcing_examples::{spike_hypothesis_constants, spike_value, SpikeFamily};
use dwl_core::functionals::{compute_constants, functional_row, PotentialSpec};
use dwl_core::picard::solve_picard;
use dwl_core::scenarios::{
    emit_report, run_boundedness_experiment, run_decay_experiment, ReportFormat, StabilityReport, Verdict,
};
use dwl_core::{Error, Result};

#[derive(Parser)]
#[command(name = "dwl", version, about = "Damped wave solver, Lyapunov functionals and stability experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fd,
    Picard,
}

#[derive(Clone, Copy, ValueEnum)]
enum PotentialArg {
    Zero,
    SineGordon,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a problem with the finite-difference or the fixed-point solver.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        fix_tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Tabulate K, theta and the Green's function with its derivatives.
    KernelTable {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Constants and claims of the comparison lemmas for a hypothesis set.
    Lemma {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sample the spike forcing and check its hypothesis constants.
    Spike {
        /// b0 (the train has apex 2 b0^2 n^beta).
        #[arg(long)]
        b0: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        /// Decay rate p; defaults to the value for eps = gamma = 1.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check constants, schedules and hypotheses without solving the PDE.
    Certify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a stability experiment and write its report.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Append d, d1, V, W, v_ham to a solution trace.
    Functionals {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "zero")]
        potential: PotentialArg,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, v)?;
    Ok(())
}

fn print_verdicts(vs: &[Verdict]) -> bool {
    for v in vs {
        let run = v.run.as_deref().map(|r| format!(" [{r}]")).unwrap_or_default();
        println!(
            "{} {}{} (margin {:.3e}, tol {:.1e})",
            if v.pass { "PASS" } else { "FAIL" },
            v.claim,
            run,
            v.margin,
            v.tolerance
        );
    }
    vs.iter().all(|v| v.pass)
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Solve {
            config,
            out,
            method,
            rho,
            fix_tol,
            max_iter,
            horizon,
            nx,
            dt,
        } => {
            let mut cfg: SolveConfig = match config {
                Some(p) => load_config(&p)?,
                None => SolveConfig::default(),
            };
            if let Some(m) = method {
                cfg.method = match m {
                    MethodArg::Fd => Method::Fd,
                    MethodArg::Picard => Method::Picard,
                };
            }
            if let Some(h) = horizon {
                cfg.problem.horizon = h;
            }
            if let Some(n) = nx {
                cfg.fd.nx = n;
                cfg.picard.nx = n;
            }
            if let Some(d) = dt {
                cfg.fd.dt = d;
                cfg.picard.dt = d;
            }
            if let Some(r) = rho {
                cfg.picard.rho = r;
            }
            if let Some(t) = fix_tol {
                cfg.picard.fix_tol = t;
            }
            if let Some(m) = max_iter {
                cfg.picard.max_iter = m;
            }
            fs::create_dir_all(&out)?;
            let spec = cfg.problem.build()?;
            let (grid, segments, ok) = match cfg.method {
                Method::Fd => (solve_fd(&spec, &cfg.fd.to_config(), cfg.problem.horizon)?, Vec::new(), true),
                Method::Picard => {
                    cfg.picard.horizon = Some(cfg.problem.horizon);
                    let (g, segs) = solve_picard(&spec, &cfg.picard)?;
                    let ok = segs.iter().all(|s| s.max_contraction < 1.0);
                    (g, segs, ok)
                }
            };
            grid.write_csv(BufWriter::new(File::create(out.join("solution.csv"))?))?;
            write_json(
                &out.join("segments.json"),
                &serde_json::json!({
                    "schema_version": dwl_core::scenarios::SCHEMA_VERSION,
                    "method": cfg.method,
                    "t_end": grid.t_end(),
                    "nx": grid.nx,
                    "nt": grid.nt,
                    "segments": segments,
                }),
            )?;
            println!("solved to t = {} on {} x {} samples", grid.t_end(), grid.nx, grid.nt);
            if !ok {
                println!("FAIL a fixed-point segment did not contract");
            }
            Ok(ok)
        }
        Cmd::KernelTable { config, out } => {
            let cfg: KernelTableConfig = match config {
                Some(p) => load_config(&p)?,
                None => KernelTableConfig::default(),
            };
            fs::create_dir_all(&out)?;
            let mut w = BufWriter::new(File::create(out.join("kernel_table.csv"))?);
            writeln!(w, "{KERNEL_HEADER}")?;
            let rows = kernel_rows(&cfg)?;
            for r in &rows {
                writeln!(
                    w,
                    "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    r.x, r.s, r.k, r.theta, r.w, r.w_t, r.w_x, r.w_xx, r.err
                )?;
            }
            w.flush()?;
            println!("wrote {} kernel rows", rows.len());
            Ok(true)
        }
        Cmd::Lemma { config, out } => {
            let cfg: LemmaConfig = load_config(&config)?;
            let res = run_lemma(&cfg)?;
            fs::create_dir_all(&out)?;
            write_json(
                &out.join("lemma_constants.json"),
                &serde_json::json!({
                    "schema_version": dwl_core::scenarios::SCHEMA_VERSION,
                    "constants": res.constants,
                    "attraction": res.attraction,
                    "verdicts": res.verdicts,
                }),
            )?;
            let mut w = BufWriter::new(File::create(out.join("lemma_trajectory.csv"))?);
            writeln!(w, "t,y")?;
            for (t, y) in &res.trajectory {
                writeln!(w, "{t:e},{y:e}")?;
            }
            w.flush()?;
            Ok(print_verdicts(&res.verdicts))
        }
        Cmd::Spike {
            b0,
            alpha,
            beta,
            emit,
            horizon,
            p,
            out,
        } => {
            let fam = SpikeFamily::new(b0 * b0, alpha, beta)?;
            let p = match p {
                Some(p) => p,
                None => compute_constants(1.0, 1.0, 0.0, Some(0.5))?.p,
            };
            let hyp = spike_hypothesis_constants(&fam, p)?.with_horizon(horizon);
            let av = verify_hyp_averaged(&hyp.g, p, horizon, 4000, hyp.sigma)?;
            let gr = verify_hyp_growth(&hyp.g, hyp.chi, hyp.kappa, hyp.q, hyp.m_bound, horizon)?;
            let verdicts = vec![
                Verdict {
                    claim: "hypothesis: averaged condition".into(),
                    run: None,
                    tolerance: 0.0,
                    margin: av.sigma - av.sup,
                    pass: av.pass,
                },
                Verdict {
                    claim: "hypothesis: growth condition".into(),
                    run: None,
                    tolerance: 0.0,
                    margin: -gr.max_violation,
                    pass: gr.pass,
                },
            ];
            let mut ts: Vec<f64> = (0..=(horizon * 100.0).round() as usize).map(|k| k as f64 * 0.01).collect();
            ts.extend(fam.knots(0.0, horizon));
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            fs::create_dir_all(&out)?;
            let samples: Vec<(f64, f64)> = ts.iter().map(|&t| (t, spike_value(t, &fam))).collect();
            match emit {
                Emit::Csv => {
                    let mut w = BufWriter::new(File::create(out.join("spike.csv"))?);
                    writeln!(w, "t,b2")?;
                    for (t, b) in &samples {
                        writeln!(w, "{t:e},{b:e}")?;
                    }
                    w.flush()?;
                }
                Emit::Json => write_json(&out.join("spike_samples.json"), &samples)?,
            }
            write_json(
                &out.join("spike_constants.json"),
                &serde_json::json!({
                    "schema_version": dwl_core::scenarios::SCHEMA_VERSION,
                    "family": fam,
                    "p": p,
                    "q": hyp.q,
                    "chi": hyp.chi,
                    "kappa": hyp.kappa,
                    "M": hyp.m_bound,
                    "sigma": hyp.sigma,
                    "averaged": av,
                    "growth": gr,
                    "verdicts": verdicts,
                }),
            )?;
            Ok(print_verdicts(&verdicts))
        }
        Cmd::Certify { config, out } => {
            let cfg: CertifyConfig = match config {
                Some(p) => load_config(&p)?,
                None => CertifyConfig::default(),
            };
            let cert = certify(&cfg)?;
            fs::create_dir_all(&out)?;
            write_json(&out.join("certificate.json"), &cert)?;
            Ok(print_verdicts(&cert.verdicts))
        }
        Cmd::Experiment { config, out } => {
            let file: ExperimentFile = load_config(&config)?;
            let report: StabilityReport = match file.plan()? {
                ExperimentPlan::Boundedness(b) => run_boundedness_experiment(&b)?,
                ExperimentPlan::Decay(cfg, pot, damping) => run_decay_experiment(&cfg, &pot, &damping)?,
            };
            emit_report(&report, &out, &[ReportFormat::Csv, ReportFormat::Json])?;
            for run in &report.runs {
                println!(
                    "run {}: d0 = {:.4e}, fitted rate = {}",
                    run.label,
                    run.d0,
                    run.fitted_rate.map_or("n/a".into(), |r| format!("{r:.4}"))
                );
            }
            Ok(print_verdicts(&report.verdicts))
        }
        Cmd::Functionals {
            trace,
            gamma,
            epsilon,
            potential,
            out,
        } => {
            let mut g = GridFunction::read_csv(BufReader::new(File::open(&trace)?))?;
            if g.nt < 3 && g.ut.is_none() {
                return Err(Error::InvalidInput("trace needs u_t or at least three time levels".into()));
            }
            g.derive_time();
            g.derive_spatial();
            let pot = match potential {
                PotentialArg::Zero => PotentialSpec::zero(),
                PotentialArg::SineGordon => PotentialSpec::sine_gordon(1.0),
            };
            fs::create_dir_all(&out)?;
            let mut w = BufWriter::new(File::create(out.join("functionals.csv"))?);
            writeln!(w, "x,t,u,ut,d,d1,V,W,v_ham")?;
            let ut = g.ut.clone().expect("u_t derived above");
            for n in 0..g.nt {
                let s = StatePair::from_grid(&g, n)?;
                let r = functional_row(g.t(n), &s, gamma, epsilon, &pot);
                for i in 0..g.nx {
                    writeln!(
                        w,
                        "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                        g.x(i),
                        r.t,
                        g.at(i, n),
                        ut[n * g.nx + i],
                        r.d,
                        r.d1,
                        r.v,
                        r.w,
                        r.v_ham
                    )?;
                }
            }
            w.flush()?;
            println!("wrote functionals for {} time levels", g.nt);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
