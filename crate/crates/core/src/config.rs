//! Configuration files (TOML or JSON) for problems, hypothesis sets,
//! kernel tables and experiments, and the builders that turn them into
//! solver inputs.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::comparison::{
    lemma1_constants, lemma2_attraction_time, solve_comparison_ode, verify_hyp_averaged,
    verify_hyp_growth, AttractionReport, AveragedHypotheses, LemmaConstants, OdeVariant,
    ScalarForcing,
};
use crate::core_model::{ProblemSpec, Smooth1};
use crate::error::{Error, Result};
use crate::fdsolver::FDConfig;
use crate::forcing_examples::{spike_value, SpikeFamily};
use crate::functionals::PotentialSpec;
use crate::kernels::{fundamental_k, green_w, green_w_derivatives, theta, KernelParams, Which};
use crate::picard::PicardConfig;
use crate::scenarios::{BoundednessConfig, Damping, ExperimentConfig, InitialShape, Theorem, Verdict};

/// Reads a config by extension: `.json` as JSON, anything else as TOML.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.extension().and_then(|e| e.to_str()) == Some("json"))
}

pub fn parse_config<T: DeserializeOwned>(text: &str, json: bool) -> Result<T> {
    if json {
        Ok(serde_json::from_str(text)?)
    } else {
        Ok(toml::from_str(text)?)
    }
}

fn one() -> f64 {
    1.0
}

/// Piecewise-linear table; constant beyond the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl Table {
    pub fn validate(&self) -> Result<()> {
        if self.t.is_empty() || self.t.len() != self.values.len() {
            return Err(Error::InvalidInput("table needs matching, nonempty t and values".into()));
        }
        if self.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("table times must increase strictly".into()));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.values[0];
        }
        if t >= self.t[n - 1] {
            return self.values[n - 1];
        }
        let k = self.t.partition_point(|&s| s <= t) - 1;
        let w = (t - self.t[k]) / (self.t[k + 1] - self.t[k]);
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }
}

/// Built-in forcings of the PDE; every variant may add linear damping -a u_t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    /// f = -b sin u - a u_t
    SineGordon {
        #[serde(default = "one")]
        b: f64,
        #[serde(default)]
        damping: f64,
    },
    /// f = -k u - a u_t
    LinearDamping {
        #[serde(default)]
        k: f64,
        damping: f64,
    },
    /// f = b(t) sin u - a u_t with b^2 the spike train
    Spike {
        b0_sq: f64,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        damping: f64,
        /// Time offset added before evaluating b.
        #[serde(default)]
        t0: f64,
    },
    /// f = g(t) sin u - a u_t with g tabulated
    CustomTable {
        #[serde(flatten)]
        table: Table,
        #[serde(default)]
        damping: f64,
    },
}

impl ForcingConfig {
    pub fn apply(&self, spec: ProblemSpec) -> Result<ProblemSpec> {
        Ok(match self.clone() {
            ForcingConfig::SineGordon { b, damping } => {
                spec.with_forcing(move |_, _, u, _, _, ut| -b * u.sin() - damping * ut)
            }
            ForcingConfig::LinearDamping { k, damping } => {
                spec.with_forcing(move |_, _, u, _, _, ut| -k * u - damping * ut)
            }
            ForcingConfig::Spike {
                b0_sq,
                alpha,
                beta,
                damping,
                t0,
            } => {
                let fam = SpikeFamily::new(b0_sq, alpha, beta)?;
                spec.with_forcing(move |_, t, u, _, _, ut| {
                    spike_value(t + t0, &fam).sqrt() * u.sin() - damping * ut
                })
            }
            ForcingConfig::CustomTable { table, damping } => {
                table.validate()?;
                spec.with_forcing(move |_, t, u, _, _, ut| table.eval(t) * u.sin() - damping * ut)
            }
        })
    }
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig::SineGordon { b: 1.0, damping: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub name: String,
    pub epsilon: f64,
    pub c: f64,
    pub horizon: f64,
    pub forcing: ForcingConfig,
    pub initial: InitialShape,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            name: "problem".into(),
            epsilon: 1.0,
            c: 1.0,
            horizon: 1.0,
            forcing: ForcingConfig::default(),
            initial: InitialShape {
                u0: vec![0.1],
                u1: vec![],
            },
        }
    }
}

fn series(c: Vec<f64>) -> Smooth1 {
    if c.iter().all(|&a| a == 0.0) {
        return Smooth1::zero();
    }
    let (c1, c2) = (c.clone(), c.clone());
    let term = |k: usize| (k + 1) as f64 * std::f64::consts::PI;
    Smooth1::with_derivatives(
        move |x| c.iter().enumerate().map(|(k, a)| a * (term(k) * x).sin()).sum(),
        move |x| c1.iter().enumerate().map(|(k, a)| a * term(k) * (term(k) * x).cos()).sum(),
        move |x| c2.iter().enumerate().map(|(k, a)| -a * term(k).powi(2) * (term(k) * x).sin()).sum(),
    )
}

impl ProblemConfig {
    pub fn build(&self) -> Result<ProblemSpec> {
        let spec = ProblemSpec::new(self.epsilon, self.c)
            .with_initial(series(self.initial.u0.clone()), series(self.initial.u1.clone()))
            .with_horizon(self.horizon)
            .with_name(self.name.clone());
        let spec = self.forcing.apply(spec)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fd,
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdSettings {
    pub nx: usize,
    pub dt: f64,
    pub store_every: usize,
}

impl Default for FdSettings {
    fn default() -> Self {
        FdSettings {
            nx: 101,
            dt: 1e-3,
            store_every: 10,
        }
    }
}

impl FdSettings {
    pub fn to_config(&self) -> FDConfig {
        FDConfig::new(self.nx, self.dt).with_store_every(self.store_every)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub fd: FdSettings,
    #[serde(default)]
    pub picard: PicardConfig,
}

fn default_method() -> Method {
    Method::Fd
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            problem: ProblemConfig::default(),
            method: Method::Fd,
            fd: FdSettings::default(),
            picard: PicardConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelTableConfig {
    pub epsilon: f64,
    pub c: f64,
    pub xs: Vec<f64>,
    pub ss: Vec<f64>,
    /// Source point of w(x, xi, s).
    pub xi: f64,
}

impl Default for KernelTableConfig {
    fn default() -> Self {
        KernelTableConfig {
            epsilon: 1.0,
            c: 1.0,
            xs: (1..10).map(|k| k as f64 / 10.0).collect(),
            ss: vec![0.05, 0.1, 0.5, 1.0, 2.0],
            xi: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub x: f64,
    pub s: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub theta: f64,
    pub w: f64,
    pub w_t: f64,
    pub w_x: f64,
    pub w_xx: f64,
    /// Sum of the quadrature error estimates of the row.
    pub err: f64,
}

pub const KERNEL_HEADER: &str = "x,s,K,theta,w,w_t,w_x,w_xx,err";

pub fn kernel_rows(cfg: &KernelTableConfig) -> Result<Vec<KernelRow>> {
    let smax = cfg.ss.iter().cloned().fold(0.0, f64::max);
    let p = KernelParams::new(cfg.epsilon, cfg.c)?.with_terms_for_horizon(smax);
    let mut rows = Vec::with_capacity(cfg.xs.len() * cfg.ss.len());
    for &s in &cfg.ss {
        for &x in &cfg.xs {
            let k = fundamental_k(x.abs(), s, &p)?;
            let th = theta(x, s, &p)?;
            let w = green_w(x, cfg.xi, s, &p)?;
            let wt = green_w_derivatives(x, cfg.xi, s, &p, Which::T)?;
            let wx = green_w_derivatives(x, cfg.xi, s, &p, Which::X)?;
            let wxx = green_w_derivatives(x, cfg.xi, s, &p, Which::XX)?;
            rows.push(KernelRow {
                x,
                s,
                k: k.value,
                theta: th.value,
                w: w.value,
                w_t: wt.value,
                w_x: wx.value,
                w_xx: wxx.value,
                err: k.est_error + th.est_error + w.est_error + wt.est_error + wx.est_error + wxx.est_error,
            });
        }
    }
    Ok(rows)
}

/// Scalar coefficient g(t) of the comparison equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarConfig {
    Zero,
    Constant { value: f64 },
    /// g0 (1 + sin t)
    Sine { g0: f64 },
    Spike { b0_sq: f64, alpha: f64, beta: f64 },
    CustomTable {
        #[serde(flatten)]
        table: Table,
    },
}

impl ScalarConfig {
    pub fn build(&self) -> Result<ScalarForcing> {
        Ok(match self.clone() {
            ScalarConfig::Zero => ScalarForcing::zero(),
            ScalarConfig::Constant { value } => ScalarForcing::constant(value),
            ScalarConfig::Sine { g0 } => ScalarForcing::new(format!("{g0}(1 + sin t)"), move |t| g0 * (1.0 + t.sin()))
                .with_integral(move |a, b| g0 * ((b - a) - b.cos() + a.cos())),
            ScalarConfig::Spike { b0_sq, alpha, beta } => SpikeFamily::new(b0_sq, alpha, beta)?.forcing(),
            ScalarConfig::CustomTable { table } => {
                table.validate()?;
                let knots = table.t.clone();
                ScalarForcing::new("table", move |t| table.eval(t))
                    .with_knots(move |a, b| knots.iter().cloned().filter(|&k| k > a && k < b).collect())
            }
        })
    }
}

/// c e^{-rate t}, used for both decaying perturbations g1 and g2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub c: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub p: f64,
    pub g: ScalarConfig,
    pub sigma: f64,
    pub chi: f64,
    pub kappa: f64,
    pub q: f64,
    #[serde(rename = "M")]
    pub m_bound: f64,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub g1: Option<DecayConfig>,
    #[serde(default)]
    pub g2: Option<DecayConfig>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub alpha_tilde: f64,
    #[serde(default)]
    pub rho_tilde: Option<f64>,
}

fn default_horizon() -> f64 {
    200.0
}

impl LemmaConfig {
    pub fn hypotheses(&self) -> Result<AveragedHypotheses> {
        let mut h = AveragedHypotheses::new(self.g.build()?, self.p)
            .with_sigma(self.sigma)
            .with_growth(self.chi, self.kappa, self.q, self.m_bound)
            .with_horizon(self.horizon);
        if let Some(xi) = self.xi {
            h = h.with_xi(xi);
        }
        if let Some(DecayConfig { c, rate }) = self.g1 {
            h = h.with_g1(move |t, _| c * (-rate * t).exp());
        }
        if let Some(DecayConfig { c, rate }) = self.g2 {
            h = h.with_g2(move |t, _| c * (-rate * t).exp());
        }
        h.validate()?;
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    pub constants: LemmaConstants,
    pub attraction: Option<AttractionReport>,
    /// (t, y) of the comparison solution started at alpha_tilde at s_tilde.
    pub trajectory: Vec<(f64, f64)>,
    pub verdicts: Vec<Verdict>,
}

fn verdict(claim: &str, tolerance: f64, margin: f64) -> Verdict {
    Verdict {
        claim: claim.into(),
        run: None,
        tolerance,
        margin,
        pass: margin >= 0.0,
    }
}

/// Checks the hypotheses, computes the lemma constants and tests the two
/// lemma claims on a fan of starting values.
pub fn run_lemma(cfg: &LemmaConfig) -> Result<LemmaOutcome> {
    let hyp = cfg.hypotheses()?;
    let mut verdicts = Vec::new();
    let av = verify_hyp_averaged(&hyp.g, hyp.p, cfg.horizon, 2000, hyp.sigma)?;
    verdicts.push(verdict("hypothesis: averaged condition", 0.0, av.sigma - av.sup));
    let gr = verify_hyp_growth(&hyp.g, hyp.chi, hyp.kappa, hyp.q, hyp.m_bound, cfg.horizon)?;
    verdicts.push(verdict("hypothesis: growth condition", 0.0, -gr.max_violation));

    let lc = lemma1_constants(&hyp, cfg.alpha_tilde)?;
    let t0 = lc.s_tilde;
    let span = (cfg.horizon - t0).max(1.0);
    let fan: Vec<f64> = (0..=8).map(|k| cfg.alpha_tilde * k as f64 / 8.0).collect();
    let mut worst = f64::INFINITY;
    let mut trajectory = Vec::new();
    for &y0 in &fan {
        let tr = solve_comparison_ode(&hyp, y0, t0, span, OdeVariant::StateDependent)?;
        worst = worst.min((lc.beta_tilde - tr.max()) / lc.beta_tilde);
        if y0 == cfg.alpha_tilde {
            trajectory = tr.t.iter().cloned().zip(tr.y.iter().cloned()).collect();
        }
    }
    verdicts.push(verdict("lemma: y(t) < beta_tilde", 0.0, if worst > 0.0 { worst } else { -1.0 }));

    let attraction = match cfg.rho_tilde {
        Some(rho) => {
            let r = lemma2_attraction_time(&hyp, rho, cfg.alpha_tilde, lc.beta_tilde, t0)?;
            let mut m = f64::INFINITY;
            for &z0 in &fan {
                let tr = solve_comparison_ode(&hyp, z0, t0, span, OdeVariant::Frozen(lc.beta_tilde))?;
                for (&t, &z) in tr.t.iter().zip(&tr.y) {
                    if t > t0 + r.t_hat {
                        m = m.min((rho - z) / rho);
                    }
                }
            }
            verdicts.push(verdict("lemma: z(t) < rho_tilde after T_hat", 0.0, if m > 0.0 { m } else { -1.0 }));
            Some(r)
        }
        None => None,
    };
    Ok(LemmaOutcome {
        constants: lc,
        attraction,
        trajectory,
        verdicts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    Linear { k: f64 },
    SineGordon {
        #[serde(default = "one")]
        b: f64,
    },
    Root { tau: f64 },
}

impl PotentialConfig {
    pub fn build(&self) -> PotentialSpec {
        match *self {
            PotentialConfig::Zero => PotentialSpec::zero(),
            PotentialConfig::Linear { k } => PotentialSpec::linear(k),
            PotentialConfig::SineGordon { b } => PotentialSpec::sine_gordon(b),
            PotentialConfig::Root { tau } => PotentialSpec::root(tau),
        }
    }
}

/// An experiment file: `theorem = 1` uses the boundedness section, 2 to 4
/// the decay section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub theorem: u8,
    #[serde(default = "default_potential")]
    pub potential: PotentialConfig,
    /// Constant damping coefficient a.
    #[serde(default = "half")]
    pub damping: f64,
    #[serde(default)]
    pub decay: Option<ExperimentConfig>,
    #[serde(default)]
    pub boundedness: Option<BoundednessConfig>,
}

fn default_potential() -> PotentialConfig {
    PotentialConfig::SineGordon { b: 1.0 }
}

fn half() -> f64 {
    0.5
}

pub enum ExperimentPlan {
    Boundedness(BoundednessConfig),
    Decay(ExperimentConfig, PotentialSpec, Damping),
}

impl ExperimentFile {
    pub fn plan(&self) -> Result<ExperimentPlan> {
        let theorem = match self.theorem {
            1 => return Ok(ExperimentPlan::Boundedness(self.boundedness.clone().unwrap_or_default())),
            2 => Theorem::Two,
            3 => Theorem::Three,
            4 => Theorem::Four,
            t => return Err(Error::InvalidInput(format!("theorem must be 1, 2, 3 or 4, got {t}"))),
        };
        let mut cfg = self.decay.clone().unwrap_or_default();
        cfg.theorem = theorem;
        Ok(ExperimentPlan::Decay(cfg, self.potential.build(), Damping::constant(self.damping)))
    }
}

/// Inputs of `certify`: constants, a hypothesis set and schedule radii,
/// checked without solving the PDE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one", rename = "K_bound")]
    pub k_bound: f64,
    #[serde(default)]
    pub lambda_split: Option<f64>,
    #[serde(default)]
    pub lemma: Option<LemmaConfig>,
    #[serde(default = "default_potential")]
    pub potential: PotentialConfig,
    #[serde(default = "half")]
    pub damping: f64,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
}

fn default_sigmas() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0]
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            epsilon: 1.0,
            gamma: 1.0,
            k_bound: 1.0,
            lambda_split: None,
            lemma: None,
            potential: default_potential(),
            damping: 0.5,
            sigmas: default_sigmas(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub constants: crate::functionals::ConstantsBundle,
    pub schedule: Vec<crate::scenarios::ExpBounds>,
    pub lemma: Option<LemmaOutcome>,
    pub verdicts: Vec<Verdict>,
}

pub fn certify(cfg: &CertifyConfig) -> Result<Certificate> {
    use crate::scenarios::{thm2_bounds, Thm2Schedule};
    let constants =
        crate::functionals::compute_constants(cfg.epsilon, cfg.gamma, cfg.k_bound, cfg.lambda_split)?;
    let pot = cfg.potential.build();
    let d = Damping::constant(cfg.damping);
    let (a, a_prime, tau) = d.power_bound;
    let sched = Thm2Schedule {
        a,
        a_prime,
        tau,
        epsilon: cfg.epsilon,
        nu: cfg.epsilon * std::f64::consts::PI.powi(2) + d.inf_a,
        k_bound: cfg.k_bound,
        lambda_split: cfg.lambda_split,
    };
    let mut sigmas = cfg.sigmas.clone();
    sigmas.sort_by(f64::total_cmp);
    let schedule = sigmas
        .iter()
        .map(|&s| thm2_bounds(s, &pot, &sched))
        .collect::<Result<Vec<_>>>()?;
    let mut verdicts = Vec::new();
    let below = schedule.iter().map(|b| (b.radius - b.delta) / b.radius).fold(f64::INFINITY, f64::min);
    verdicts.push(verdict("schedule: delta(sigma) < sigma", 0.0, below));
    let incr = schedule
        .windows(2)
        .map(|w| (w[1].delta - w[0].delta) / w[1].delta)
        .fold(f64::INFINITY, f64::min);
    if schedule.len() > 1 {
        verdicts.push(verdict("schedule: delta increasing", 0.0, if incr > 0.0 { incr } else { -1.0 }));
    }
    let lemma = match &cfg.lemma {
        Some(l) => {
            let out = run_lemma(l)?;
            verdicts.extend(out.verdicts.iter().cloned());
            Some(out)
        }
        None => None,
    };
    Ok(Certificate {
        constants,
        schedule,
        lemma,
        verdicts,
    })
}
