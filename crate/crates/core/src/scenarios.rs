//! Stability experiments: the gamma/delta schedules, the guaranteed
//! envelopes, FD runs that test them, and report output.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparison::{lemma1_constants, solve_comparison_ode, OdeVariant, Theorem1Bounds};
use crate::core_model::{ProblemSpec, Smooth1, StatePair};
use crate::error::{Error, Result};
use crate::fdsolver::{solve_fd, FDConfig};
use crate::forcing_examples::{spike_hypothesis_constants, spike_value, SpikeFamily};
use crate::functionals::{
    b_inverse, b_of, c1_sq, c2_sq, compute_constants, functional_row, k1_sq, k1p_sq, k3p_sq,
    lyapunov_v, m_of, omega3, FunctionalRow, PotentialSpec,
};

pub const SCHEMA_VERSION: u32 = 1;

const PI2: f64 = PI * PI;

/// M = (1 + eps pi^2 + eps^3 pi^4)/nu + 1/(eps pi^2) + 1/2.
pub fn schedule_m(epsilon: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Hypothesis(format!("nu = eps pi^2 + inf a must be positive, got {nu}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    Ok((1.0 + epsilon * PI2 + epsilon.powi(3) * PI2 * PI2) / nu + 1.0 / (epsilon * PI2) + 0.5)
}

/// gamma(sigma) = (A sigma^tau + A') eps + M.
pub fn gamma_schedule_thm2(sigma: f64, a: f64, a_prime: f64, tau: f64, epsilon: f64, nu: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau must lie in [0, 2], got {tau}")));
    }
    let m = schedule_m(epsilon, nu)?;
    Ok((a * sigma.powf(tau) + a_prime) * epsilon + m)
}

/// Parameters of the radius-dependent choice of gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm2Schedule {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "A_prime")]
    pub a_prime: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub nu: f64,
    #[serde(rename = "K_bound")]
    pub k_bound: f64,
    pub lambda_split: Option<f64>,
}

impl Thm2Schedule {
    pub fn gamma(&self, sigma: f64) -> Result<f64> {
        gamma_schedule_thm2(sigma, self.a, self.a_prime, self.tau, self.epsilon, self.nu)
    }

    /// sigma k1(gamma) / c2(gamma), the argument of B^-1.
    pub fn delta_argument(&self, sigma: f64) -> Result<f64> {
        let g = self.gamma(sigma)?;
        Ok(sigma * (k1_sq(self.epsilon, g) / c2_sq(self.epsilon, g)).sqrt())
    }

    /// Radius whose delta equals `delta`, by bisection; fails when delta is
    /// beyond the range of the schedule (possible for tau = 2).
    pub fn sigma_for_delta(&self, delta: f64, pot: &PotentialSpec) -> Result<f64> {
        let target = b_of(pot, delta);
        let mut hi = delta.max(1.0);
        let mut k = 0;
        while self.delta_argument(hi)? < target {
            hi *= 2.0;
            k += 1;
            if k > 80 {
                return Err(Error::InvalidInput(format!(
                    "delta = {delta} is outside the range of the schedule"
                )));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.delta_argument(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// delta(sigma) = B^-1(sigma k1(gamma(sigma)) / c2(gamma(sigma))).
pub fn delta_schedule_thm2(sigma: f64, pot: &PotentialSpec, sched: &Thm2Schedule) -> Result<f64> {
    b_inverse(pot, sched.delta_argument(sigma)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpBounds {
    pub radius: f64,
    pub gamma: f64,
    pub k1_sq: f64,
    pub c2_sq: f64,
    pub k3_sq: f64,
    /// Largest admissible d(t0).
    pub delta: f64,
    /// Radius the solution never reaches.
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

/// Envelope constants for radius sigma: C = k3^2/[c2^2 (1 + m(sigma))],
/// D = (c2/k1) sqrt(1 + m(delta)).
pub fn thm2_bounds(sigma: f64, pot: &PotentialSpec, sched: &Thm2Schedule) -> Result<ExpBounds> {
    let g = sched.gamma(sigma)?;
    let k = compute_constants(sched.epsilon, g, sched.k_bound, sched.lambda_split)?;
    let delta = delta_schedule_thm2(sigma, pot, sched)?;
    Ok(ExpBounds {
        radius: sigma,
        gamma: g,
        k1_sq: k.k1_sq,
        c2_sq: k.c2_sq,
        k3_sq: k.k3_sq,
        delta,
        beta: sigma,
        c: k.k3_sq / (k.c2_sq * (1.0 + m_of(pot, sigma))),
        d: (k.c2_sq / k.k1_sq).sqrt() * (1.0 + m_of(pot, delta)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm3Bounds {
    pub alpha: f64,
    pub beta1: f64,
    pub a_alpha: f64,
    pub bounds: ExpBounds,
}

/// Chain for the d1-controlled damping: beta1 = 2 sqrt 2 sqrt(1 + m(alpha)) alpha,
/// gamma = A(beta1) eps + M, beta = (c2/k1) B(alpha), and C, D taken at beta.
pub fn thm3_bounds(
    alpha: f64,
    pot: &PotentialSpec,
    epsilon: f64,
    nu: f64,
    a_map: &dyn Fn(f64) -> f64,
    k_bound: f64,
    lambda_split: Option<f64>,
) -> Result<Thm3Bounds> {
    let beta1 = 2.0 * 2f64.sqrt() * (1.0 + m_of(pot, alpha)).sqrt() * alpha;
    let a_alpha = a_map(beta1);
    let g = a_alpha * epsilon + schedule_m(epsilon, nu)?;
    let k = compute_constants(epsilon, g, k_bound, lambda_split)?;
    let ratio = (k.c2_sq / k.k1_sq).sqrt();
    let beta = ratio * b_of(pot, alpha);
    let mb = m_of(pot, beta);
    Ok(Thm3Bounds {
        alpha,
        beta1,
        a_alpha,
        bounds: ExpBounds {
            radius: alpha,
            gamma: g,
            k1_sq: k.k1_sq,
            c2_sq: k.c2_sq,
            k3_sq: k.k3_sq,
            delta: alpha,
            beta,
            c: k.k3_sq / (k.c2_sq * (1.0 + mb)),
            d: ratio * (1.0 + mb).sqrt(),
        },
    })
}

/// G_gamma(d) = c2^2(gamma) d^2 + D (gamma + 1) d^{tau + 1}.
pub fn g_gamma(epsilon: f64, gamma: f64, d_pot: f64, tau: f64, d: f64) -> f64 {
    c2_sq(epsilon, gamma) * d * d + d_pot * (gamma + 1.0) * d.powf(tau + 1.0)
}

pub fn g_gamma_inverse(epsilon: f64, gamma: f64, d_pot: f64, tau: f64, y: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::InvalidInput(format!("G^-1 needs a finite y >= 0, got {y}")));
    }
    // G(d) >= c2^2 d^2 bounds the root from above
    let mut hi = (y / c2_sq(epsilon, gamma)).sqrt();
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g_gamma(epsilon, gamma, d_pot, tau, mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm4Constants {
    pub sigma: f64,
    pub gamma: f64,
    pub tau: f64,
    #[serde(rename = "D_pot")]
    pub d_pot: f64,
    pub c2_sq: f64,
    pub k1p_sq: f64,
    pub k3p_sq: f64,
    pub delta: f64,
    /// Power-law rate; absent when D = 0 (no power regime).
    #[serde(rename = "E")]
    pub e_rate: Option<f64>,
    /// Value of W at which the two branches of the decay inequality meet.
    pub w_star: Option<f64>,
}

pub fn thm4_envelope_constants(
    sigma: f64,
    gamma: f64,
    epsilon: f64,
    d_pot: f64,
    tau: f64,
) -> Result<Thm4Constants> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau must lie in [0, 1), got {tau}")));
    }
    if !(gamma > 0.5) || !(d_pot >= 0.0) {
        return Err(Error::InvalidInput("need gamma > 1/2 and D >= 0".into()));
    }
    let k1p = k1p_sq(epsilon, gamma);
    let k3p = k3p_sq(epsilon);
    let c2 = c2_sq(epsilon, gamma);
    let delta = g_gamma_inverse(epsilon, gamma, d_pot, tau, sigma * sigma * k1p)?;
    let r = 2.0 / (tau + 1.0);
    let (e_rate, w_star) = if d_pot > 0.0 {
        let base = 2.0 * d_pot * (gamma + 1.0);
        let e = k3p.sqrt() / base.powf(r) * (1.0 - tau) / (1.0 + tau);
        let ws = (base.powf(r) / (2.0 * c2)).powf(1.0 / (r - 1.0));
        (Some(e), Some(ws))
    } else {
        (None, None)
    };
    Ok(Thm4Constants {
        sigma,
        gamma,
        tau,
        d_pot,
        c2_sq: c2,
        k1p_sq: k1p,
        k3p_sq: k3p,
        delta,
        e_rate,
        w_star,
    })
}

/// Power envelope 1/(k1'^2 [E s]^{(1+tau)/(1-tau)}) for s = t - t0 - T.
pub fn power_envelope(c: &Thm4Constants, s: f64) -> f64 {
    match c.e_rate {
        Some(e) if s > 0.0 => 1.0 / (c.k1p_sq * (e * s).powf((1.0 + c.tau) / (1.0 - c.tau))),
        _ => f64::INFINITY,
    }
}

type Fn6 = Arc<dyn Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Damping coefficient a(x, t, u, u_x, u_xx, u_t) with its declared bounds.
#[derive(Clone)]
pub struct Damping {
    pub name: String,
    a: Fn6,
    pub inf_a: f64,
    /// a <= A d^tau + A'.
    pub power_bound: (f64, f64, f64),
    /// |a| <= A(d) (or A(d1)), nondecreasing.
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Damping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Damping")
            .field("name", &self.name)
            .field("inf_a", &self.inf_a)
            .field("power_bound", &self.power_bound)
            .finish()
    }
}

impl Damping {
    pub fn new(
        name: impl Into<String>,
        a: impl Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        inf_a: f64,
        power_bound: (f64, f64, f64),
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Damping {
            name: name.into(),
            a: Arc::new(a),
            inf_a,
            power_bound,
            map: Arc::new(map),
        }
    }

    pub fn constant(a0: f64) -> Self {
        Self::new(
            format!("constant({a0})"),
            move |_, _, _, _, _, _| a0,
            a0,
            (a0.abs().max(1e-12), 0.0, 0.0),
            move |_| a0.abs(),
        )
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64, u: f64, ux: f64, uxx: f64, ut: f64) -> f64 {
        (self.a)(x, t, u, ux, uxx, ut)
    }

    pub fn map(&self, d: f64) -> f64 {
        (self.map)(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    Exponential,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    #[serde(rename = "D")]
    pub d_const: Option<f64>,
    #[serde(rename = "C")]
    pub c_rate: Option<f64>,
    #[serde(rename = "E")]
    pub e_rate: Option<f64>,
    #[serde(rename = "T_tilde")]
    pub t_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub run: Option<String>,
    pub tolerance: f64,
    /// Smallest relative distance to the bound; negative means violated.
    pub margin: f64,
    pub pass: bool,
}

impl Verdict {
    fn new(claim: &str, run: Option<&str>, tolerance: f64, margin: f64) -> Self {
        Verdict {
            claim: claim.into(),
            run: run.map(str::to_string),
            tolerance,
            margin,
            pass: margin >= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub d0: f64,
    pub series: Vec<FunctionalRow>,
    pub envelope: Envelope,
    /// Least-squares decay rate of ln d over the second half of the run.
    pub fitted_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub theorem: u8,
    pub config_echo: serde_json::Value,
    pub constants: serde_json::Value,
    pub runs: Vec<RunRecord>,
    pub verdicts: Vec<Verdict>,
}

impl StabilityReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Initial data as sine coefficients: u0 = sum a_k sin(k pi x), u1 = sum b_k sin(k pi x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialShape {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
}

impl InitialShape {
    pub fn default_family() -> Vec<InitialShape> {
        vec![
            InitialShape { u0: vec![1.0], u1: vec![0.0] },
            InitialShape { u0: vec![1.0, 0.5], u1: vec![0.5] },
            InitialShape { u0: vec![0.0, 1.0, 0.2], u1: vec![-1.0, 0.3] },
        ]
    }

    /// Exact d of the unscaled shape.
    pub fn d(&self) -> f64 {
        let mut s = 0.0;
        for (k, a) in self.u0.iter().enumerate() {
            let w2 = ((k + 1) as f64 * PI).powi(2);
            s += 0.5 * a * a * (1.0 + w2 + w2 * w2);
        }
        s += 0.5 * self.u1.iter().map(|b| b * b).sum::<f64>();
        s.sqrt()
    }

    /// Initial data scaled so that d = target.
    pub fn scaled(&self, target: f64) -> Result<(Smooth1, Smooth1)> {
        let d = self.d();
        if !(d > 0.0) {
            return Err(Error::InvalidInput("initial shape is identically zero".into()));
        }
        let s = target / d;
        let mk = |c: &[f64]| {
            let (c0, c1, c2) = (c.to_vec(), c.to_vec(), c.to_vec());
            Smooth1::with_derivatives(
                move |x| sine_series(&c0, x, 0) * s,
                move |x| sine_series(&c1, x, 1) * s,
                move |x| sine_series(&c2, x, 2) * s,
            )
        };
        Ok((mk(&self.u0), mk(&self.u1)))
    }
}

fn sine_series(c: &[f64], x: f64, deriv: u8) -> f64 {
    c.iter()
        .enumerate()
        .map(|(k, a)| {
            let w = (k + 1) as f64 * PI;
            match deriv {
                0 => a * (w * x).sin(),
                1 => a * w * (w * x).cos(),
                _ => -a * w * w * (w * x).sin(),
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "4")]
    Four,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::Two => 2,
            Theorem::Three => 3,
            Theorem::Four => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub theorem: Theorem,
    pub epsilon: f64,
    pub nx: usize,
    pub dt: f64,
    pub horizon: f64,
    pub store_every: usize,
    /// sigma for theorems 2 and 4, alpha for theorem 3.
    pub radius: f64,
    /// Initial distances as fractions of delta (theorems 2, 4) or alpha (theorem 3).
    pub fractions: Vec<f64>,
    pub shapes: Vec<InitialShape>,
    #[serde(rename = "K_bound")]
    pub k_bound: f64,
    pub lambda_split: Option<f64>,
    /// Relative slack on the exponential envelope.
    pub slack: f64,
    /// Potential-energy constant D and exponent tau for theorem 4.
    pub d_pot: f64,
    pub tau_pot: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            theorem: Theorem::Two,
            epsilon: 1.0,
            nx: 201,
            dt: 2.5e-4,
            horizon: 20.0,
            store_every: 40,
            radius: 1.0,
            fractions: vec![0.5, 0.95],
            shapes: InitialShape::default_family(),
            k_bound: 1.0,
            lambda_split: None,
            slack: 0.01,
            d_pot: 0.0,
            tau_pot: 0.5,
        }
    }
}

/// Relative tolerance on the discrete dW <= 0 check, times W(t0).
pub const WDOT_TOL: f64 = 1e-6;

struct Trace {
    rows: Vec<FunctionalRow>,
    states: Vec<StatePair>,
    max_a: Vec<f64>,
    min_a: f64,
    u_range: (f64, f64),
}

fn run_trace(
    cfg: &ExperimentConfig,
    pot: &PotentialSpec,
    damping: &Damping,
    gamma: f64,
    u0: Smooth1,
    u1: Smooth1,
) -> Result<Trace> {
    let (p2, d2) = (pot.clone(), damping.clone());
    let spec = ProblemSpec::new(cfg.epsilon, 1.0)
        .with_forcing(move |x, t, u, ux, uxx, ut| p2.f(u) - d2.eval(x, t, u, ux, uxx, ut) * ut)
        .with_initial(u0, u1)
        .with_name("decay experiment");
    let fd = FDConfig::new(cfg.nx, cfg.dt).with_store_every(cfg.store_every);
    let g = solve_fd(&spec, &fd, cfg.horizon)?;
    let mut rows = Vec::with_capacity(g.nt);
    let mut states = Vec::with_capacity(g.nt);
    let mut max_a = Vec::with_capacity(g.nt);
    let mut min_a = f64::INFINITY;
    let mut u_range = (0.0f64, 0.0f64);
    for n in 0..g.nt {
        let s = StatePair::from_grid(&g, n)?;
        let t = g.t(n);
        let mut amax = f64::NEG_INFINITY;
        for i in 0..s.len() {
            let a = damping.eval(s.x(i), t, s.phi[i], s.phi_x[i], s.phi_xx[i], s.psi[i]);
            amax = amax.max(a.abs());
            min_a = min_a.min(a);
            u_range = (u_range.0.min(s.phi[i]), u_range.1.max(s.phi[i]));
        }
        max_a.push(amax);
        rows.push(functional_row(t, &s, gamma, cfg.epsilon, pot));
        states.push(s);
    }
    Ok(Trace {
        rows,
        states,
        max_a,
        min_a,
        u_range,
    })
}

fn fit_rate(rows: &[FunctionalRow]) -> Option<f64> {
    let half = &rows[rows.len() / 2..];
    let pts: Vec<(f64, f64)> = half.iter().filter(|r| r.d > 1e-200).map(|r| (r.t, r.d.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(-sxy / sxx)
}

fn max_fprime(pot: &PotentialSpec, lo: f64, hi: f64) -> f64 {
    let n = 2048;
    (0..=n)
        .map(|k| pot.f_prime(lo + (hi - lo) * k as f64 / n as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest relative excess of `measured` over `bound`, as a margin.
fn margin_below(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs
        .map(|(m, b)| if b.is_infinite() { 1.0 } else { (b - m) / b.abs().max(f64::MIN_POSITIVE) })
        .fold(f64::INFINITY, f64::min)
}

fn wdot_margin(rows: &[FunctionalRow]) -> f64 {
    let scale = rows[0].w.abs().max(f64::MIN_POSITIVE);
    rows.windows(2)
        .map(|w| (WDOT_TOL * scale - (w[1].w - w[0].w)) / scale)
        .fold(f64::INFINITY, f64::min)
}

/// Runs the FD fan for the selected theorem and checks its claims.
pub fn run_decay_experiment(
    cfg: &ExperimentConfig,
    pot: &PotentialSpec,
    damping: &Damping,
) -> Result<StabilityReport> {
    if cfg.fractions.is_empty() || cfg.shapes.is_empty() {
        return Err(Error::InvalidInput("experiment needs at least one fraction and one shape".into()));
    }
    let eps = cfg.epsilon;
    let nu = eps * PI2 + damping.inf_a;
    if !(nu > 0.0) {
        return Err(Error::Hypothesis(format!("inf a = {} violates inf a > -eps pi^2", damping.inf_a)));
    }
    let (a_pow, a_prime, tau) = damping.power_bound;
    let sched = Thm2Schedule {
        a: a_pow,
        a_prime,
        tau,
        epsilon: eps,
        nu,
        k_bound: cfg.k_bound,
        lambda_split: cfg.lambda_split,
    };

    enum Bounds {
        Exp(ExpBounds),
        Pow(Thm4Constants),
    }
    let (bounds, constants_json) = match cfg.theorem {
        Theorem::Two => {
            let b = thm2_bounds(cfg.radius, pot, &sched)?;
            (Bounds::Exp(b), serde_json::to_value(b)?)
        }
        Theorem::Three => {
            let b = thm3_bounds(cfg.radius, pot, eps, nu, &|d| damping.map(d), cfg.k_bound, cfg.lambda_split)?;
            (Bounds::Exp(b.bounds), serde_json::to_value(b)?)
        }
        Theorem::Four => {
            let g = damping.map(cfg.radius) * eps + schedule_m(eps, nu)?;
            let c = thm4_envelope_constants(cfg.radius, g, eps, cfg.d_pot, cfg.tau_pot)?;
            (Bounds::Pow(c), serde_json::to_value(c)?)
        }
    };
    let (gamma, start_radius) = match &bounds {
        Bounds::Exp(b) => (b.gamma, b.delta),
        Bounds::Pow(c) => (c.gamma, c.delta),
    };

    let jobs: Vec<(String, f64, &InitialShape)> = cfg
        .shapes
        .iter()
        .enumerate()
        .flat_map(|(i, s)| cfg.fractions.iter().map(move |&f| (format!("shape{i}-frac{f}"), f, s)))
        .collect();

    let results: Vec<Result<(RunRecord, Vec<Verdict>)>> = jobs
        .par_iter()
        .map(|(label, frac, shape)| {
            let (u0, u1) = shape.scaled(frac * start_radius)?;
            let tr = run_trace(cfg, pot, damping, gamma, u0, u1)?;
            let rows = &tr.rows;
            let d0 = rows[0].d;
            let mut verdicts = Vec::new();
            let lab = Some(label.as_str());

            // hypotheses along the visited states
            verdicts.push(Verdict::new(
                "hypothesis: a >= declared inf a",
                lab,
                1e-12,
                tr.min_a - damping.inf_a + 1e-12,
            ));
            match cfg.theorem {
                Theorem::Two | Theorem::Three => {
                    let fmax = max_fprime(pot, tr.u_range.0, tr.u_range.1);
                    verdicts.push(Verdict::new("hypothesis: F_u <= K", lab, 0.0, cfg.k_bound - fmax));
                }
                Theorem::Four => {}
            }
            match cfg.theorem {
                Theorem::Two => {
                    let m = margin_below(
                        rows.iter()
                            .zip(&tr.max_a)
                            .map(|(r, &a)| (a, a_pow * r.d.powf(tau) + a_prime)),
                    );
                    verdicts.push(Verdict::new("hypothesis: a <= A d^tau + A'", lab, 0.0, m));
                }
                Theorem::Three => {
                    let m = margin_below(rows.iter().zip(&tr.max_a).map(|(r, &a)| (a, damping.map(r.d1))));
                    verdicts.push(Verdict::new("hypothesis: |a| <= A(d1)", lab, 0.0, m));
                }
                Theorem::Four => {
                    let m = margin_below(rows.iter().zip(&tr.max_a).map(|(r, &a)| (a, damping.map(r.d))));
                    verdicts.push(Verdict::new("hypothesis: |a| <= A(d)", lab, 0.0, m));
                    // 0 <= -int int F <= D d^{tau+1} and int F(phi) phi_xx >= 0
                    let mut pe_m = f64::INFINITY;
                    let mut conv_m = f64::INFINITY;
                    for (r, s) in rows.iter().zip(&tr.states) {
                        let dx = s.dx();
                        let n = s.len();
                        let w = |i: usize| if i == 0 || i == n - 1 { 0.5 * dx } else { dx };
                        let neg_pe: f64 = (0..n).map(|i| -pot.integral(s.phi[i]) * w(i)).sum();
                        let conv: f64 = (0..n).map(|i| pot.f(s.phi[i]) * s.phi_xx[i] * w(i)).sum();
                        let cap = cfg.d_pot * r.d.powf(cfg.tau_pot + 1.0);
                        let tol = 1e-12 * (1.0 + cap);
                        pe_m = pe_m.min(neg_pe + tol).min(cap - neg_pe + tol);
                        conv_m = conv_m.min(conv + 1e-9 * (1.0 + r.d * r.d));
                    }
                    verdicts.push(Verdict::new("hypothesis: 0 <= -int F <= D d^(tau+1)", lab, 1e-12, pe_m));
                    verdicts.push(Verdict::new("hypothesis: int F(phi) phi_xx >= 0", lab, 1e-9, conv_m));
                }
            }

            verdicts.push(Verdict::new("Wdot <= 0 along the tube", lab, WDOT_TOL, wdot_margin(rows)));

            let envelope = match &bounds {
                Bounds::Exp(b) => {
                    let tube = margin_below(rows.iter().map(|r| (r.d, b.beta)));
                    let claim = if cfg.theorem == Theorem::Two {
                        "tube: d(t) < sigma"
                    } else {
                        "bounded: d(t) < beta(alpha)"
                    };
                    verdicts.push(Verdict::new(claim, lab, 0.0, if tube > 0.0 { tube } else { -1.0 }));
                    let env = margin_below(
                        rows.iter()
                            .map(|r| (r.d, (1.0 + cfg.slack) * b.d * (-b.c * (r.t - rows[0].t)).exp() * d0)),
                    );
                    verdicts.push(Verdict::new("envelope: d(t) <= D exp(-C (t - t0)) d(t0)", lab, cfg.slack, env));
                    if cfg.theorem == Theorem::Three {
                        let thm3_beta1 = 2.0 * 2f64.sqrt() * (1.0 + m_of(pot, cfg.radius)).sqrt() * cfg.radius;
                        let m1 = margin_below(rows.iter().map(|r| (r.d1, thm3_beta1)));
                        verdicts.push(Verdict::new("bounded: d1(t) < beta1(alpha)", lab, 0.0, m1));
                    }
                    Envelope {
                        kind: EnvelopeKind::Exponential,
                        d_const: Some(b.d),
                        c_rate: Some(b.c),
                        e_rate: None,
                        t_tilde: None,
                    }
                }
                Bounds::Pow(c) => {
                    let tube = margin_below(rows.iter().map(|r| (r.d, c.sigma)));
                    verdicts.push(Verdict::new("tube: d(t) < sigma", lab, 0.0, if tube > 0.0 { tube } else { -1.0 }));
                    let t_tilde = match c.w_star {
                        Some(ws) => rows.iter().find(|r| r.w <= ws).map(|r| r.t - rows[0].t),
                        None => None,
                    };
                    if let Some(tt) = t_tilde {
                        let m = margin_below(
                            rows.iter()
                                .filter(|r| r.t - rows[0].t > tt)
                                .map(|r| (r.d * r.d, power_envelope(c, r.t - rows[0].t - tt))),
                        );
                        verdicts.push(Verdict::new("power envelope after T_tilde", lab, 0.0, m.min(1.0)));
                    } else {
                        verdicts.push(Verdict::new("power envelope after T_tilde", lab, 0.0, -1.0));
                    }
                    Envelope {
                        kind: EnvelopeKind::Power,
                        d_const: Some(c.d_pot),
                        c_rate: None,
                        e_rate: c.e_rate,
                        t_tilde,
                    }
                }
            };
            Ok((
                RunRecord {
                    label: label.clone(),
                    d0,
                    fitted_rate: fit_rate(rows),
                    series: tr.rows,
                    envelope,
                },
                verdicts,
            ))
        })
        .collect();

    let mut runs = Vec::new();
    let mut verdicts = Vec::new();
    for r in results {
        let (run, v) = r?;
        runs.push(run);
        verdicts.extend(v);
    }
    Ok(StabilityReport {
        schema_version: SCHEMA_VERSION,
        theorem: cfg.theorem.number(),
        config_echo: serde_json::to_value(cfg)?,
        constants: constants_json,
        runs,
        verdicts,
    })
}

/// Spike-forced problem f = b(t) sin u started at t0 = s(alpha).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundednessConfig {
    pub epsilon: f64,
    pub spike: SpikeFamily,
    pub alphas: Vec<f64>,
    pub fractions: Vec<f64>,
    pub shapes: Vec<InitialShape>,
    pub nx: usize,
    pub dt: f64,
    pub horizon: f64,
    pub store_every: usize,
}

impl Default for BoundednessConfig {
    fn default() -> Self {
        BoundednessConfig {
            epsilon: 1.0,
            spike: SpikeFamily {
                b0_sq: 0.2,
                alpha: 1.0,
                beta: 0.6,
            },
            alphas: vec![0.5, 1.0],
            fractions: vec![1.0],
            shapes: InitialShape::default_family(),
            nx: 101,
            dt: 1e-3,
            horizon: 20.0,
            store_every: 10,
        }
    }
}

/// g(t) = A b^2(t) / (c1^2 (1 + pi^2 + pi^4)) dominates A int f^2 / (c1^2 d^2)
/// for f = b(t) sin u; as a spike family it scales b0^2 by that factor.
pub fn sine_spike_coefficient(epsilon: f64) -> f64 {
    let a = epsilon / 2.0 + 2.0 / epsilon;
    a / (c1_sq(epsilon, 1.0) * (1.0 + PI2 + PI2 * PI2))
}

pub fn run_boundedness_experiment(cfg: &BoundednessConfig) -> Result<StabilityReport> {
    let eps = cfg.epsilon;
    let k = compute_constants(eps, 1.0, 0.0, Some(0.5))?;
    let scale = sine_spike_coefficient(eps);
    let g_fam = SpikeFamily::new(cfg.spike.b0_sq * scale, cfg.spike.alpha, cfg.spike.beta)?;
    let hyp = spike_hypothesis_constants(&g_fam, k.p)?;
    let b_fam = SpikeFamily::new(cfg.spike.b0_sq, cfg.spike.alpha, cfg.spike.beta)?;

    let mut jobs = Vec::new();
    for &alpha in &cfg.alphas {
        for (i, sh) in cfg.shapes.iter().enumerate() {
            for &f in &cfg.fractions {
                jobs.push((alpha, i, sh, f));
            }
        }
    }
    let bounds: Vec<Theorem1Bounds> = cfg
        .alphas
        .iter()
        .map(|&a| crate::comparison::theorem1_wiring(a, &k, &hyp))
        .collect::<Result<_>>()?;

    let results: Vec<Result<(RunRecord, Vec<Verdict>)>> = jobs
        .par_iter()
        .map(|&(alpha, i, sh, frac)| {
            let tb = bounds[cfg.alphas.iter().position(|&a| a == alpha).expect("alpha listed")];
            let t0 = tb.s.ceil();
            let (u0, u1) = sh.scaled(frac * alpha)?;
            let fam = b_fam;
            let spec = ProblemSpec::new(eps, 1.0)
                .with_forcing(move |_, t, u, _, _, _| spike_value(t + t0, &fam).sqrt() * u.sin())
                .with_initial(u0, u1);
            let fd = FDConfig::new(cfg.nx, cfg.dt).with_store_every(cfg.store_every);
            let g = solve_fd(&spec, &fd, cfg.horizon)?;
            let pot = PotentialSpec::zero();
            let mut rows = Vec::with_capacity(g.nt);
            for n in 0..g.nt {
                let s = StatePair::from_grid(&g, n)?;
                let mut r = functional_row(g.t(n) + t0, &s, 1.0, eps, &pot);
                r.v = lyapunov_v(&s, 1.0, eps);
                rows.push(r);
            }
            let label = format!("alpha{alpha}-shape{i}-frac{frac}");
            let lab = Some(label.as_str());
            let mut verdicts = Vec::new();
            let m = margin_below(rows.iter().map(|r| (r.d, tb.beta)));
            verdicts.push(Verdict::new("bounded: d(t) < beta(alpha) for t >= s(alpha)", lab, 0.0, m));
            // V(t) <= y(t) with y the comparison solution from V(t0)
            let y = solve_comparison_ode(&hyp, rows[0].v, t0, cfg.horizon, OdeVariant::StateDependent)?;
            let dom = rows
                .iter()
                .map(|r| {
                    let yt = y.interp(r.t);
                    (yt - r.v + 1e-6 * rows[0].v) / rows[0].v.max(f64::MIN_POSITIVE)
                })
                .fold(f64::INFINITY, f64::min);
            verdicts.push(Verdict::new("comparison: V(t) <= y(t)", lab, 1e-6, dom));
            Ok((
                RunRecord {
                    label,
                    d0: rows[0].d,
                    fitted_rate: fit_rate(&rows),
                    series: rows,
                    envelope: Envelope {
                        kind: EnvelopeKind::Exponential,
                        d_const: None,
                        c_rate: None,
                        e_rate: None,
                        t_tilde: None,
                    },
                },
                verdicts,
            ))
        })
        .collect();
    let mut runs = Vec::new();
    let mut verdicts = Vec::new();
    for r in results {
        let (run, v) = r?;
        runs.push(run);
        verdicts.extend(v);
    }
    let lc = lemma1_constants(&hyp, bounds[0].alpha_tilde)?;
    Ok(StabilityReport {
        schema_version: SCHEMA_VERSION,
        theorem: 1,
        config_echo: serde_json::to_value(cfg)?,
        constants: serde_json::json!({
            "constants": k,
            "g_scale": scale,
            "lemma": lc,
            "bounds": bounds,
        }),
        runs,
        verdicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub const SERIES_HEADER: &str = "run,t,d,d1,V,W,v_ham";

pub fn write_series_csv<W: Write>(report: &StabilityReport, mut w: W) -> Result<()> {
    writeln!(w, "{SERIES_HEADER}")?;
    for run in &report.runs {
        for r in &run.series {
            writeln!(w, "{},{:e},{:e},{:e},{:e},{:e},{:e}", run.label, r.t, r.d, r.d1, r.v, r.w, r.v_ham)?;
        }
    }
    Ok(())
}

/// Series rows grouped by run label, in file order.
pub fn read_series_csv<R: BufRead>(r: R) -> Result<Vec<(String, Vec<FunctionalRow>)>> {
    let mut lines = r.lines();
    let head = lines.next().transpose()?.unwrap_or_default();
    if head.trim() != SERIES_HEADER {
        return Err(Error::Parse(format!("unexpected series header {head:?}")));
    }
    let mut out: Vec<(String, Vec<FunctionalRow>)> = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Parse(format!("line {}: expected 7 columns", k + 2)));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)));
        let row = FunctionalRow {
            t: num(cols[1])?,
            d: num(cols[2])?,
            d1: num(cols[3])?,
            v: num(cols[4])?,
            w: num(cols[5])?,
            v_ham: num(cols[6])?,
        };
        match out.last_mut() {
            Some((l, rows)) if l == cols[0] => rows.push(row),
            _ => out.push((cols[0].to_string(), vec![row])),
        }
    }
    Ok(out)
}

/// Writes `series.csv` and/or `report.json` into `dir`.
pub fn emit_report(report: &StabilityReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            ReportFormat::Csv => {
                let p = dir.join("series.csv");
                let mut w = std::io::BufWriter::new(fs::File::create(&p)?);
                write_series_csv(report, &mut w)?;
                w.flush()?;
                written.push(p);
            }
            ReportFormat::Json => {
                let p = dir.join("report.json");
                let w = std::io::BufWriter::new(fs::File::create(&p)?);
                serde_json::to_writer_pretty(w, report)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

pub fn read_report_json(path: &Path) -> Result<StabilityReport> {
    let r = BufReader::new(fs::File::open(path)?);
    let rep: StabilityReport = serde_json::from_reader(r)?;
    if rep.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "schema version {} is not {SCHEMA_VERSION}",
            rep.schema_version
        )));
    }
    Ok(rep)
}

/// Largest y accepted by delta for tau = 2: the limit of sigma k1/c2.
pub fn tau_two_range(epsilon: f64, a: f64) -> f64 {
    (epsilon * omega3() / (4.0 * a)).sqrt()
}
