//! Scalar comparison ODEs that dominate V(t), the constants of the two
//! boundedness/attraction lemmas, and the PDE-level boundedness radius.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::ConstantsBundle;
use crate::quad::{adaptive_pieces, QuadOptions};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type KnotFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// A nonnegative time-dependent coefficient g(t), with an optional closed
/// form for its integral and the kinks the integrators must step onto.
#[derive(Clone)]
pub struct ScalarForcing {
    pub name: String,
    f: Fn1,
    integral: Option<Fn2>,
    knots: Option<KnotFn>,
}

impl fmt::Debug for ScalarForcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarForcing({})", self.name)
    }
}

impl ScalarForcing {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarForcing {
            name: name.into(),
            f: Arc::new(f),
            integral: None,
            knots: None,
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c).with_integral(move |a, b| c * (b - a))
    }

    /// `integral(a, b)` must return the integral of g over [a, b].
    pub fn with_integral(mut self, i: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.integral = Some(Arc::new(i));
        self
    }

    /// `knots(a, b)` lists the points in (a, b) where g is not smooth.
    pub fn with_knots(mut self, k: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.knots = Some(Arc::new(k));
        self
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn knots_in(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.knots {
            Some(k) => {
                let mut v: Vec<f64> = k(a, b).into_iter().filter(|&x| x > a && x < b).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
            None => Vec::new(),
        }
    }

    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if let Some(i) = &self.integral {
            return Ok(i(a, b));
        }
        if b <= a {
            return Ok(0.0);
        }
        let mut pts = vec![a];
        pts.extend(self.knots_in(a, b));
        pts.push(b);
        Ok(adaptive_pieces(|t| (self.f)(t), &pts, QuadOptions::tol(1e-13, 1e-12))?.value)
    }

    /// Integrals from 0 to each of the sorted points `ts`.
    pub fn cumulative(&self, ts: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ts.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &t in ts {
            acc += self.integrate(prev, t)?;
            out.push(acc);
            prev = t;
        }
        Ok(out)
    }
}

/// Replaces g(t, eta) by max over [0, eta] of g(t, .), sampled on `samples`
/// subintervals.
pub fn monotonize(g: Fn2, samples: usize) -> Fn2 {
    let n = samples.max(1);
    Arc::new(move |t, eta| {
        (0..=n)
            .map(|k| g(t, eta * k as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

/// Data of the averaged hypotheses on (g, g1, g2).
#[derive(Clone)]
pub struct AveragedHypotheses {
    pub g: ScalarForcing,
    pub g1: Fn2,
    pub g2: Fn2,
    pub g1_zero: bool,
    pub g2_zero: bool,
    pub sigma: f64,
    pub chi: f64,
    pub kappa: f64,
    pub q: f64,
    pub m_bound: f64,
    pub xi: f64,
    pub p: f64,
    /// Length of the time windows used by the scans and trajectory fans.
    pub horizon: f64,
}

impl fmt::Debug for AveragedHypotheses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AveragedHypotheses")
            .field("g", &self.g)
            .field("g1_zero", &self.g1_zero)
            .field("g2_zero", &self.g2_zero)
            .field("sigma", &self.sigma)
            .field("chi", &self.chi)
            .field("kappa", &self.kappa)
            .field("q", &self.q)
            .field("M", &self.m_bound)
            .field("xi", &self.xi)
            .field("p", &self.p)
            .finish()
    }
}

impl AveragedHypotheses {
    /// g with g1 = g2 = 0; growth constants must be set before use.
    pub fn new(g: ScalarForcing, p: f64) -> Self {
        AveragedHypotheses {
            g,
            g1: Arc::new(|_, _| 0.0),
            g2: Arc::new(|_, _| 0.0),
            g1_zero: true,
            g2_zero: true,
            sigma: 0.0,
            chi: 1.0,
            kappa: 1.0,
            q: 0.0,
            m_bound: 1.0,
            xi: 0.0,
            p,
            horizon: 200.0,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Sets chi, kappa, q, M; xi becomes 0 when chi <= kappa and 1 otherwise.
    pub fn with_growth(mut self, chi: f64, kappa: f64, q: f64, m_bound: f64) -> Self {
        self.chi = chi;
        self.kappa = kappa;
        self.q = q;
        self.m_bound = m_bound;
        self.xi = if chi > kappa { 1.0 } else { 0.0 };
        self
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_g1(mut self, g1: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.g1 = Arc::new(g1);
        self.g1_zero = false;
        self
    }

    pub fn with_g2(mut self, g2: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.g2 = Arc::new(g2);
        self.g2_zero = false;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn monotonized(mut self, samples: usize) -> Self {
        if !self.g1_zero {
            self.g1 = monotonize(self.g1, samples);
        }
        if !self.g2_zero {
            self.g2 = monotonize(self.g2, samples);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Hypothesis(m));
        if !(self.p > 0.0) {
            return bad(format!("p must be positive, got {}", self.p));
        }
        if !(0.0..=1.0).contains(&self.chi) || !(0.0..=1.0).contains(&self.kappa) {
            return bad(format!("chi = {}, kappa = {} must lie in [0, 1]", self.chi, self.kappa));
        }
        if !(self.q >= 0.0) || !(self.m_bound > 0.0) || !(self.sigma >= 0.0) {
            return bad("need q >= 0, M > 0, sigma >= 0".into());
        }
        if self.chi == 1.0 && self.q >= self.p {
            return bad(format!("chi = 1 needs q < p, got q = {} and p = {}", self.q, self.p));
        }
        if self.chi <= self.kappa && self.xi != 0.0 {
            return bad("xi must vanish when chi <= kappa".into());
        }
        if self.chi > self.kappa && !(self.xi > 0.0) {
            return bad("xi must be positive when chi > kappa".into());
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive".into());
        }
        Ok(())
    }

    #[inline]
    fn rhs(&self, t: f64, y: f64, frozen: Option<f64>) -> f64 {
        let eta = frozen.unwrap_or(y);
        let mut r = (self.g.eval(t) - self.p) * y;
        if !self.g1_zero {
            r += (self.g1)(t, eta);
        }
        if !self.g2_zero {
            r += (self.g2)(t, eta);
        }
        r
    }

    fn weight(&self, t: f64) -> f64 {
        if self.xi == 0.0 {
            1.0
        } else {
            (self.xi * (t.powf(self.chi) - t.powf(self.kappa))).exp()
        }
    }
}

fn scan_points(g: &ScalarForcing, horizon: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    let mut ts: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
    ts.extend(g.knots_in(0.0, horizon));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedReport {
    /// sup over sampled t0 <= t of int_{t0}^t g - p (t - t0).
    pub sup: f64,
    pub worst_t0: f64,
    pub worst_t: f64,
    pub sigma: f64,
    pub pass: bool,
}

/// Samples the averaged condition on a uniform grid of `samples` cells plus
/// the kinks of g.
pub fn verify_hyp_averaged(
    g: &ScalarForcing,
    p: f64,
    horizon: f64,
    samples: usize,
    sigma: f64,
) -> Result<AveragedReport> {
    let ts = scan_points(g, horizon, samples);
    let cum = g.cumulative(&ts)?;
    // sup_{s <= t} H(t) - H(s) with H = G - p t, in one pass
    let mut best = 0.0;
    let (mut w0, mut w1) = (0.0, 0.0);
    let mut min_h = f64::INFINITY;
    let mut arg_min = 0.0;
    for (&t, &c) in ts.iter().zip(&cum) {
        let h = c - p * t;
        if h < min_h {
            min_h = h;
            arg_min = t;
        }
        if h - min_h > best {
            best = h - min_h;
            w0 = arg_min;
            w1 = t;
        }
    }
    Ok(AveragedReport {
        sup: best,
        worst_t0: w0,
        worst_t: w1,
        sigma,
        pass: best <= sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// max over sampled t of |G(t)/(1+t^chi) - q| - M/(1+t^kappa); negative passes.
    pub max_violation: f64,
    pub worst_t: f64,
    pub pass: bool,
}

pub fn verify_hyp_growth(
    g: &ScalarForcing,
    chi: f64,
    kappa: f64,
    q: f64,
    m_bound: f64,
    horizon: f64,
) -> Result<GrowthReport> {
    let ts = scan_points(g, horizon, (horizon * 50.0).ceil() as usize);
    let cum = g.cumulative(&ts)?;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_t = 0.0;
    for (&t, &c) in ts.iter().zip(&cum) {
        let lhs = (c / (1.0 + t.powf(chi)) - q).abs();
        let v = lhs - m_bound / (1.0 + t.powf(kappa));
        if v > worst {
            worst = v;
            worst_t = t;
        }
    }
    Ok(GrowthReport {
        max_violation: worst,
        worst_t,
        pass: worst < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaConstants {
    pub m: f64,
    pub theta_v: f64,
    pub t_theta: f64,
    pub t_tilde: f64,
    pub beta_tilde: f64,
    pub s_tilde: f64,
    pub s1: f64,
    pub s2: f64,
    #[serde(rename = "T_hat")]
    pub t_hat: Option<f64>,
}

pub fn lemma_m(hyp: &AveragedHypotheses) -> f64 {
    if hyp.chi < 1.0 {
        hyp.p / 2.0
    } else {
        (hyp.p - hyp.q) / 2.0
    }
}

pub fn lemma_theta(hyp: &AveragedHypotheses) -> f64 {
    let m2 = 2.0 * hyp.m_bound;
    if hyp.chi <= hyp.kappa {
        0.0
    } else if hyp.chi < 1.0 {
        (hyp.xi / m2).min(1.0)
    } else {
        ((hyp.p - hyp.q) / m2).min(hyp.xi / m2).min(1.0)
    }
}

fn t_theta(theta: f64, kappa: f64) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    let base = (1.0 - theta) / theta;
    if kappa == 0.0 {
        return if base <= 1.0 {
            Ok(0.0)
        } else {
            Err(Error::Hypothesis("t_theta is unbounded for kappa = 0 and theta < 1/2".into()))
        };
    }
    Ok(base.powf(1.0 / kappa))
}

pub fn lemma_t_tilde(hyp: &AveragedHypotheses) -> f64 {
    if hyp.chi >= 1.0 {
        0.0
    } else {
        (hyp.chi * (2.0 * hyp.q + hyp.xi) / hyp.p).powf(1.0 / (1.0 - hyp.chi))
    }
}

/// h(tau) = p tau - q tau^chi - M theta (tau^chi - tau^kappa).
pub fn h_tau(hyp: &AveragedHypotheses, tau: f64) -> f64 {
    let th = lemma_theta(hyp);
    hyp.p * tau - hyp.q * tau.powf(hyp.chi) - hyp.m_bound * th * (tau.powf(hyp.chi) - tau.powf(hyp.kappa))
}

pub fn h_prime(hyp: &AveragedHypotheses, tau: f64) -> f64 {
    let th = lemma_theta(hyp);
    let (c, k) = (hyp.chi, hyp.kappa);
    let pw = |e: f64| if e == 0.0 { 0.0 } else { e * tau.powf(e - 1.0) };
    hyp.p - hyp.q * pw(c) - hyp.m_bound * th * (pw(c) - pw(k))
}

/// Smallest s on the scan window with `bad(t)` false for every sampled t >= s:
/// forward scan with step 0.1, then bisection inside the last failing cell.
fn last_violation(bad: impl Fn(f64) -> bool, end: f64) -> f64 {
    let step = 0.1;
    let n = (end / step).ceil() as usize;
    let mut last: Option<usize> = None;
    for k in 0..=n {
        if bad(k as f64 * step) {
            last = Some(k);
        }
    }
    match last {
        None => 0.0,
        Some(k) => {
            let (mut lo, mut hi) = (k as f64 * step, (k + 1) as f64 * step);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if bad(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    }
}

pub fn lemma1_constants(hyp: &AveragedHypotheses, alpha_tilde: f64) -> Result<LemmaConstants> {
    hyp.validate()?;
    if !(alpha_tilde >= 0.0) {
        return Err(Error::InvalidInput(format!("alpha_tilde must be >= 0, got {alpha_tilde}")));
    }
    let m = lemma_m(hyp);
    if !(m > 0.0) {
        return Err(Error::Hypothesis(format!("m = {m} must be positive")));
    }
    let theta = lemma_theta(hyp);
    let t_th = t_theta(theta, hyp.kappa)?;
    let t_tilde = lemma_t_tilde(hyp);
    let e2m = (2.0 * hyp.m_bound).exp();
    let beta_tilde = alpha_tilde * (hyp.sigma.exp() + e2m / m + e2m);

    let end = hyp.horizon;
    let s1 = if hyp.g1_zero {
        0.0
    } else {
        last_violation(|t| (hyp.g1)(t, beta_tilde) * hyp.weight(t) > alpha_tilde, end)
    };
    let s2 = if hyp.g2_zero {
        0.0
    } else {
        // tail integrals over [t0, 2 end], then the first t0 where they drop below alpha_tilde
        let f = |t: f64| (hyp.g2)(t, beta_tilde) * hyp.weight(t);
        let tail = |t0: f64| -> f64 {
            let pts: Vec<f64> = (0..=64).map(|k| t0 + (2.0 * end - t0) * k as f64 / 64.0).collect();
            adaptive_pieces(f, &pts, QuadOptions::tol(1e-13, 1e-10))
                .map(|r| r.value)
                .unwrap_or(f64::INFINITY)
        };
        last_violation(|t0| tail(t0) > alpha_tilde, end)
    };
    let s_tilde = t_tilde.max(t_th).max(s1).max(s2);
    Ok(LemmaConstants {
        m,
        theta_v: theta,
        t_theta: t_th,
        t_tilde,
        beta_tilde,
        s_tilde,
        s1,
        s2,
        t_hat: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeVariant {
    StateDependent,
    /// g1 and g2 evaluated at a fixed second argument.
    Frozen(f64),
}

/// Accepted steps of a scalar trajectory with slopes for Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> f64 {
        *self.y.last().expect("trajectory has at least one point")
    }

    pub fn max(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn interp(&self, t: f64) -> f64 {
        let k = match self.t.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(k) => return self.y[k],
            Err(0) => return self.y[0],
            Err(k) if k >= self.t.len() => return self.last(),
            Err(k) => k - 1,
        };
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (h00, h10) = ((1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s), s * (1.0 - s) * (1.0 - s));
        let (h01, h11) = (s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
        h00 * self.y[k] + h10 * h * self.dy[k] + h01 * self.y[k + 1] + h11 * h * self.dy[k + 1]
    }

    /// Last time at which the trajectory is at or above `level`, located to
    /// 1e-12 inside the step where it happens; `None` if it never is.
    pub fn last_time_at_or_above(&self, level: f64) -> Option<f64> {
        let n = self.t.len();
        let k = (0..n).rev().find(|&k| self.y[k] >= level)?;
        if k == n - 1 {
            return Some(self.t[k]);
        }
        let (mut lo, mut hi) = (self.t[k], self.t[k + 1]);
        // the interpolant may dip and rise again; scan before bisecting
        let probes = 32;
        for j in (1..probes).rev() {
            let tj = lo + (hi - lo) * j as f64 / probes as f64;
            if self.interp(tj) >= level {
                lo = tj;
                break;
            }
        }
        hi = hi.min(lo + (self.t[k + 1] - self.t[k]) / probes as f64).max(lo);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.interp(mid) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        Some(lo)
    }
}

pub const ODE_TOL: f64 = 1e-9;
const MAX_STEP: f64 = 0.5;

/// Dormand-Prince 5(4) for a scalar ODE, landing exactly on every kink of
/// g; negative values are clipped to 0.
pub fn solve_comparison_ode(
    hyp: &AveragedHypotheses,
    y0: f64,
    t0: f64,
    horizon: f64,
    variant: OdeVariant,
) -> Result<Trajectory> {
    if !(y0 >= 0.0) {
        return Err(Error::InvalidInput(format!("y0 must be >= 0, got {y0}")));
    }
    if !(horizon >= 0.0) {
        return Err(Error::InvalidInput("horizon must be >= 0".into()));
    }
    let frozen = match variant {
        OdeVariant::StateDependent => None,
        OdeVariant::Frozen(b) => Some(b),
    };
    let f = |t: f64, y: f64| hyp.rhs(t, y, frozen);
    let t_end = t0 + horizon;
    let mut stops = hyp.g.knots_in(t0, t_end);
    stops.push(t_end);

    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0],
        dy: vec![f(t0, y0)],
    };
    let mut t = t0;
    let mut y = y0;
    let mut h = (horizon / 100.0).clamp(1e-6, MAX_STEP);
    for &stop in &stops {
        // a fresh first stage after every kink
        let mut k1 = f(t, y);
        while t < stop {
            let last = t + h >= stop;
            let hh = if last { stop - t } else { h };
            let (ynew, err, k7) = dp_step(&f, t, y, k1, hh);
            let scale = ODE_TOL + ODE_TOL * y.abs().max(ynew.abs());
            let ratio = err / scale;
            if ratio <= 1.0 {
                t = if last { stop } else { t + hh };
                y = ynew.max(0.0);
                k1 = if ynew < 0.0 { f(t, y) } else { k7 };
                traj.t.push(t);
                traj.y.push(y);
                traj.dy.push(k1);
            }
            let fac = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            if !ratio.is_finite() {
                h *= 0.2;
            } else if ratio <= 1.0 {
                if !last || hh >= h {
                    h = (hh * fac).min(MAX_STEP);
                }
            } else {
                h = hh * fac.min(1.0);
            }
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::StepUnderflow { t });
            }
            if !y.is_finite() {
                return Err(Error::Overflow(format!("comparison solution blew up at t = {t}")));
            }
        }
    }
    Ok(traj)
}

fn dp_step(f: &impl Fn(f64, f64) -> f64, t: f64, y: f64, k1: f64, h: f64) -> (f64, f64, f64) {
    let k2 = f(t + h / 5.0, y + h * (k1 / 5.0));
    let k3 = f(t + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    let k4 = f(t + 4.0 * h / 5.0, y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
    let k5 = f(
        t + 8.0 * h / 9.0,
        y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4),
    );
    let k6 = f(
        t + h,
        y + h
            * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4
                - 5103.0 / 18656.0 * k5),
    );
    let ynew = y + h
        * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5
            + 11.0 / 84.0 * k6);
    let k7 = f(t + h, ynew);
    let err = h
        * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4 - 17253.0 / 339200.0 * k5
            + 22.0 / 525.0 * k6
            - 1.0 / 40.0 * k7);
    (ynew, err.abs(), k7)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractionReport {
    pub rho_tilde: f64,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub t0: f64,
    /// Empirical attraction time, measured from t0.
    #[serde(rename = "T_hat")]
    pub t_hat: f64,
    /// The first-term bound of the lemma's proof, when g1 = g2 = 0.
    pub formula_bound: Option<f64>,
    pub fan: Vec<(f64, f64)>,
}

/// Integrates the frozen comparison ODE from a fan of z0 in [0, alpha_tilde]
/// and returns the first time after which every member stays below rho.
pub fn lemma2_attraction_time(
    hyp: &AveragedHypotheses,
    rho_tilde: f64,
    alpha_tilde: f64,
    beta_tilde: f64,
    t0: f64,
) -> Result<AttractionReport> {
    hyp.validate()?;
    if !(rho_tilde > 0.0) || !(alpha_tilde >= 0.0) {
        return Err(Error::InvalidInput("need rho > 0 and alpha >= 0".into()));
    }
    let fan_n = 9;
    let z0s: Vec<f64> = (0..fan_n).map(|k| alpha_tilde * k as f64 / (fan_n - 1) as f64).collect();
    let results: Vec<Result<(f64, f64)>> = z0s
        .par_iter()
        .map(|&z0| {
            let tr = solve_comparison_ode(hyp, z0, t0, hyp.horizon, OdeVariant::Frozen(beta_tilde))?;
            if tr.last() >= rho_tilde {
                return Err(Error::NotAttained { horizon: hyp.horizon });
            }
            let t = tr.last_time_at_or_above(rho_tilde).map_or(0.0, |t| t - t0);
            Ok((z0, t))
        })
        .collect();
    let fan = results.into_iter().collect::<Result<Vec<_>>>()?;
    let t_hat = fan.iter().map(|p| p.1).fold(0.0, f64::max);
    let formula_bound = if hyp.g1_zero && hyp.g2_zero {
        first_term_bound(hyp, rho_tilde, alpha_tilde, t0)
    } else {
        None
    };
    Ok(AttractionReport {
        rho_tilde,
        alpha_tilde,
        beta_tilde,
        t0,
        t_hat,
        formula_bound,
        fan,
    })
}

/// Smallest T on a 0.01 grid with alpha e^{-p(t-t0) + U(t) - L(t0)} < rho/3
/// for all later sampled t, where U, L are the two-sided growth bounds on
/// int_0^t g.
fn first_term_bound(hyp: &AveragedHypotheses, rho: f64, alpha: f64, t0: f64) -> Option<f64> {
    let theta = lemma_theta(hyp);
    let t_th = t_theta(theta, hyp.kappa).ok()?;
    if t0 < t_th {
        return None;
    }
    let env = |t: f64| 1.0 + theta * (t.powf(hyp.chi) - t.powf(hyp.kappa));
    let upper = |t: f64| hyp.q * (1.0 + t.powf(hyp.chi)) + hyp.m_bound * env(t);
    let lower0 = hyp.q * (1.0 + t0.powf(hyp.chi)) - hyp.m_bound * env(t0);
    let bad = |t: f64| alpha * (-hyp.p * (t - t0) + upper(t) - lower0).exp() >= rho / 3.0;
    let n = (hyp.horizon / 0.01).ceil() as usize;
    let mut last = None;
    for k in 0..=n {
        let t = t0 + k as f64 * 0.01;
        if bad(t) {
            last = Some(k);
        }
    }
    match last {
        None => Some(0.0),
        Some(k) if k == n => None,
        Some(k) => Some((k + 1) as f64 * 0.01),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Bounds {
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    /// Radius that d(t) never reaches.
    pub beta: f64,
    /// Onset time s(alpha).
    pub s: f64,
}

/// beta(alpha) = sqrt(beta_tilde(alpha^2 c2^2) / c1^2), s(alpha) = s_tilde(alpha^2 c2^2).
pub fn theorem1_wiring(alpha: f64, constants: &ConstantsBundle, hyp: &AveragedHypotheses) -> Result<Theorem1Bounds> {
    let alpha_tilde = alpha * alpha * constants.c2_sq;
    let lc = lemma1_constants(hyp, alpha_tilde)?;
    Ok(Theorem1Bounds {
        alpha,
        alpha_tilde,
        beta_tilde: lc.beta_tilde,
        beta: (lc.beta_tilde / constants.c1_sq).sqrt(),
        s: lc.s_tilde,
    })
}
