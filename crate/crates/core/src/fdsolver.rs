//! Finite-difference solver written as the first-order system
//! u_t = v, v_t = c^2 u_xx + eps v_xx + f with central differences in space.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::core_model::{GridFunction, ProblemSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SemiImplicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FDConfig {
    pub nx: usize,
    pub dt: f64,
    pub scheme: Scheme,
    /// Implicitness of the theta-scheme; 0.5 is Crank-Nicolson.
    pub theta_weight: f64,
    /// Re-evaluate f at the predicted state and average (second order in time).
    pub correction: bool,
    /// Keep every k-th time level in the output.
    pub store_every: usize,
}

impl FDConfig {
    pub fn new(nx: usize, dt: f64) -> Self {
        FDConfig {
            nx,
            dt,
            scheme: Scheme::SemiImplicit,
            theta_weight: 0.5,
            correction: true,
            store_every: 1,
        }
    }

    pub fn explicit(nx: usize, dt: f64) -> Self {
        FDConfig {
            scheme: Scheme::Explicit,
            theta_weight: 0.0,
            ..Self::new(nx, dt)
        }
    }

    pub fn with_store_every(mut self, k: usize) -> Self {
        self.store_every = k.max(1);
        self
    }

    pub fn validate(&self, epsilon: f64, c: f64) -> Result<()> {
        if self.nx < 4 || !(self.dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "fd grid needs nx >= 4 and dt > 0 (got {}, {})",
                self.nx, self.dt
            )));
        }
        if !(0.0..=1.0).contains(&self.theta_weight) {
            return Err(Error::InvalidInput(format!(
                "theta_weight must lie in [0, 1], got {}",
                self.theta_weight
            )));
        }
        if self.scheme == Scheme::Explicit {
            let dx = 1.0 / (self.nx - 1) as f64;
            if self.dt > dx / c || self.dt > dx * dx / (2.0 * epsilon) {
                return Err(Error::InvalidInput(format!(
                    "explicit scheme needs dt <= min(dx/c, dx^2/(2 eps)) = {:e}, got {:e}",
                    (dx / c).min(dx * dx / (2.0 * epsilon)),
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

/// Solves a tridiagonal system with constant off-diagonal `off` and
/// diagonal `diag` (Thomas algorithm, in place on `rhs`).
fn thomas_constant(diag: f64, off: f64, rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut b = diag;
    scratch[0] = off / b;
    rhs[0] /= b;
    for i in 1..n {
        b = diag - off * scratch[i - 1];
        scratch[i] = off / b;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / b;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

fn lap(u: &[f64], i: usize, inv_dx2: f64) -> f64 {
    (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2
}

fn eval_forcing(spec: &ProblemSpec, t: f64, u: &[f64], v: &[f64], dx: f64, out: &mut [f64]) {
    let n = u.len();
    let inv_dx2 = 1.0 / (dx * dx);
    if spec.forcing_is_zero {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    for i in 1..n - 1 {
        let x = i as f64 * dx;
        let ux = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        out[i] = spec.f(x, t, u[i], ux, lap(u, i, inv_dx2), v[i]);
    }
    out[0] = 0.0;
    out[n - 1] = 0.0;
}

/// Integrates the spec up to `horizon`. The step is adjusted to divide the
/// horizon into a whole number of steps; boundary columns follow h1, h2.
/// The result carries u, u_t and the spatial derivative diagnostics.
pub fn solve_fd(spec: &ProblemSpec, cfg: &FDConfig, horizon: f64) -> Result<GridFunction> {
    spec.validate()?;
    cfg.validate(spec.epsilon, spec.c)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let nx = cfg.nx;
    let dx = 1.0 / (nx - 1) as f64;
    let steps = ((horizon / cfg.dt).round() as usize).max(1);
    let dt = horizon / steps as f64;
    let every = cfg.store_every.max(1);
    let stored = steps / every + 1 + usize::from(!steps.is_multiple_of(every));
    let (eps, c2) = (spec.epsilon, spec.c * spec.c);
    let inv_dx2 = 1.0 / (dx * dx);

    let mut u: Vec<f64> = (0..nx).map(|i| spec.u0.eval(i as f64 * dx)).collect();
    let mut v: Vec<f64> = (0..nx).map(|i| spec.u1.eval(i as f64 * dx)).collect();
    u[0] = spec.h1.eval(0.0);
    u[nx - 1] = spec.h2.eval(0.0);
    v[0] = spec.h1.d1(0.0);
    v[nx - 1] = spec.h2.d1(0.0);

    let mut out_u = Vec::with_capacity(stored * nx);
    let mut out_v = Vec::with_capacity(stored * nx);
    out_u.extend_from_slice(&u);
    out_v.extend_from_slice(&v);
    let mut times = vec![0.0];

    let scale0 = u.iter().chain(v.iter()).fold(1.0f64, |m, a| m.max(a.abs()));
    let limit = 1e6 * scale0;

    let th = cfg.theta_weight;
    let mut f_n = vec![0.0; nx];
    let mut f_p = vec![0.0; nx];
    let mut rhs = vec![0.0; nx - 2];
    let mut scratch = Vec::new();
    let mut u_new = vec![0.0; nx];
    let mut v_new = vec![0.0; nx];

    for step in 0..steps {
        let t = step as f64 * dt;
        let t1 = (step + 1) as f64 * dt;
        eval_forcing(spec, t, &u, &v, dx, &mut f_n);
        let (b1, b2) = (spec.h1.eval(t1), spec.h2.eval(t1));
        let (g1, g2) = (spec.h1.d1(t1), spec.h2.d1(t1));
        let passes = if cfg.correction { 2 } else { 1 };
        for pass in 0..passes {
            let fstar = |i: usize| {
                if pass == 0 {
                    f_n[i]
                } else {
                    0.5 * (f_n[i] + f_p[i])
                }
            };
            match cfg.scheme {
                Scheme::Explicit => {
                    for i in 1..nx - 1 {
                        v_new[i] = v[i]
                            + dt * (c2 * lap(&u, i, inv_dx2) + eps * lap(&v, i, inv_dx2) + fstar(i));
                    }
                    v_new[0] = g1;
                    v_new[nx - 1] = g2;
                    for i in 1..nx - 1 {
                        u_new[i] = u[i] + dt * v_new[i];
                    }
                }
                Scheme::SemiImplicit => {
                    let k_imp = dt * th * (eps + th * c2 * dt);
                    let k_exp = dt * (1.0 - th) * (eps + th * c2 * dt);
                    for i in 1..nx - 1 {
                        rhs[i - 1] = v[i]
                            + dt * c2 * lap(&u, i, inv_dx2)
                            + k_exp * lap(&v, i, inv_dx2)
                            + dt * fstar(i);
                    }
                    // boundary values of v at the new level enter the implicit Laplacian
                    let off = -k_imp * inv_dx2;
                    rhs[0] -= off * g1;
                    rhs[nx - 3] -= off * g2;
                    thomas_constant(1.0 + 2.0 * k_imp * inv_dx2, off, &mut rhs, &mut scratch);
                    v_new[0] = g1;
                    v_new[nx - 1] = g2;
                    v_new[1..nx - 1].copy_from_slice(&rhs);
                    for i in 1..nx - 1 {
                        u_new[i] = u[i] + dt * ((1.0 - th) * v[i] + th * v_new[i]);
                    }
                }
            }
            u_new[0] = b1;
            u_new[nx - 1] = b2;
            if pass + 1 < passes {
                eval_forcing(spec, t1, &u_new, &v_new, dx, &mut f_p);
            }
        }
        std::mem::swap(&mut u, &mut u_new);
        std::mem::swap(&mut v, &mut v_new);
        let norm = u.iter().chain(v.iter()).fold(0.0f64, |m, a| m.max(a.abs()));
        if !norm.is_finite() || norm > limit {
            return Err(Error::Instability { t: t1, norm });
        }
        if (step + 1) % every == 0 || step + 1 == steps {
            out_u.extend_from_slice(&u);
            out_v.extend_from_slice(&v);
            times.push(t1);
        }
    }
    let nt = times.len();
    // a trailing partial stride is stored with its own spacing; resample it away
    let uniform_dt = dt * every as f64;
    let mut g = if steps.is_multiple_of(every) {
        GridFunction {
            nx,
            nt,
            t0: 0.0,
            dt: uniform_dt,
            u: out_u,
            ut: Some(out_v),
            ux: None,
            uxx: None,
        }
    } else {
        let keep = nt - 1;
        out_u.truncate(keep * nx);
        out_v.truncate(keep * nx);
        GridFunction {
            nx,
            nt: keep,
            t0: 0.0,
            dt: uniform_dt,
            u: out_u,
            ut: Some(out_v),
            ux: None,
            uxx: None,
        }
    };
    g.derive_spatial();
    Ok(g)
}

pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// An exact solution with the derivatives needed to apply L.
#[derive(Clone)]
pub struct Manufactured {
    pub u: Field,
    pub ut: Field,
    pub utt: Field,
    pub ux: Field,
    pub uxx: Field,
    pub uxxt: Field,
}

impl Manufactured {
    pub fn zero() -> Self {
        let z: Field = Arc::new(|_, _| 0.0);
        Manufactured {
            u: z.clone(),
            ut: z.clone(),
            utt: z.clone(),
            ux: z.clone(),
            uxx: z.clone(),
            uxxt: z,
        }
    }

    /// u = e^{-t} sin(k pi x).
    pub fn decaying_sine(k: f64) -> Self {
        use std::f64::consts::PI;
        let w = k * PI;
        Manufactured {
            u: Arc::new(move |x, t| (-t).exp() * (w * x).sin()),
            ut: Arc::new(move |x, t| -(-t).exp() * (w * x).sin()),
            utt: Arc::new(move |x, t| (-t).exp() * (w * x).sin()),
            ux: Arc::new(move |x, t| w * (-t).exp() * (w * x).cos()),
            uxx: Arc::new(move |x, t| -w * w * (-t).exp() * (w * x).sin()),
            uxxt: Arc::new(move |x, t| w * w * (-t).exp() * (w * x).sin()),
        }
    }

    /// u = t x (1 - x).
    pub fn quadratic_ramp() -> Self {
        Manufactured {
            u: Arc::new(|x, t| t * x * (1.0 - x)),
            ut: Arc::new(|x, _| x * (1.0 - x)),
            utt: Arc::new(|_, _| 0.0),
            ux: Arc::new(|x, t| t * (1.0 - 2.0 * x)),
            uxx: Arc::new(|_, t| -2.0 * t),
            uxxt: Arc::new(|_, _| -2.0),
        }
    }

    /// Spec whose forcing is L applied to this solution, with matching data.
    pub fn spec(&self, epsilon: f64, c: f64) -> ProblemSpec {
        use crate::core_model::Smooth1;
        let f = manufactured_forcing(self, epsilon, c);
        let e = self.clone();
        let (a, b, d) = (e.clone(), e.clone(), e.clone());
        let u0 = Smooth1::with_derivatives(
            move |x| (a.u)(x, 0.0),
            move |x| (b.ux)(x, 0.0),
            move |x| (d.uxx)(x, 0.0),
        );
        let e1 = e.clone();
        let u1 = Smooth1::new(move |x| (e1.ut)(x, 0.0));
        let side = |x: f64| {
            let (a, b, d) = (e.clone(), e.clone(), e.clone());
            Smooth1::with_derivatives(
                move |t| (a.u)(x, t),
                move |t| (b.ut)(x, t),
                move |t| (d.utt)(x, t),
            )
        };
        ProblemSpec::new(epsilon, c)
            .with_forcing(move |x, t, _, _, _, _| f(x, t))
            .with_initial(u0, u1)
            .with_boundary(side(0.0), side(1.0))
            .with_name("manufactured")
    }

    pub fn sample(&self, nx: usize, nt: usize, dt: f64) -> Result<GridFunction> {
        let mut g = GridFunction::zeros(nx, nt, 0.0, dt)?;
        let mut ut = vec![0.0; nx * nt];
        for n in 0..nt {
            for i in 0..nx {
                let (x, t) = (g.x(i), g.t(n));
                g.u[n * nx + i] = (self.u)(x, t);
                ut[n * nx + i] = (self.ut)(x, t);
            }
        }
        g.ut = Some(ut);
        Ok(g)
    }
}

/// f(x, t) = L u_exact = -eps u_xxt - c^2 u_xx + u_tt.
pub fn manufactured_forcing(exact: &Manufactured, epsilon: f64, c: f64) -> Field {
    let e = exact.clone();
    let c2 = c * c;
    Arc::new(move |x, t| -epsilon * (e.uxxt)(x, t) - c2 * (e.uxx)(x, t) + (e.utt)(x, t))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub nxs: Vec<usize>,
    pub space_errors: Vec<f64>,
    pub space_orders: Vec<f64>,
    pub dts: Vec<f64>,
    pub time_errors: Vec<f64>,
    pub time_orders: Vec<f64>,
}

impl ConvergenceReport {
    /// Smallest observed order over both axes (NaN orders, from exact
    /// zero errors, are skipped).
    pub fn min_order(&self) -> f64 {
        self.space_orders
            .iter()
            .chain(self.time_orders.iter())
            .filter(|o| o.is_finite())
            .fold(f64::INFINITY, |m, &o| m.min(o))
    }
}

#[derive(Debug, Clone)]
pub struct StudyPlan {
    pub nxs: Vec<usize>,
    /// Step used for the spatial sweep; should make the time error negligible.
    pub dt_space: f64,
    pub dts: Vec<f64>,
    pub nx_time: usize,
    pub horizon: f64,
}

fn orders(errors: &[f64], ratios: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(ratios)
        .map(|(w, r)| {
            if w[0] == 0.0 && w[1] == 0.0 {
                f64::NAN
            } else {
                (w[0] / w[1]).ln() / r.ln()
            }
        })
        .collect()
}

fn final_row_sup(a: &GridFunction, b: &GridFunction) -> f64 {
    // b is the finer grid in x; compare on a's nodes
    let stride = (b.nx - 1) / (a.nx - 1);
    let (ra, rb) = (a.row(a.nt - 1), b.row(b.nt - 1));
    (0..a.nx).fold(0.0f64, |m, i| m.max((ra[i] - rb[i * stride]).abs()))
}

fn final_row_sup_same_x(a: &GridFunction, b: &GridFunction) -> f64 {
    let (ra, rb) = (a.row(a.nt - 1), b.row(b.nt - 1));
    ra.iter().zip(rb).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
}

/// Sup over the final row of the errors in u, u_t, u_x and u_xx.
pub fn state_error(g: &GridFunction, e: &Manufactured, t: f64) -> f64 {
    let n = g.nt - 1;
    let parts: [(&[f64], &Field); 4] = [
        (g.row(n), &e.u),
        (g.row_of(g.ut.as_ref().expect("fd output has u_t"), n), &e.ut),
        (g.row_of(g.ux.as_ref().expect("fd output has u_x"), n), &e.ux),
        (g.row_of(g.uxx.as_ref().expect("fd output has u_xx"), n), &e.uxx),
    ];
    let mut worst = 0.0f64;
    for (row, f) in parts {
        for (i, v) in row.iter().enumerate() {
            worst = worst.max((v - f(g.x(i), t)).abs());
        }
    }
    worst
}

/// Observed orders. The spatial sweep measures the state error (u, u_t,
/// u_x, u_xx) against `exact` at the final time when supplied, otherwise differences of successive
/// resolutions. The temporal sweep always uses successive differences on a
/// common spatial grid, so the spatial error cancels.
pub fn convergence_study(
    spec: &ProblemSpec,
    exact: Option<&Manufactured>,
    plan: &StudyPlan,
) -> Result<ConvergenceReport> {
    let t_end = plan.horizon;
    let runs: Vec<GridFunction> = plan
        .nxs
        .iter()
        .map(|&nx| solve_fd(spec, &FDConfig::new(nx, plan.dt_space), t_end))
        .collect::<Result<_>>()?;
    let space_errors: Vec<f64> = match exact {
        Some(e) => runs.iter().map(|g| state_error(g, e, t_end)).collect(),
        None => runs.windows(2).map(|w| final_row_sup(&w[0], &w[1])).collect(),
    };
    let space_ratios: Vec<f64> = plan
        .nxs
        .windows(2)
        .map(|w| (w[1] - 1) as f64 / (w[0] - 1) as f64)
        .collect();
    let truns: Vec<GridFunction> = plan
        .dts
        .iter()
        .map(|&dt| solve_fd(spec, &FDConfig::new(plan.nx_time, dt), t_end))
        .collect::<Result<_>>()?;
    let time_errors: Vec<f64> = truns
        .windows(2)
        .map(|w| final_row_sup_same_x(&w[0], &w[1]))
        .collect();
    let time_ratios: Vec<f64> = plan.dts.windows(2).map(|w| w[0] / w[1]).collect();
    let space_orders = if exact.is_some() {
        orders(&space_errors, &space_ratios)
    } else {
        orders(&space_errors, &space_ratios[1..])
    };
    Ok(ConvergenceReport {
        nxs: plan.nxs.clone(),
        space_errors,
        space_orders,
        dts: plan.dts.clone(),
        time_orders: orders(&time_errors, &time_ratios[1..]),
        time_errors,
    })
}
