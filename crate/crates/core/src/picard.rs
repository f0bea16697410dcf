//! Green's-function fixed-point solver: the map T_v, the step rule, the
//! weighted contraction norm and the continuation over segments [a_k, a_{k+1}].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core_model::{homogenize_boundaries, BoundaryLift, GridFunction, ProblemSpec};
use crate::error::{Error, Result};
use crate::kernels::{KernelParams, KernelTable, ProfileCache, Quantity};
use crate::quad::{adaptive_pieces, trapezoid_weights, GaussLegendre, QuadOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardConfig {
    pub rho: f64,
    pub lambda_margin: f64,
    pub max_iter: usize,
    pub fix_tol: f64,
    /// Lipschitz constant of f over the tube; sampled when absent.
    pub lipschitz_mu: Option<f64>,
    pub nx: usize,
    pub dt: f64,
    /// Falls back to the spec's horizon.
    pub horizon: Option<f64>,
    /// Random tube points per grid sample when estimating M and mu.
    pub samples: usize,
    pub safety: f64,
    pub seed: u64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            rho: 1.0,
            lambda_margin: 1.1,
            max_iter: 60,
            fix_tol: 1e-10,
            lipschitz_mu: None,
            nx: 101,
            dt: 0.01,
            horizon: None,
            samples: 8,
            safety: 1.2,
            seed: 7,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || self.max_iter < 1 || !(self.fix_tol > 0.0) {
            return Err(Error::InvalidInput(
                "picard needs rho > 0, max_iter >= 1 and fix_tol > 0".into(),
            ));
        }
        if !(self.lambda_margin > 1.0) {
            return Err(Error::InvalidInput(format!(
                "lambda_margin must exceed 1, got {}",
                self.lambda_margin
            )));
        }
        if self.nx < 4 || !(self.dt > 0.0) {
            return Err(Error::InvalidInput("picard grid needs nx >= 4 and dt > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SegmentReport {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "M")]
    pub m_sup: f64,
    pub mu: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub final_residual: f64,
    /// Largest ratio of successive iterate distances.
    pub max_contraction: f64,
    /// Smallest distance from the tube wall over all iterates (rho minus deviation).
    pub tube_margin: f64,
}

/// b = a + min{T - a, rho/M, c rho/M, eps rho/M, sqrt(2 rho/M)}; b = T when M = 0.
pub fn step_interval(a: f64, t_end: f64, m: f64, rho: f64, c: f64, epsilon: f64) -> f64 {
    if m <= 0.0 {
        return t_end;
    }
    let len = (t_end - a)
        .min(rho / m)
        .min(c * rho / m)
        .min(epsilon * rho / m)
        .min((2.0 * rho / m).sqrt());
    a + len
}

pub fn lambda_choice(mu: f64, c: f64, epsilon: f64, margin: f64) -> f64 {
    margin * 1f64.max(mu * (2.0 + 1.0 / c + (1.0 + 2.0 * c * c) / epsilon))
}

/// Theoretical contraction factor of T_v for given mu and lambda.
pub fn contraction_bound(mu: f64, lambda: f64, c: f64, epsilon: f64) -> f64 {
    mu / lambda
        * (1.0 / lambda + 1.0 / c + 1.0 + 1.0 / epsilon + 2.0 * c * c / (epsilon * lambda))
}

/// Sum of the sups of e^{-lambda (t - t0)} |u|, |u_x|, |u_t|, |u_xx| over the
/// grid. The weight is taken relative to the first stored time, which only
/// rescales the norm by the constant e^{-lambda t0}.
pub fn weighted_norm(u: &GridFunction, lambda: f64) -> Result<f64> {
    let (ux, uxx, ut) = match (&u.ux, &u.uxx, &u.ut) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(Error::InvalidInput(
                "weighted norm needs u_x, u_xx and u_t grids".into(),
            ))
        }
    };
    let mut s = [0.0f64; 4];
    for n in 0..u.nt {
        let w = (-lambda * (u.t(n) - u.t0)).exp();
        for i in 0..u.nx {
            let k = n * u.nx + i;
            s[0] = s[0].max(w * u.u[k].abs());
            s[1] = s[1].max(w * ux[k].abs());
            s[2] = s[2].max(w * ut[k].abs());
            s[3] = s[3].max(w * uxx[k].abs());
        }
    }
    Ok(s.iter().sum())
}

const QS: [Quantity; 4] = [Quantity::W, Quantity::Wx, Quantity::Wxx, Quantity::Wt];
const NAMES: [&str; 4] = ["u", "u_x", "u_xx", "u_t"];

/// Four field rows (u, u_x, u_xx, u_t) on one time level.
type Rows = [Vec<f64>; 4];

fn zero_rows(nx: usize) -> Rows {
    [vec![0.0; nx], vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]]
}

/// Trapezoid weight of level m on [lo, hi].
fn tweight(m: usize, lo: usize, hi: usize, dt: f64) -> f64 {
    if hi == lo {
        0.0
    } else if m == lo || m == hi {
        0.5 * dt
    } else {
        dt
    }
}

/// Discretized T_v on a fixed uniform grid for a spec with zero boundary data.
pub struct PicardEngine {
    spec: ProblemSpec,
    cfg: PicardConfig,
    table: KernelTable,
    nx: usize,
    dt: f64,
    levels: usize,
    xw: Vec<f64>,
    ext: Vec<[Vec<f64>; 4]>,
    /// Data part of omega (u0, u1 integrals) for every level.
    data: Vec<Rows>,
}

impl PicardEngine {
    pub fn new(spec: &ProblemSpec, cfg: &PicardConfig) -> Result<Self> {
        spec.validate()?;
        cfg.validate()?;
        if !spec.has_zero_boundaries() {
            return Err(Error::InvalidInput(
                "the picard engine needs zero boundary data; homogenize first".into(),
            ));
        }
        let horizon = cfg.horizon.or(spec.horizon).ok_or_else(|| {
            Error::InvalidInput("picard needs a finite horizon".into())
        })?;
        let levels = ((horizon / cfg.dt).round() as usize).max(1);
        let dt = horizon / levels as f64;
        let nx = cfg.nx;
        let params = KernelParams::new(spec.epsilon, spec.c)?.with_terms_for_horizon(horizon);
        let table = KernelTable::build(&params, nx, dt, levels)?;
        let dx = table.dx();
        let xw = trapezoid_weights(nx, dx);
        let mut ext = Vec::with_capacity(levels + 1);
        ext.push([Vec::new(), Vec::new(), Vec::new(), Vec::new()]);
        for n in 1..=levels {
            ext.push(QS.map(|q| table.offsets(q, n)));
        }
        let mut e = PicardEngine {
            spec: spec.clone(),
            cfg: cfg.clone(),
            table,
            nx,
            dt,
            levels,
            xw,
            ext,
            data: Vec::new(),
        };
        e.data = e.data_part();
        Ok(e)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn levels(&self) -> usize {
        self.levels
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn kernel_error(&self) -> f64 {
        self.table.max_error
    }

    fn x(&self, i: usize) -> f64 {
        i as f64 / (self.nx - 1) as f64
    }

    fn data_part(&self) -> Vec<Rows> {
        let nx = self.nx;
        let (eps, c2) = (self.spec.epsilon, self.spec.c * self.spec.c);
        let u0: Vec<f64> = (0..nx).map(|i| self.spec.u0.eval(self.x(i))).collect();
        let g: Vec<f64> = (0..nx)
            .map(|i| self.spec.u1.eval(self.x(i)) - eps * self.spec.u0.d2(self.x(i)))
            .collect();
        let l = nx - 1;
        let mut out: Vec<Rows> = (0..=self.levels)
            .into_par_iter()
            .map(|n| {
                let mut r = zero_rows(nx);
                if n == 0 {
                    for i in 0..nx {
                        let x = self.x(i);
                        r[0][i] = self.spec.u0.eval(x);
                        r[1][i] = self.spec.u0.d1(x);
                        r[2][i] = self.spec.u0.d2(x);
                        r[3][i] = self.spec.u1.eval(x);
                    }
                    return r;
                }
                // pairs (kernel applied to u0, kernel applied to g) per field
                let pairs = [
                    (Quantity::Wt, Quantity::W),
                    (Quantity::Wtx, Quantity::Wx),
                    (Quantity::Wtxx, Quantity::Wxx),
                    (Quantity::Wtt, Quantity::Wt),
                ];
                for (f, (qa, qb)) in pairs.iter().enumerate() {
                    let ea = self.table.offsets(*qa, n);
                    let eb = self.table.offsets(*qb, n);
                    for i in 0..nx {
                        let mut s = 0.0;
                        for j in 1..l {
                            let wa = ea[i + l - j] - ea[i + j + l];
                            let wb = eb[i + l - j] - eb[i + j + l];
                            s += self.xw[j] * (wa * u0[j] + wb * g[j]);
                        }
                        r[f][i] = s;
                    }
                }
                let mass = self.table.delta_mass(n);
                for i in 1..l {
                    r[2][i] += (c2 / eps) * mass * u0[i] - mass * g[i];
                }
                r
            })
            .collect();
        // boundary rows follow the homogeneous data exactly
        for r in out.iter_mut() {
            r[0][0] = 0.0;
            r[0][l] = 0.0;
            r[3][0] = 0.0;
            r[3][l] = 0.0;
        }
        out
    }

    /// acc += weight * (kernel at lag s applied to f), all four fields.
    fn accumulate(&self, s: usize, weight: f64, f: &[f64], acc: &mut Rows) {
        if weight == 0.0 {
            return;
        }
        let nx = self.nx;
        let l = nx - 1;
        if s == 0 {
            // limits as the lag vanishes: only w_t survives, as a point evaluation
            for i in 1..l {
                acc[3][i] += weight * f[i];
            }
            return;
        }
        let fw: Vec<f64> = (0..nx).map(|j| self.xw[j] * f[j]).collect();
        for q in 0..4 {
            let e = &self.ext[s][q];
            let row = &mut acc[q];
            for (i, out) in row.iter_mut().enumerate() {
                let mut sum = 0.0;
                for j in 1..l {
                    sum += (e[i + l - j] - e[i + j + l]) * fw[j];
                }
                *out += weight * sum;
            }
        }
        let mass = self.table.delta_mass(s);
        for i in 1..l {
            acc[2][i] -= weight * mass * f[i];
        }
    }

    fn forcing_row(&self, n: usize, r: &Rows) -> Vec<f64> {
        let t = n as f64 * self.dt;
        (0..self.nx)
            .map(|i| {
                if self.spec.forcing_is_zero {
                    0.0
                } else {
                    self.spec.f(self.x(i), t, r[0][i], r[1][i], r[2][i], r[3][i])
                }
            })
            .collect()
    }

    /// omega_v on levels ma..=levels, given the forcing history F_m for m <= ma.
    fn omega_levels(&self, ma: usize, hist: &[Vec<f64>]) -> Vec<Rows> {
        (ma..=self.levels)
            .into_par_iter()
            .map(|n| {
                let mut r = self.data[n].clone();
                if ma > 0 {
                    for (m, f) in hist.iter().enumerate().take(ma + 1) {
                        self.accumulate(n - m, tweight(m, 0, ma, self.dt), f, &mut r);
                    }
                }
                r
            })
            .collect()
    }

    /// One application of T_v on levels ma..=mb with omega given on the same levels.
    fn apply_levels(&self, ma: usize, omega: &[Rows], cand: &[Rows]) -> Vec<Rows> {
        let forcing: Vec<Vec<f64>> = cand
            .iter()
            .enumerate()
            .map(|(k, r)| self.forcing_row(ma + k, r))
            .collect();
        (0..cand.len())
            .into_par_iter()
            .map(|k| {
                let n = ma + k;
                let mut r = omega[k].clone();
                if !self.spec.forcing_is_zero {
                    for (kk, f) in forcing.iter().enumerate().take(k + 1) {
                        self.accumulate(n - (ma + kk), tweight(ma + kk, ma, n, self.dt), f, &mut r);
                    }
                }
                r
            })
            .collect()
    }

    fn weighted_distance(&self, ma: usize, a: &[Rows], b: &[Rows], lambda: f64) -> f64 {
        let mut s = [0.0f64; 4];
        for (k, (ra, rb)) in a.iter().zip(b).enumerate() {
            let _ = ma;
            let w = (-lambda * k as f64 * self.dt).exp();
            for q in 0..4 {
                for (x, y) in ra[q].iter().zip(&rb[q]) {
                    s[q] = s[q].max(w * (x - y).abs());
                }
            }
        }
        s.iter().sum()
    }

    /// Largest deviation from the tube centre, with its location.
    fn tube_deviation(&self, ma: usize, omega: &[Rows], u: &[Rows]) -> (f64, usize, usize, usize) {
        let mut worst = (0.0, 0, 0, 0);
        for (k, (ro, ru)) in omega.iter().zip(u).enumerate() {
            for q in 0..4 {
                for i in 0..self.nx {
                    let d = (ru[q][i] - ro[q][i]).abs();
                    if d > worst.0 {
                        worst = (d, q, i, ma + k);
                    }
                }
            }
        }
        worst
    }

    /// Sampled sup of |f| and of its Lipschitz quotient over the tube
    /// around omega (levels ma.. in `omega`), both times the safety factor.
    fn sample_tube(&self, ma: usize, omega: &[Rows], seed: u64) -> (f64, f64) {
        if self.spec.forcing_is_zero {
            return (0.0, 0.0);
        }
        let rho = self.cfg.rho;
        let stride = (omega.len() / 100).max(1);
        let rows: Vec<usize> = (0..omega.len()).step_by(stride).collect();
        let res: Vec<(f64, f64)> = rows
            .par_iter()
            .map(|&k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9));
                let t = (ma + k) as f64 * self.dt;
                let r = &omega[k];
                let (mut m, mut mu) = (0.0f64, 0.0f64);
                for i in 0..self.nx {
                    let x = self.x(i);
                    let centre = [r[0][i], r[1][i], r[2][i], r[3][i]];
                    let f = |z: &[f64; 4]| self.spec.f(x, t, z[0], z[1], z[2], z[3]);
                    for corner in 0..16u32 {
                        let mut z = centre;
                        for (q, zq) in z.iter_mut().enumerate() {
                            *zq += if corner >> q & 1 == 1 { rho } else { -rho };
                        }
                        m = m.max(f(&z).abs());
                    }
                    m = m.max(f(&centre).abs());
                    for _ in 0..self.cfg.samples {
                        let mut z1 = centre;
                        let mut z2 = centre;
                        for q in 0..4 {
                            z1[q] += rng.gen_range(-rho..=rho);
                            z2[q] += rng.gen_range(-rho..=rho);
                        }
                        let (f1, f2) = (f(&z1), f(&z2));
                        m = m.max(f1.abs()).max(f2.abs());
                        let dz: f64 = z1.iter().zip(&z2).map(|(a, b)| (a - b).abs()).sum();
                        if dz > 0.0 {
                            mu = mu.max((f1 - f2).abs() / dz);
                        }
                        // partial derivatives bound the l1 Lipschitz constant from below sharply
                        for q in 0..4 {
                            let h = 1e-6 * (1.0 + z1[q].abs());
                            let mut zp = z1;
                            let mut zm = z1;
                            zp[q] += h;
                            zm[q] -= h;
                            mu = mu.max(((f(&zp) - f(&zm)) / (2.0 * h)).abs());
                        }
                    }
                }
                (m, mu)
            })
            .collect();
        let (m, mu) = res.iter().fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        (self.cfg.safety * m, self.cfg.safety * mu)
    }

    fn rows_to_grid(&self, t0_level: usize, rows: &[Rows]) -> GridFunction {
        let nx = self.nx;
        let nt = rows.len();
        let mut comp = [vec![0.0; nx * nt], vec![0.0; nx * nt], vec![0.0; nx * nt], vec![0.0; nx * nt]];
        for (k, r) in rows.iter().enumerate() {
            for q in 0..4 {
                comp[q][k * nx..(k + 1) * nx].copy_from_slice(&r[q]);
            }
        }
        let [u, ux, uxx, ut] = comp;
        GridFunction {
            nx,
            nt,
            t0: t0_level as f64 * self.dt,
            dt: self.dt,
            u,
            ut: Some(ut),
            ux: Some(ux),
            uxx: Some(uxx),
        }
    }

    fn grid_to_rows(&self, g: &GridFunction) -> Result<(usize, Vec<Rows>)> {
        if g.nx != self.nx || (g.dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::InvalidInput(format!(
                "grid (nx {}, dt {}) does not match the engine (nx {}, dt {})",
                g.nx, g.dt, self.nx, self.dt
            )));
        }
        let start = (g.t0 / self.dt).round() as usize;
        if (start as f64 * self.dt - g.t0).abs() > 1e-9 || start + g.nt - 1 > self.levels {
            return Err(Error::InvalidInput("grid times are not engine levels".into()));
        }
        let (ux, uxx, ut) = match (&g.ux, &g.uxx, &g.ut) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::InvalidInput("grid needs u_x, u_xx and u_t companions".into())),
        };
        let nx = self.nx;
        let rows = (0..g.nt)
            .map(|n| {
                let sl = |v: &Vec<f64>| v[n * nx..(n + 1) * nx].to_vec();
                [sl(&g.u), sl(ux), sl(uxx), sl(ut)]
            })
            .collect();
        Ok((start, rows))
    }

    fn history(&self, v: Option<&GridFunction>) -> Result<(usize, Vec<Vec<f64>>)> {
        match v {
            None => Ok((0, Vec::new())),
            Some(g) => {
                let (start, rows) = self.grid_to_rows(g)?;
                if start != 0 {
                    return Err(Error::InvalidInput("history must start at t = 0".into()));
                }
                let hist = rows.iter().enumerate().map(|(m, r)| self.forcing_row(m, r)).collect();
                Ok((g.nt - 1, hist))
            }
        }
    }

    /// omega_v on [a, T] where a is the end of the history grid `v` (or 0).
    pub fn omega_grid(&self, v: Option<&GridFunction>) -> Result<GridFunction> {
        let (ma, hist) = self.history(v)?;
        Ok(self.rows_to_grid(ma, &self.omega_levels(ma, &hist)))
    }

    /// T_v applied to a candidate on [a, b]; rejects candidates outside the tube.
    pub fn apply_t(&self, v: Option<&GridFunction>, u: &GridFunction) -> Result<GridFunction> {
        let (ma, hist) = self.history(v)?;
        let (start, cand) = self.grid_to_rows(u)?;
        if start != ma {
            return Err(Error::InvalidInput("candidate must start where the history ends".into()));
        }
        let omega_all = self.omega_levels(ma, &hist);
        let omega = &omega_all[..cand.len()];
        let (dev, q, i, n) = self.tube_deviation(ma, omega, &cand);
        if dev > self.cfg.rho {
            return Err(Error::TubeViolation {
                component: NAMES[q],
                x: self.x(i),
                t: n as f64 * self.dt,
                deviation: dev,
                rho: self.cfg.rho,
            });
        }
        Ok(self.rows_to_grid(ma, &self.apply_levels(ma, omega, &cand)))
    }

    /// Runs the segment continuation up to the horizon.
    pub fn solve(&self) -> Result<(GridFunction, Vec<SegmentReport>)> {
        let mut solution: Vec<Rows> = vec![self.data[0].clone()];
        let mut hist: Vec<Vec<f64>> = vec![self.forcing_row(0, &solution[0])];
        let mut reports = Vec::new();
        let t_end = self.levels as f64 * self.dt;
        let (eps, c) = (self.spec.epsilon, self.spec.c);
        let mut ma = 0usize;
        while ma < self.levels {
            let a = ma as f64 * self.dt;
            let omega_all = self.omega_levels(ma, &hist);
            let (m_sup, mu_sampled) = self.sample_tube(ma, &omega_all, self.cfg.seed ^ ma as u64);
            let mu = self.cfg.lipschitz_mu.unwrap_or(mu_sampled);
            let b = step_interval(a, t_end, m_sup, self.cfg.rho, c, eps);
            let mb = (((b - a) / self.dt + 1e-9).floor() as usize + ma).min(self.levels);
            if mb == ma {
                return Err(Error::Stalled { a_inf: a });
            }
            let lambda = lambda_choice(mu, c, eps, self.cfg.lambda_margin);
            let omega = &omega_all[..=mb - ma];
            let mut cur: Vec<Rows> = omega.to_vec();
            let mut prev_dist = f64::NAN;
            let mut max_ratio = 0.0f64;
            let mut min_margin = self.cfg.rho;
            let mut iterations = 0;
            let mut residual = f64::INFINITY;
            while iterations < self.cfg.max_iter {
                let next = self.apply_levels(ma, omega, &cur);
                iterations += 1;
                let (dev, q, i, n) = self.tube_deviation(ma, omega, &next);
                if dev > self.cfg.rho {
                    return Err(Error::TubeViolation {
                        component: NAMES[q],
                        x: self.x(i),
                        t: n as f64 * self.dt,
                        deviation: dev,
                        rho: self.cfg.rho,
                    });
                }
                min_margin = min_margin.min(self.cfg.rho - dev);
                residual = self.weighted_distance(ma, &next, &cur, lambda);
                // ratios of round-off sized distances carry no information
                if prev_dist.is_finite() && prev_dist > 1e3 * f64::EPSILON * (1.0 + dev) {
                    max_ratio = max_ratio.max(residual / prev_dist);
                }
                prev_dist = residual;
                cur = next;
                if residual < self.cfg.fix_tol {
                    break;
                }
            }
            if residual >= self.cfg.fix_tol {
                return Err(Error::NoConvergence { iterations, residual });
            }
            for (k, r) in cur.iter().enumerate().skip(1) {
                hist.push(self.forcing_row(ma + k, r));
                solution.push(r.clone());
            }
            reports.push(SegmentReport {
                a,
                b: mb as f64 * self.dt,
                m_sup,
                mu,
                lambda,
                iterations,
                final_residual: residual,
                max_contraction: max_ratio,
                tube_margin: min_margin,
            });
            ma = mb;
        }
        Ok((self.rows_to_grid(0, &solution), reports))
    }
}

/// Homogenizes the boundary data, runs the fixed-point continuation and
/// lifts the result back to the original boundary values.
pub fn solve_picard(
    spec: &ProblemSpec,
    cfg: &PicardConfig,
) -> Result<(GridFunction, Vec<SegmentReport>)> {
    let hom = homogenize_boundaries(spec);
    let engine = PicardEngine::new(&hom, cfg)?;
    let (g, reports) = engine.solve()?;
    if spec.has_zero_boundaries() {
        Ok((g, reports))
    } else {
        Ok((BoundaryLift::of(spec).lift_grid(&g), reports))
    }
}

/// Pointwise omega_v(x, t). The data integrals use adaptive quadrature on
/// cached theta profiles; the history integral over [0, a] uses the
/// trapezoid rule on the grid of `v` (which must carry derivative
/// companions); boundary terms use Gauss-Legendre in sqrt(t - tau).
pub fn omega_v(
    spec: &ProblemSpec,
    v: Option<&GridFunction>,
    x: f64,
    t: f64,
    params: &KernelParams,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || t < 0.0 {
        return Err(Error::InvalidInput(format!("omega_v needs x in [0,1], t >= 0 (got {x}, {t})")));
    }
    if let Some(g) = v {
        if t < g.t_end() - 1e-12 {
            return Err(Error::InvalidInput("omega_v needs t >= a".into()));
        }
    }
    if t == 0.0 {
        return Ok(spec.u0.eval(x));
    }
    let cache = ProfileCache::global();
    let prof = cache.get(t, params)?;
    let eps = spec.epsilon;
    let opts = QuadOptions::tol(1e-12, 1e-10);
    let mut pts = vec![0.0, 1.0];
    if x > 0.0 && x < 1.0 {
        pts.insert(1, x);
    }
    let data = adaptive_pieces(
        |xi| {
            prof.w_t(x, xi) * spec.u0.eval(xi)
                + prof.w(x, xi) * (spec.u1.eval(xi) - eps * spec.u0.d2(xi))
        },
        &pts,
        opts,
    )?
    .value;

    let mut boundary = 0.0;
    if !spec.has_zero_boundaries() {
        let gl = GaussLegendre::new(48);
        let c2 = spec.c * spec.c;
        let mut err: Option<Error> = None;
        let mut integrand = |r: f64| {
            let s = r * r;
            if s <= 0.0 {
                return 0.0;
            }
            match cache.get(s, params) {
                Ok(p) => {
                    let kern = |y: f64| c2 * p.theta_x(y) + eps * p.theta_tx(y);
                    2.0 * r
                        * (-2.0 * spec.h1.eval(t - s) * kern(x)
                            + 2.0 * spec.h2.eval(t - s) * kern(1.0 - x))
                }
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        };
        boundary = gl.integrate(&mut integrand, 0.0, t.sqrt());
        if let Some(e) = err {
            return Err(e);
        }
    }

    let mut hist = 0.0;
    if let Some(g) = v {
        if g.nt >= 2 {
            let (ux, uxx, ut) = match (&g.ux, &g.uxx, &g.ut) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(Error::InvalidInput("history grid needs derivative companions".into())),
            };
            let xw = trapezoid_weights(g.nx, g.dx());
            let last = g.nt - 1;
            for m in 0..g.nt {
                let tau = g.t(m);
                let s = t - tau;
                if s <= 0.0 {
                    continue;
                }
                let p = cache.get(s, params)?;
                let wt = if m == 0 || m == last { 0.5 * g.dt } else { g.dt };
                let mut inner = 0.0;
                for j in 1..g.nx - 1 {
                    let k = m * g.nx + j;
                    let xi = g.x(j);
                    let f = spec.f(xi, tau, g.u[k], ux[k], uxx[k], ut[k]);
                    inner += xw[j] * p.w(x, xi) * f;
                }
                hist += wt * inner;
            }
        }
    }
    Ok(data + boundary + hist)
}
