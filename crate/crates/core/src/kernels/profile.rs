use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;

use super::theta::{reduce_argument, theta, theta_t};
use super::{KernelEval, KernelParams};
use crate::cheb::{lobatto_points, Cheb};
use crate::error::{Error, Result};

const MIN_DEGREE: usize = 32;
const MAX_DEGREE: usize = 1024;

/// Chebyshev interpolants of theta(., s) and theta_t(., s) on the reduced
/// interval [0, 1], where both are smooth up to the end points. Spatial
/// derivatives come from differentiating the interpolants.
#[derive(Debug, Clone)]
pub struct ThetaProfile {
    pub s: f64,
    pub params: KernelParams,
    th: [Cheb; 3],
    tt: [Cheb; 3],
    /// max pointwise error estimate of the theta samples
    pub sample_error: f64,
    /// interpolation error proxies for (value, d/dx, d2/dx2), from coefficient tails
    pub interp_error: [f64; 3],
    pub interp_error_t: [f64; 3],
}

fn build_cheb<F>(f: F, tol: f64) -> Result<(Cheb, f64)>
where
    F: Fn(f64) -> Result<KernelEval> + Sync,
{
    let mut n = MIN_DEGREE;
    let pts = lobatto_points(n, 0.0, 1.0);
    let evals: Vec<KernelEval> = pts.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let mut vals: Vec<f64> = evals.iter().map(|e| e.value).collect();
    let mut err = evals.iter().fold(0.0f64, |m, e| m.max(e.est_error));
    loop {
        let c = Cheb::from_values(&vals, 0.0, 1.0);
        if c.tail_ratio() < tol || n >= MAX_DEGREE {
            return Ok((c, err));
        }
        // doubling keeps the old nodes at even indices
        let m = 2 * n;
        let pts = lobatto_points(m, 0.0, 1.0);
        let odd: Vec<KernelEval> = (0..n)
            .into_par_iter()
            .map(|j| f(pts[2 * j + 1]))
            .collect::<Result<_>>()?;
        let mut next = vec![0.0; m + 1];
        for j in 0..=n {
            next[2 * j] = vals[j];
        }
        for (j, e) in odd.iter().enumerate() {
            next[2 * j + 1] = e.value;
            err = err.max(e.est_error);
        }
        vals = next;
        n = m;
    }
}

fn tail_abs(c: &Cheb) -> f64 {
    let k = c.coefficients();
    let n = k.len();
    k[n.saturating_sub(3)..].iter().map(|v| v.abs()).sum()
}

impl ThetaProfile {
    pub fn build(s: f64, params: &KernelParams) -> Result<Self> {
        params.validate()?;
        if !(s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "theta profile needs s > 0, got {s}"
            )));
        }
        let p = *params;
        let (c0, e0) = build_cheb(|r| theta(r, s, &p), 1e-14)?;
        let (t0, e1) = build_cheb(|r| theta_t(r, s, &p), 1e-14)?;
        let c1 = c0.derivative();
        let c2 = c1.derivative();
        let t1 = t0.derivative();
        let t2 = t1.derivative();
        let interp_error = [tail_abs(&c0), tail_abs(&c1), tail_abs(&c2)];
        let interp_error_t = [tail_abs(&t0), tail_abs(&t1), tail_abs(&t2)];
        Ok(ThetaProfile {
            s,
            params: p,
            th: [c0, c1, c2],
            tt: [t0, t1, t2],
            sample_error: e0.max(e1),
            interp_error,
            interp_error_t,
        })
    }

    pub fn degree(&self) -> usize {
        self.th[0].degree().max(self.tt[0].degree())
    }

    fn eval(set: &[Cheb; 3], x: f64, order: usize) -> f64 {
        let (r, sign) = reduce_argument(x);
        match order {
            0 => set[0].eval(r),
            1 => {
                if r == 0.0 {
                    // mean of the one-sided limits at the kink
                    0.0
                } else {
                    sign * set[1].eval(r)
                }
            }
            _ => set[2].eval(r),
        }
    }

    pub fn theta(&self, x: f64) -> f64 {
        Self::eval(&self.th, x, 0)
    }
    pub fn theta_x(&self, x: f64) -> f64 {
        Self::eval(&self.th, x, 1)
    }
    /// Classical second derivative; the point mass at the kink is not included.
    pub fn theta_xx(&self, x: f64) -> f64 {
        Self::eval(&self.th, x, 2)
    }
    pub fn theta_t(&self, x: f64) -> f64 {
        Self::eval(&self.tt, x, 0)
    }
    pub fn theta_tx(&self, x: f64) -> f64 {
        let (r, sign) = reduce_argument(x);
        sign * self.tt[1].eval(r)
    }
    pub fn theta_txx(&self, x: f64) -> f64 {
        Self::eval(&self.tt, x, 2)
    }
    /// theta_tt from the kernel equation; the point masses cancel here.
    pub fn theta_tt(&self, x: f64) -> f64 {
        let p = &self.params;
        p.epsilon * self.theta_txx(x) + p.c * p.c * self.theta_xx(x)
    }
    /// One-sided slope at the origin (right limit).
    pub fn kink_slope(&self) -> f64 {
        self.th[1].eval(0.0)
    }

    pub fn delta_mass(&self) -> f64 {
        self.params.delta_mass(self.s)
    }

    pub fn w(&self, x: f64, xi: f64) -> f64 {
        self.theta(x - xi) - self.theta(x + xi)
    }
    pub fn w_x(&self, x: f64, xi: f64) -> f64 {
        self.theta_x(x - xi) - self.theta_x(x + xi)
    }
    pub fn w_xx(&self, x: f64, xi: f64) -> f64 {
        self.theta_xx(x - xi) - self.theta_xx(x + xi)
    }
    pub fn w_t(&self, x: f64, xi: f64) -> f64 {
        self.theta_t(x - xi) - self.theta_t(x + xi)
    }
}

type Key = (u64, u64, u64, usize, u64);

/// Times are keyed on a 1e-12 lattice so that 0.02 * k and 0.01 * 2k share
/// an entry; the stored profile then differs from the request by rounding only.
fn key(s: f64, p: &KernelParams) -> Key {
    (
        (s * 1e12).round() as u64,
        p.epsilon.to_bits(),
        p.c.to_bits(),
        p.series_terms,
        p.quad_tol.to_bits(),
    )
}

/// Memoization of profiles, shared across threads (concurrent reads,
/// exclusive writes).
#[derive(Debug, Default)]
pub struct ProfileCache {
    map: RwLock<HashMap<Key, Arc<ThetaProfile>>>,
}

impl ProfileCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn global() -> &'static ProfileCache {
        static CACHE: OnceLock<ProfileCache> = OnceLock::new();
        CACHE.get_or_init(ProfileCache::new)
    }

    pub fn get(&self, s: f64, p: &KernelParams) -> Result<Arc<ThetaProfile>> {
        let k = key(s, p);
        if let Some(v) = self.map.read().expect("cache lock poisoned").get(&k) {
            return Ok(v.clone());
        }
        let prof = Arc::new(ThetaProfile::build(s, p)?);
        self.map
            .write()
            .expect("cache lock poisoned")
            .entry(k)
            .or_insert(prof.clone());
        Ok(prof)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.write().expect("cache lock poisoned").clear();
    }
}

pub fn profile_cache_clear() {
    ProfileCache::global().clear();
}
