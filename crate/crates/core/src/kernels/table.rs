use rayon::prelude::*;

use super::profile::{ProfileCache, ThetaProfile};
use super::KernelParams;
use crate::error::{Error, Result};

/// Samples of theta and its derivatives on a uniform (x, s) lattice:
/// x_k = k dx for k in 0..nx, s_n = n dt for n in 0..=nt. Grid offsets
/// outside [0, 1] are folded back by evenness and 2-periodicity.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub params: KernelParams,
    pub nx: usize,
    pub dt: f64,
    pub nt: usize,
    th: Vec<f64>,
    th_x: Vec<f64>,
    th_xx: Vec<f64>,
    th_t: Vec<f64>,
    th_tx: Vec<f64>,
    th_txx: Vec<f64>,
    mass: Vec<f64>,
    pub max_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    W,
    Wx,
    Wxx,
    Wt,
    Wtx,
    Wtxx,
    Wtt,
}

impl KernelTable {
    pub fn build(params: &KernelParams, nx: usize, dt: f64, nt: usize) -> Result<Self> {
        params.validate()?;
        if nx < 3 || !(dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel table needs nx >= 3 and dt > 0, got nx = {nx}, dt = {dt}"
            )));
        }
        let dx = 1.0 / (nx - 1) as f64;
        let profiles: Vec<std::sync::Arc<ThetaProfile>> = (1..=nt)
            .into_par_iter()
            .map(|n| ProfileCache::global().get(n as f64 * dt, params))
            .collect::<Result<_>>()?;
        let len = (nt + 1) * nx;
        let mut t = KernelTable {
            params: *params,
            nx,
            dt,
            nt,
            th: vec![0.0; len],
            th_x: vec![0.0; len],
            th_xx: vec![0.0; len],
            th_t: vec![0.0; len],
            th_tx: vec![0.0; len],
            th_txx: vec![0.0; len],
            mass: vec![0.0; nt + 1],
            max_error: 0.0,
        };
        t.mass[0] = params.delta_mass(0.0);
        for (i, prof) in profiles.iter().enumerate() {
            let n = i + 1;
            t.mass[n] = prof.delta_mass();
            t.max_error = t.max_error.max(prof.sample_error + prof.interp_error[2]);
            for k in 0..nx {
                let x = k as f64 * dx;
                let at = n * nx + k;
                t.th[at] = prof.theta(x);
                t.th_x[at] = prof.theta_x(x);
                t.th_xx[at] = prof.theta_xx(x);
                t.th_t[at] = prof.theta_t(x);
                t.th_tx[at] = prof.theta_tx(x);
                t.th_txx[at] = prof.theta_txx(x);
            }
        }
        Ok(t)
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.nx - 1) as f64
    }

    /// Folds a signed grid offset into [0, nx-1]; the sign applies to odd x-derivatives.
    #[inline]
    pub fn fold(&self, y: isize) -> (usize, f64) {
        let l = (self.nx - 1) as isize;
        let s1 = if y < 0 { -1.0 } else { 1.0 };
        let r = y.abs() % (2 * l);
        if r > l {
            ((2 * l - r) as usize, -s1)
        } else {
            (r as usize, s1)
        }
    }

    /// Point-mass weight of w_xx at xi = x on level n.
    pub fn delta_mass(&self, n: usize) -> f64 {
        self.mass[n]
    }

    #[inline]
    fn theta_q(&self, q: Quantity, n: usize, y: isize) -> f64 {
        let (k, sign) = self.fold(y);
        let at = n * self.nx + k;
        let p = &self.params;
        match q {
            Quantity::W => self.th[at],
            Quantity::Wx => {
                if k == 0 {
                    0.0
                } else {
                    sign * self.th_x[at]
                }
            }
            Quantity::Wxx => self.th_xx[at],
            Quantity::Wt => self.th_t[at],
            Quantity::Wtx => sign * self.th_tx[at],
            Quantity::Wtxx => self.th_txx[at],
            Quantity::Wtt => p.epsilon * self.th_txx[at] + p.c * p.c * self.th_xx[at],
        }
    }

    /// w-quantity at (x_i, xi_j, s_n), classical part only.
    #[inline]
    pub fn w(&self, q: Quantity, i: usize, j: usize, n: usize) -> f64 {
        let (i, j) = (i as isize, j as isize);
        self.theta_q(q, n, i - j) - self.theta_q(q, n, i + j)
    }

    /// Dense nx-by-nx matrix of a w-quantity at level n (row = x index).
    pub fn matrix(&self, q: Quantity, n: usize) -> Vec<f64> {
        let nx = self.nx;
        let mut m = vec![0.0; nx * nx];
        for i in 0..nx {
            for j in 0..nx {
                m[i * nx + j] = self.w(q, i, j, n);
            }
        }
        m
    }

    /// theta-quantity for every offset y in [-(nx-1), 2(nx-1)], stored at
    /// index y + nx - 1, so that w(i, j) = ext[i - j + l] - ext[i + j + l].
    pub fn offsets(&self, q: Quantity, n: usize) -> Vec<f64> {
        let l = (self.nx - 1) as isize;
        (-l..=2 * l).map(|y| self.theta_q(q, n, y)).collect()
    }

    /// theta_x at an arbitrary grid offset, used by boundary-data integrals.
    pub fn theta_x_at(&self, n: usize, y: isize) -> f64 {
        self.theta_q(Quantity::Wx, n, y)
    }

    pub fn theta_tx_at(&self, n: usize, y: isize) -> f64 {
        self.theta_q(Quantity::Wtx, n, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_respects_symmetries() {
        let p = KernelParams::new(1.0, 1.0).unwrap();
        let t = KernelTable::build(&p, 11, 0.1, 2).unwrap();
        assert_eq!(t.fold(3), (3, 1.0));
        assert_eq!(t.fold(-3), (3, -1.0));
        assert_eq!(t.fold(13), (7, -1.0));
        assert_eq!(t.fold(20), (0, 1.0));
        // w vanishes for xi on the boundary
        for n in 0..=2 {
            assert!(t.w(Quantity::W, 4, 0, n).abs() < 1e-15);
            assert!(t.w(Quantity::W, 0, 4, n).abs() < 1e-15);
        }
    }
}
