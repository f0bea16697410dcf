use serde::{Deserialize, Serialize};

use super::profile::{ProfileCache, ThetaProfile};
use super::theta::theta_t;
use super::{KernelEval, KernelParams};
use crate::error::{Error, Result};
use crate::quad::{adaptive_pieces, QuadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// bound - value; negative means the inequality fails before tolerance
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub x: f64,
    pub s: f64,
    pub checks: Vec<BoundCheck>,
    /// Mass of the point singularity of w_xx at xi = x.
    pub singular_mass: f64,
    /// Total variation of w_xx including the point mass (reported, not checked).
    pub int_abs_w_xx_with_mass: f64,
    /// Heat-operator integral without the point mass.
    pub int_abs_heat_smooth: f64,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check(name: &str, value: f64, bound: f64, tol: f64) -> BoundCheck {
    BoundCheck {
        name: name.to_string(),
        value,
        bound,
        margin: bound - value,
        tol,
        pass: value <= bound + tol,
    }
}

/// The five integrals over xi in [0, 1] against their stated bounds:
/// int|w| <= s, int|w_x| <= 1/c, int|w_t| <= 1, int|w_xx| <= (1 + 2c^2 s)/eps,
/// int|(d_t - d_xx) w| <= 1.
///
/// w_xx carries a point mass exp(-c^2 s/eps)/eps at xi = x. The w_xx check
/// uses the classical (off-diagonal) derivative; the heat-operator check
/// includes the point mass. Both variants are recorded in the report.
pub fn verify_kernel_bounds(x: f64, s: f64, params: &KernelParams) -> Result<BoundReport> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!(
            "verify_kernel_bounds needs s > 0, got {s}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!("x must lie in [0, 1], got {x}")));
    }
    let prof = ProfileCache::global().get(s, params)?;
    bounds_from_profile(&prof, x)
}

pub(crate) fn bounds_from_profile(prof: &ThetaProfile, x: f64) -> Result<BoundReport> {
    let p = &prof.params;
    let s = prof.s;
    let opts = QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        max_intervals: 20000,
    };
    let pieces = [0.0, x, 1.0];
    let q_w = adaptive_pieces(|xi| prof.w(x, xi).abs(), &pieces, opts)?;
    let q_wx = adaptive_pieces(|xi| prof.w_x(x, xi).abs(), &pieces, opts)?;
    let q_wt = adaptive_pieces(|xi| prof.w_t(x, xi).abs(), &pieces, opts)?;
    let q_wxx = adaptive_pieces(|xi| prof.w_xx(x, xi).abs(), &pieces, opts)?;
    let q_heat = adaptive_pieces(
        |xi| (prof.w_t(x, xi) - prof.w_xx(x, xi)).abs(),
        &pieces,
        opts,
    )?;
    let interior = x > 0.0 && x < 1.0;
    let mass = if interior { prof.delta_mass() } else { 0.0 };

    let n = prof.degree() as f64;
    let perr = |k: usize, t: bool| -> f64 {
        let interp = if t {
            prof.interp_error_t[k]
        } else {
            prof.interp_error[k]
        };
        2.0 * (interp + prof.sample_error * n.powi(2 * k as i32))
    };
    let tol = |q: f64, e: f64| (10.0 * (q + e)).max(1e-9);

    let checks = vec![
        check("int_abs_w", q_w.value, s, tol(q_w.error, perr(0, false))),
        check(
            "int_abs_w_x",
            q_wx.value,
            1.0 / p.c,
            tol(q_wx.error, perr(1, false)),
        ),
        check("int_abs_w_t", q_wt.value, 1.0, tol(q_wt.error, perr(0, true))),
        check(
            "int_abs_w_xx",
            q_wxx.value,
            (1.0 + 2.0 * p.c * p.c * s) / p.epsilon,
            tol(q_wxx.error, perr(2, false)),
        ),
        check(
            "int_abs_heat_w",
            q_heat.value + mass,
            1.0,
            tol(q_heat.error, perr(2, false) + perr(0, true)),
        ),
    ];
    Ok(BoundReport {
        x,
        s,
        checks,
        singular_mass: mass,
        int_abs_w_xx_with_mass: q_wxx.value + mass,
        int_abs_heat_smooth: q_heat.value,
    })
}

/// Residual of the kernel equation, -eps theta_xxt - c^2 theta_xx + theta_tt,
/// at an interior point. Spatial derivatives come from the Chebyshev profile;
/// theta_tt is a Richardson difference quotient of theta_t in time.
pub fn ltheta_residual(x: f64, t: f64, params: &KernelParams) -> Result<KernelEval> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let prof = ProfileCache::global().get(t, params)?;
    let h0 = (0.2 * t).min(0.05);
    let d = |h: f64| -> Result<f64> {
        Ok((theta_t(x, t + h, params)?.value - theta_t(x, t - h, params)?.value) / (2.0 * h))
    };
    let a0 = d(h0)?;
    let a1 = d(0.5 * h0)?;
    let a2 = d(0.25 * h0)?;
    let r1 = a1 + (a1 - a0) / 3.0;
    let r2 = a2 + (a2 - a1) / 3.0;
    let tt = r2 + (r2 - r1) / 15.0;
    let tt_err = (tt - r2).abs();
    let res = -params.epsilon * prof.theta_txx(x) - params.c * params.c * prof.theta_xx(x) + tt;
    Ok(KernelEval {
        value: res,
        est_error: tt_err + prof.interp_error[2] + prof.interp_error_t[2],
    })
}
