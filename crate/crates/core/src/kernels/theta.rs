use serde::{Deserialize, Serialize};

use super::fundamental::{fundamental_k, fundamental_k_t};
use super::{KernelEval, KernelParams};
use crate::error::{Error, Result};

/// Reduced argument r in [0, 1] and the sign picked up by odd x-derivatives.
///
/// theta is even and 2-periodic, and symmetric about x = 1, so every
/// argument maps to [0, 1].
pub fn reduce_argument(x: f64) -> (f64, f64) {
    let s1 = if x < 0.0 { -1.0 } else { 1.0 };
    let y = x.abs().rem_euclid(2.0);
    if y > 1.0 {
        (2.0 - y, -s1)
    } else {
        (y, s1)
    }
}

fn image_sum<F>(r: f64, p: &KernelParams, mut k: F) -> Result<KernelEval>
where
    F: FnMut(f64) -> Result<KernelEval>,
{
    let first = k(r)?;
    let mut value = first.value;
    let mut err = first.est_error;
    let mut converged = false;
    for m in 1..=p.series_terms {
        let two_m = 2.0 * m as f64;
        let a = k(two_m + r)?;
        let b = k(two_m - r)?;
        let term = a.value + b.value;
        value += term;
        err += a.est_error + b.est_error;
        if term.abs() <= 1e-17 * value.abs() {
            err += term.abs();
            converged = true;
            break;
        }
    }
    if !converged {
        // a posteriori tail from the next (largest) omitted image
        let next = k(2.0 * (p.series_terms + 1) as f64 - r)?;
        err += 2.0 * next.value.abs() + next.est_error;
    }
    Ok(KernelEval {
        value,
        est_error: err,
    })
}

pub fn theta(x: f64, t: f64, p: &KernelParams) -> Result<KernelEval> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("theta needs t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(KernelEval::exact(0.0));
    }
    let (r, _) = reduce_argument(x);
    image_sum(r, p, |y| fundamental_k(y, t, p))
}

/// Time derivative of theta from the exact derivative of K.
pub fn theta_t(x: f64, t: f64, p: &KernelParams) -> Result<KernelEval> {
    let (r, _) = reduce_argument(x);
    image_sum(r, p, |y| fundamental_k_t(y, t, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    T,
    X,
    XX,
}

/// Richardson tableau over step halving; `powers[j]` is the error order
/// eliminated at column j.
fn richardson<F>(mut est: F, h0: f64, powers: &[i32], tol: f64) -> Result<KernelEval>
where
    F: FnMut(f64) -> Result<f64>,
{
    let levels = powers.len() + 1;
    let mut prev: Vec<f64> = Vec::new();
    let mut best = KernelEval {
        value: f64::NAN,
        est_error: f64::INFINITY,
    };
    let mut last_diag = f64::NAN;
    for k in 0..levels {
        let h = h0 / 2f64.powi(k as i32);
        let mut row = vec![est(h)?];
        for j in 1..=k {
            let f = 2f64.powi(powers[j - 1]) - 1.0;
            let v = row[j - 1] + (row[j - 1] - prev[j - 1]) / f;
            row.push(v);
        }
        let diag = row[k];
        if k > 0 {
            let e = (diag - last_diag).abs();
            if e < best.est_error {
                best = KernelEval {
                    value: diag,
                    est_error: e,
                };
            }
            if e <= tol {
                break;
            }
        }
        last_diag = diag;
        prev = row;
    }
    Ok(best)
}

/// Derivative of order 1 or 2 of theta in x, by Richardson extrapolation.
/// At the kink (reduced argument 0) the first derivative is reported as
/// the mean of the one-sided limits (zero) and the second derivative as
/// its one-sided limit, i.e. the point mass is excluded.
pub fn theta_derivative(x: f64, t: f64, order: u8, p: &KernelParams) -> Result<KernelEval> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "theta derivatives need t > 0, got {t}"
        )));
    }
    let (r, sign) = reduce_argument(x);
    let th = |y: f64| -> Result<f64> { Ok(theta(y, t, p)?.value) };
    let scale = (p.epsilon * t).sqrt().min(1.0);
    let tol = 1e-9;
    let powers_even = [2, 4, 6, 8];
    let powers_all = [2, 3, 4, 5];
    let out = if r > 2e-3 {
        let h0 = (0.1 * scale).min(0.5 * r).min(0.05);
        match order {
            1 => richardson(
                |h| Ok((th(r + h)? - th(r - h)?) / (2.0 * h)),
                h0,
                &powers_even,
                tol,
            )?,
            2 => {
                let f0 = th(r)?;
                richardson(
                    |h| Ok((th(r + h)? - 2.0 * f0 + th(r - h)?) / (h * h)),
                    h0,
                    &powers_even,
                    tol,
                )?
            }
            _ => return Err(Error::InvalidInput("order must be 1 or 2".into())),
        }
    } else {
        if order == 1 && r == 0.0 {
            return Ok(KernelEval::exact(0.0));
        }
        let h0 = (0.05 * scale).min(0.02);
        let f0 = th(r)?;
        match order {
            1 => richardson(
                |h| Ok((-3.0 * f0 + 4.0 * th(r + h)? - th(r + 2.0 * h)?) / (2.0 * h)),
                h0,
                &powers_all,
                tol,
            )?,
            2 => richardson(
                |h| {
                    Ok((2.0 * f0 - 5.0 * th(r + h)? + 4.0 * th(r + 2.0 * h)? - th(r + 3.0 * h)?)
                        / (h * h))
                },
                h0,
                &powers_all,
                tol,
            )?,
            _ => return Err(Error::InvalidInput("order must be 1 or 2".into())),
        }
    };
    let fail = 1e-5 * (1.0 + out.value.abs());
    if !(out.est_error <= fail) {
        return Err(Error::Extrapolation {
            err: out.est_error,
            tol: fail,
        });
    }
    let value = if order == 1 { sign * out.value } else { out.value };
    Ok(KernelEval {
        value,
        est_error: out.est_error,
    })
}

pub fn green_w(x: f64, xi: f64, s: f64, p: &KernelParams) -> Result<KernelEval> {
    let a = theta(x - xi, s, p)?;
    let b = theta(x + xi, s, p)?;
    Ok(KernelEval {
        value: a.value - b.value,
        est_error: a.est_error + b.est_error,
    })
}

/// Pointwise derivatives of w. The time derivative uses the exact
/// derivative of K; x-derivatives use Richardson extrapolation on theta.
pub fn green_w_derivatives(
    x: f64,
    xi: f64,
    s: f64,
    p: &KernelParams,
    which: Which,
) -> Result<KernelEval> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!(
            "w derivatives need s > 0, got {s}"
        )));
    }
    let (a, b) = match which {
        Which::T => (theta_t(x - xi, s, p)?, theta_t(x + xi, s, p)?),
        Which::X => (
            theta_derivative(x - xi, s, 1, p)?,
            theta_derivative(x + xi, s, 1, p)?,
        ),
        Which::XX => (
            theta_derivative(x - xi, s, 2, p)?,
            theta_derivative(x + xi, s, 2, p)?,
        ),
    };
    Ok(KernelEval {
        value: a.value - b.value,
        est_error: a.est_error + b.est_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> KernelParams {
        KernelParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn reduction_is_exact_for_dyadic_shifts() {
        for &x in &[0.25, 0.5, 0.375, 1.25, 1.75] {
            assert_eq!(reduce_argument(x).0, reduce_argument(-x).0);
            assert_eq!(reduce_argument(x).0, reduce_argument(x + 2.0).0);
            assert_eq!(reduce_argument(x).0, reduce_argument(x - 4.0).0);
        }
        assert_eq!(reduce_argument(1.5), (0.5, -1.0));
        assert_eq!(reduce_argument(-0.5), (0.5, -1.0));
    }

    #[test]
    fn theta_vanishes_at_time_zero() {
        assert_eq!(theta(0.3, 0.0, &unit()).unwrap().value, 0.0);
    }

    #[test]
    fn w_vanishes_on_the_boundary_of_xi() {
        let p = unit();
        assert_eq!(green_w(0.4, 0.0, 0.3, &p).unwrap().value, 0.0);
        assert_eq!(green_w(0.4, 0.2, 0.0, &p).unwrap().value, 0.0);
    }

    #[test]
    fn kink_slope_matches_point_mass() {
        let p = unit();
        let s = 0.4;
        let d = theta_derivative(1e-4, s, 1, &p).unwrap().value;
        let expect = -0.5 * p.delta_mass(s);
        assert!((d - expect).abs() < 1e-3, "{d} vs {expect}");
    }
}
