use super::bessel::bessel_i0e;
use super::{KernelEval, KernelParams};
use crate::error::Result;
use crate::quad::{adaptive, QuadOptions};

/// Inner integral after the substitution that removes the square-root
/// singularity of the Bessel argument:
/// `int_{w0}^inf w exp(-w^2 + a) I0e(a) dw` with `a = (2c/eps) sqrt(2 w x sqrt(eps tau) - x^2)`.
/// Equals 1/2 at x = 0.
pub(crate) fn inner(x: f64, tau: f64, p: &KernelParams) -> Result<KernelEval> {
    if x == 0.0 {
        return Ok(KernelEval::exact(0.5));
    }
    if tau <= 0.0 {
        return Ok(KernelEval::exact(0.0));
    }
    let rt = (p.epsilon * tau).sqrt();
    let w0 = x / (2.0 * rt);
    let beta = 2.0 * p.c / p.epsilon;
    let kappa = 2.0 * x * rt;
    // exponent bound: -w^2 + beta sqrt(kappa w) <= -w^2/2 + 1.5 w*^2
    let wstar = (0.5 * beta * kappa.sqrt()).powf(2.0 / 3.0);
    if -0.5 * w0 * w0 + 1.5 * wstar * wstar < -745.0 {
        return Ok(KernelEval::exact(0.0));
    }
    let x2 = x * x;
    let f = |y: f64| -> f64 {
        if y >= 1.0 {
            return 0.0;
        }
        let u = y / (1.0 - y);
        let w = w0 + u;
        let a = beta * (kappa * w - x2).max(0.0).sqrt();
        let e = -w * w + a;
        if e < -745.0 {
            return 0.0;
        }
        w * e.exp() * bessel_i0e(a) / ((1.0 - y) * (1.0 - y))
    };
    let r = adaptive(f, 0.0, 1.0, QuadOptions::tol(1e-300, 0.1 * p.quad_tol))?;
    Ok(KernelEval {
        value: r.value,
        est_error: r.error,
    })
}

/// K(|x|, t): the double integral evaluated with tau = r^2 in the outer variable.
pub fn fundamental_k(x_abs: f64, t: f64, p: &KernelParams) -> Result<KernelEval> {
    p.validate()?;
    if !(t >= 0.0) || !(x_abs >= 0.0) {
        return Err(crate::error::Error::InvalidInput(format!(
            "fundamental_k needs x >= 0 and t >= 0, got ({x_abs}, {t})"
        )));
    }
    if t == 0.0 {
        return Ok(KernelEval::exact(0.0));
    }
    let pref = 2.0 / (std::f64::consts::PI * p.epsilon).sqrt();
    let decay = p.c * p.c / p.epsilon;
    let mut inner_err = 0.0f64;
    let mut failure = None;
    let f = |r: f64| -> f64 {
        let tau = r * r;
        match inner(x_abs, tau, p) {
            Ok(v) => {
                inner_err = inner_err.max(v.est_error);
                pref * (-decay * tau).exp() * v.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let r = adaptive(f, 0.0, t.sqrt(), QuadOptions::tol(1e-17, p.quad_tol))?;
    if let Some(e) = failure {
        return Err(e);
    }
    let sq = t.sqrt();
    Ok(KernelEval {
        value: r.value,
        est_error: r.error + pref * sq * inner_err,
    })
}

/// Exact time derivative of K: the outer integrand at tau = t.
pub fn fundamental_k_t(x_abs: f64, t: f64, p: &KernelParams) -> Result<KernelEval> {
    if !(t > 0.0) {
        return Err(crate::error::Error::InvalidInput(format!(
            "fundamental_k_t needs t > 0, got {t}"
        )));
    }
    let i = inner(x_abs, t, p)?;
    let pref = (-p.c * p.c * t / p.epsilon).exp() / (std::f64::consts::PI * p.epsilon * t).sqrt();
    Ok(KernelEval {
        value: pref * i.value,
        est_error: pref * i.est_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> KernelParams {
        KernelParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_time_is_zero() {
        assert_eq!(fundamental_k(0.7, 0.0, &unit()).unwrap().value, 0.0);
    }

    #[test]
    fn origin_value_has_closed_form() {
        // K(0, t) = erf(c sqrt(t/eps)) / (2c); with eps = c = 1, t = 1: erf(1)/2
        let k = fundamental_k(0.0, 1.0, &unit()).unwrap();
        assert!((k.value - 0.842_700_792_949_714_9 / 2.0).abs() < 1e-10);
    }

    #[test]
    fn inner_is_continuous_at_origin() {
        let p = unit();
        let a = inner(1e-9, 0.3, &p).unwrap().value;
        assert!((a - 0.5).abs() < 1e-7);
    }

    #[test]
    fn nonnegative_and_decaying() {
        let p = unit();
        let mut prev = f64::INFINITY;
        for &x in &[0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let k = fundamental_k(x, 1.0, &p).unwrap().value;
            assert!(k >= 0.0);
            assert!(k < prev);
            prev = k;
        }
    }

    #[test]
    fn time_derivative_matches_difference_quotient() {
        let p = unit();
        let h = 1e-4;
        let fd = (fundamental_k(0.4, 0.5 + h, &p).unwrap().value
            - fundamental_k(0.4, 0.5 - h, &p).unwrap().value)
            / (2.0 * h);
        let kt = fundamental_k_t(0.4, 0.5, &p).unwrap().value;
        assert!((fd - kt).abs() < 1e-6, "{fd} vs {kt}");
    }
}
