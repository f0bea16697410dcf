//! Triangular spike forcing: b^2(t) is a train of isosceles triangles
//! centred at t = n, with base n^-alpha and apex 2 b0^2 n^beta.

use serde::{Deserialize, Serialize};

use crate::comparison::{AveragedHypotheses, ScalarForcing};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeFamily {
    pub b0_sq: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SpikeFamily {
    pub fn new(b0_sq: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(b0_sq > 0.0) {
            return Err(Error::InvalidInput(format!("b0^2 must be positive, got {b0_sq}")));
        }
        // base 1/n^alpha <= 1 keeps consecutive triangles apart
        if !(alpha >= 1.0) {
            return Err(Error::InvalidInput(format!("alpha must be >= 1, got {alpha}")));
        }
        if !(beta > alpha - 1.0 && beta <= alpha) {
            return Err(Error::InvalidInput(format!(
                "beta must lie in (alpha - 1, alpha], got {beta}"
            )));
        }
        Ok(SpikeFamily { b0_sq, alpha, beta })
    }

    /// alpha - beta, in [0, 1).
    pub fn gamma_ex(&self) -> f64 {
        self.alpha - self.beta
    }

    pub fn half_base(&self, n: usize) -> f64 {
        0.5 / (n as f64).powf(self.alpha)
    }

    /// Area of triangle n.
    pub fn area(&self, n: usize) -> f64 {
        self.b0_sq / (n as f64).powf(self.gamma_ex())
    }

    fn slope(&self, n: usize) -> f64 {
        4.0 * self.b0_sq * (n as f64).powf(self.alpha + self.beta)
    }

    /// Integral of triangle n over (-inf, t].
    fn partial(&self, n: usize, t: f64) -> f64 {
        let nf = n as f64;
        let w = self.half_base(n);
        if t <= nf - w {
            0.0
        } else if t <= nf {
            0.5 * self.slope(n) * (t - nf + w).powi(2)
        } else if t < nf + w {
            self.area(n) - 0.5 * self.slope(n) * (nf + w - t).powi(2)
        } else {
            self.area(n)
        }
    }

    /// Feet and apexes inside (a, b).
    pub fn knots(&self, a: f64, b: f64) -> Vec<f64> {
        let lo = (a.floor() as i64 - 1).max(1) as usize;
        let hi = (b.ceil() as i64 + 1).max(1) as usize;
        let mut v = Vec::new();
        for n in lo..=hi {
            let w = self.half_base(n);
            for x in [n as f64 - w, n as f64, n as f64 + w] {
                if x > a && x < b {
                    v.push(x);
                }
            }
        }
        v
    }

    pub fn forcing(&self) -> ScalarForcing {
        let (a, b, c) = (*self, *self, *self);
        ScalarForcing::new(
            format!("spike(b0^2={}, alpha={}, beta={})", self.b0_sq, self.alpha, self.beta),
            move |t| spike_value(t, &a),
        )
        .with_integral(move |t0, t| spike_integral(t0, t, &b))
        .with_knots(move |lo, hi| c.knots(lo, hi))
    }
}

pub fn spike_value(t: f64, fam: &SpikeFamily) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let n = t.round().max(1.0) as usize;
    let nf = n as f64;
    let w = fam.half_base(n);
    let s = fam.slope(n);
    if t >= nf - w && t <= nf {
        s * (t - nf + w)
    } else if t > nf && t <= nf + w {
        s * (nf + w - t)
    } else {
        0.0
    }
}

/// int_0^t b^2 in closed form.
fn cumulative(t: f64, fam: &SpikeFamily) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    // triangles up to n_full - 1 are complete once t >= n + half base, and
    // half base <= 1/2 so everything below round(t) is finished
    let n_cur = t.round().max(1.0) as usize;
    let mut s: f64 = (1..n_cur).map(|k| fam.area(k)).sum();
    s += fam.partial(n_cur, t);
    s + fam.partial(n_cur + 1, t)
}

pub fn spike_integral(t0: f64, t: f64, fam: &SpikeFamily) -> f64 {
    cumulative(t, fam) - cumulative(t0, fam)
}

/// sigma = b0^2 (2 + 2^{1-g}/(1-g)) for the averaged condition.
pub fn spike_sigma(fam: &SpikeFamily) -> f64 {
    let one_g = 1.0 - fam.gamma_ex();
    fam.b0_sq * (2.0 + 2f64.powf(one_g) / one_g)
}

/// q = b0^2/(1-g), chi = kappa = 1-g, M = 9 b0^2 / (2(1-g)), g1 = g2 = 0.
pub fn spike_hypothesis_constants(fam: &SpikeFamily, p: f64) -> Result<AveragedHypotheses> {
    if !(fam.b0_sq < p) {
        return Err(Error::Hypothesis(format!(
            "spike forcing needs b0^2 < p, got b0^2 = {} and p = {p}",
            fam.b0_sq
        )));
    }
    let one_g = 1.0 - fam.gamma_ex();
    let q = fam.b0_sq / one_g;
    let m = 9.0 * fam.b0_sq / (2.0 * one_g);
    let hyp = AveragedHypotheses::new(fam.forcing(), p)
        .with_sigma(spike_sigma(fam))
        .with_growth(one_g, one_g, q, m);
    hyp.validate()?;
    Ok(hyp)
}

/// Lower and upper bounds on int_{t0}^t b^2 for t in (n-1/2, n+1/2],
/// t0 in (m-1/2, m+1/2], m <= n-2.
pub fn spike_bracket(fam: &SpikeFamily, m: usize, n: usize) -> (f64, f64) {
    let one_g = 1.0 - fam.gamma_ex();
    let e = |k: f64| k.powf(one_g);
    let lower = fam.b0_sq * (e(n as f64) - e(m as f64 + 1.0)) / one_g;
    let upper_tail = if m == 0 { 0.0 } else { e(m as f64 - 1.0) };
    let upper = fam.b0_sq * (e(n as f64) - upper_tail) / one_g;
    (lower, upper)
}

/// Remainder bound b0^2 2^{1-g}/(1-g).
pub fn spike_remainder_bound(fam: &SpikeFamily) -> f64 {
    let one_g = 1.0 - fam.gamma_ex();
    fam.b0_sq * 2f64.powf(one_g) / one_g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlapping_or_bad_families() {
        assert!(SpikeFamily::new(0.2, 0.5, 0.4).is_err());
        assert!(SpikeFamily::new(0.2, 1.0, 0.0).is_err());
        assert!(SpikeFamily::new(0.2, 1.0, 1.1).is_err());
        assert!(SpikeFamily::new(0.0, 1.0, 1.0).is_err());
    }
}
