//! Distances, Liapunov functionals and the stability constants.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::core_model::StatePair;
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

const PI2: f64 = PI * PI;
const PI4: f64 = PI2 * PI2;

pub fn omega1() -> f64 {
    PI4 / (1.0 + PI4)
}
pub fn omega2() -> f64 {
    PI4 / (1.0 + PI2 + PI4)
}
pub fn omega3() -> f64 {
    PI2 / (1.0 + PI2)
}

pub fn c2_sq(epsilon: f64, gamma: f64) -> f64 {
    (epsilon * (1.0 + epsilon) / 2.0).max((1.0 + epsilon + gamma) / 2.0)
}

pub fn c1_sq(epsilon: f64, gamma: f64) -> f64 {
    (epsilon * epsilon * omega1() / 8.0).min(0.5 * (gamma - 0.5))
}

pub fn k1_sq(epsilon: f64, gamma: f64) -> f64 {
    (epsilon * epsilon * omega3() / 8.0).min((2.0 * gamma - 1.0) / 4.0)
}

pub fn k3_sq(epsilon: f64, k_bound: f64, lambda_split: f64) -> f64 {
    (3.0 * epsilon * (1.0 - lambda_split) * omega1() / 4.0)
        .min(epsilon * (3.0 * lambda_split * PI2 / 4.0 - k_bound))
        .min(1.0)
}

pub fn k1p_sq(epsilon: f64, gamma: f64) -> f64 {
    0.5 * (gamma - 0.5).min(epsilon * epsilon / 4.0).min((1.0 + gamma) * omega3())
}

pub fn k3p_sq(epsilon: f64) -> f64 {
    (epsilon * omega2() / 4.0).min(1.0)
}

/// The split that equalizes the first two entries of k3^2, which is where
/// their minimum is largest.
pub fn balanced_lambda_split(k_bound: f64) -> f64 {
    let a = 3.0 * omega1() / 4.0;
    (a + k_bound) / (a + 3.0 * PI2 / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub epsilon: f64,
    pub gamma: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub c1_sq: f64,
    pub c2_sq: f64,
    pub c3_sq: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub p: f64,
    pub k1_sq: f64,
    pub k3_sq: f64,
    pub k1p_sq: f64,
    pub k3p_sq: f64,
    pub lambda_split: f64,
    #[serde(rename = "K_bound")]
    pub k_bound: f64,
}

/// All constants for one (eps, gamma); `lambda_split` defaults to the
/// balanced split for the given K.
pub fn compute_constants(
    epsilon: f64,
    gamma: f64,
    k_bound: f64,
    lambda_split: Option<f64>,
) -> Result<ConstantsBundle> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(gamma > 0.5) {
        return Err(Error::InvalidInput(format!("gamma must exceed 1/2, got {gamma}")));
    }
    if !(k_bound < 3.0 * PI2 / 4.0) {
        return Err(Error::Hypothesis(format!(
            "K = {k_bound} must stay below 3 pi^2 / 4"
        )));
    }
    let lambda = lambda_split.unwrap_or_else(|| balanced_lambda_split(k_bound));
    if !(lambda > 0.0 && lambda < 1.0) || !(3.0 * lambda * PI2 / 4.0 > k_bound) {
        return Err(Error::Hypothesis(format!(
            "split lambda = {lambda} needs 0 < lambda < 1 and 3 lambda pi^2 / 4 > K = {k_bound}"
        )));
    }
    let c2 = c2_sq(epsilon, gamma);
    let c3 = omega2() * epsilon / 2.0;
    Ok(ConstantsBundle {
        epsilon,
        gamma,
        omega1: omega1(),
        omega2: omega2(),
        omega3: omega3(),
        c1_sq: c1_sq(epsilon, gamma),
        c2_sq: c2,
        c3_sq: c3,
        a: epsilon / 2.0 + 2.0 / epsilon,
        p: c3 / c2,
        k1_sq: k1_sq(epsilon, gamma),
        k3_sq: k3_sq(epsilon, k_bound, lambda),
        k1p_sq: k1p_sq(epsilon, gamma),
        k3p_sq: k3p_sq(epsilon),
        lambda_split: lambda,
        k_bound,
    })
}

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A potential F with F(0) = 0, optionally with its derivative and the
/// antiderivative int_0^u F.
#[derive(Clone)]
pub struct PotentialSpec {
    pub name: String,
    f: Scalar,
    f_prime: Option<Scalar>,
    antiderivative: Option<Scalar>,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("name", &self.name)
            .field("analytic_derivative", &self.f_prime.is_some())
            .field("analytic_antiderivative", &self.antiderivative.is_some())
            .finish()
    }
}

impl PotentialSpec {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let p = PotentialSpec {
            name: name.into(),
            f: Arc::new(f),
            f_prime: None,
            antiderivative: None,
        };
        p.check()?;
        Ok(p)
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.f_prime = Some(Arc::new(d));
        self
    }

    pub fn with_antiderivative(mut self, a: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.antiderivative = Some(Arc::new(a));
        self
    }

    fn check(&self) -> Result<()> {
        let f0 = (self.f)(0.0);
        if f0.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("potential must vanish at 0, F(0) = {f0}")));
        }
        Ok(())
    }

    pub fn zero() -> Self {
        PotentialSpec {
            name: "zero".into(),
            f: Arc::new(|_| 0.0),
            f_prime: Some(Arc::new(|_| 0.0)),
            antiderivative: Some(Arc::new(|_| 0.0)),
        }
    }

    /// F(u) = k u.
    pub fn linear(k: f64) -> Self {
        PotentialSpec {
            name: format!("linear({k})"),
            f: Arc::new(move |u| k * u),
            f_prime: Some(Arc::new(move |_| k)),
            antiderivative: Some(Arc::new(move |u| 0.5 * k * u * u)),
        }
    }

    /// F(u) = -b sin u.
    pub fn sine_gordon(b: f64) -> Self {
        PotentialSpec {
            name: format!("sine_gordon({b})"),
            f: Arc::new(move |u: f64| -b * u.sin()),
            f_prime: Some(Arc::new(move |u: f64| -b * u.cos())),
            antiderivative: Some(Arc::new(move |u: f64| b * (u.cos() - 1.0))),
        }
    }

    /// F(u) = -sign(u) |u|^tau, a non-analytic restoring force.
    pub fn root(tau: f64) -> Self {
        PotentialSpec {
            name: format!("root({tau})"),
            f: Arc::new(move |u: f64| -u.signum() * u.abs().powf(tau)),
            f_prime: Some(Arc::new(move |u: f64| -tau * u.abs().powf(tau - 1.0))),
            antiderivative: Some(Arc::new(move |u: f64| -u.abs().powf(tau + 1.0) / (tau + 1.0))),
        }
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        match &self.f_prime {
            Some(d) => d(u),
            None => {
                let h = 1e-6 * (1.0 + u.abs());
                ((self.f)(u + h) - (self.f)(u - h)) / (2.0 * h)
            }
        }
    }

    /// int_0^u F(z) dz.
    pub fn integral(&self, u: f64) -> f64 {
        match &self.antiderivative {
            Some(a) => a(u),
            None => {
                // composite 10-point Gauss-Legendre, one panel per unit length
                let gl = GaussLegendre::new(10);
                let panels = (u.abs().ceil() as usize).max(1);
                let h = u / panels as f64;
                let mut f = |z: f64| (self.f)(z);
                (0..panels)
                    .map(|k| gl.integrate(&mut f, k as f64 * h, (k + 1) as f64 * h))
                    .sum()
            }
        }
    }
}

fn trap(values: impl Iterator<Item = f64>, n: usize, dx: f64) -> f64 {
    let mut s = 0.0;
    for (i, v) in values.enumerate() {
        s += if i == 0 || i == n - 1 { 0.5 * v } else { v };
    }
    s * dx
}

pub fn distance_d_sq(s: &StatePair) -> f64 {
    let n = s.len();
    trap(
        (0..n).map(|i| {
            s.phi[i] * s.phi[i] + s.phi_x[i] * s.phi_x[i] + s.phi_xx[i] * s.phi_xx[i] + s.psi[i] * s.psi[i]
        }),
        n,
        s.dx(),
    )
}

pub fn distance_d(s: &StatePair) -> f64 {
    distance_d_sq(s).sqrt()
}

pub fn distance_d1(s: &StatePair) -> f64 {
    let n = s.len();
    trap(
        (0..n).map(|i| s.phi[i] * s.phi[i] + s.phi_x[i] * s.phi_x[i] + s.psi[i] * s.psi[i]),
        n,
        s.dx(),
    )
    .sqrt()
}

pub fn lyapunov_v(s: &StatePair, gamma: f64, epsilon: f64) -> f64 {
    let n = s.len();
    0.5 * trap(
        (0..n).map(|i| {
            let a = epsilon * s.phi_xx[i] - s.psi[i];
            a * a + gamma * s.psi[i] * s.psi[i] + (1.0 + gamma) * s.phi_x[i] * s.phi_x[i]
        }),
        n,
        s.dx(),
    )
}

fn potential_energy(s: &StatePair, pot: &PotentialSpec) -> f64 {
    let n = s.len();
    trap((0..n).map(|i| pot.integral(s.phi[i])), n, s.dx())
}

pub fn lyapunov_w(s: &StatePair, gamma: f64, epsilon: f64, pot: &PotentialSpec) -> f64 {
    lyapunov_v(s, gamma, epsilon) - (1.0 + gamma) * potential_energy(s, pot)
}

pub fn hamiltonian_v(s: &StatePair, pot: &PotentialSpec) -> f64 {
    let n = s.len();
    0.5 * trap(
        (0..n).map(|i| s.psi[i] * s.psi[i] + s.phi_x[i] * s.phi_x[i]),
        n,
        s.dx(),
    ) - potential_energy(s, pot)
}

/// (int phi_x^2 / int phi^2, int phi_xx^2 / int phi_x^2).
pub fn poincare_check(s: &StatePair) -> Result<(f64, f64)> {
    let n = s.len();
    let dx = s.dx();
    if s.phi[0].abs() > 1e-12 || s.phi[n - 1].abs() > 1e-12 {
        return Err(Error::InvalidInput("phi must vanish at both end points".into()));
    }
    let i0 = trap(s.phi.iter().map(|v| v * v), n, dx);
    let i1 = trap(s.phi_x.iter().map(|v| v * v), n, dx);
    let i2 = trap(s.phi_xx.iter().map(|v| v * v), n, dx);
    if i0 <= f64::MIN_POSITIVE || i1 <= f64::MIN_POSITIVE {
        return Err(Error::InvalidInput("degenerate state: zero denominator".into()));
    }
    Ok((i1 / i0, i2 / i1))
}

/// Samples per unit length when scanning |F'|.
pub const M_SAMPLES_PER_UNIT: usize = 2048;

/// Running maxima of |F'| on the symmetric lattice k / 2048, so that m(r)
/// for many r up to a radius costs one scan.
struct MTable<'a> {
    pot: &'a PotentialSpec,
    h: f64,
    best: Vec<f64>,
    arg: Vec<f64>,
}

impl<'a> MTable<'a> {
    fn new(pot: &'a PotentialSpec, radius: f64) -> Self {
        let h = 1.0 / M_SAMPLES_PER_UNIT as f64;
        let kmax = (radius.abs() / h).floor() as usize;
        let mut best = Vec::with_capacity(kmax + 1);
        let mut arg = Vec::with_capacity(kmax + 1);
        let (mut b, mut a) = (pot.f_prime(0.0).abs(), 0.0);
        for k in 0..=kmax {
            let z = k as f64 * h;
            for z in [z, -z] {
                let v = pot.f_prime(z).abs();
                if v > b {
                    b = v;
                    a = z;
                }
            }
            best.push(b);
            arg.push(a);
        }
        MTable { pot, h, best, arg }
    }

    fn m(&self, r: f64) -> f64 {
        let r = r.abs();
        let k = ((r / self.h).floor() as usize).min(self.best.len() - 1);
        let (mut best, mut arg) = (self.best[k], self.arg[k]);
        for z in [r, -r] {
            let v = self.pot.f_prime(z).abs();
            if v > best {
                best = v;
                arg = z;
            }
        }
        for j in -4..=4 {
            let z = (arg + j as f64 * self.h / 4.0).clamp(-r, r);
            best = best.max(self.pot.f_prime(z).abs());
        }
        best * 1.001
    }

    fn b(&self, d: f64) -> f64 {
        (1.0 + self.m(d)).sqrt() * d
    }
}

/// m(r) = max |F'(z)| over |z| <= r, sampled on a fixed lattice with a
/// four-fold refinement around the best lattice point, inflated by 0.1%.
pub fn m_of(pot: &PotentialSpec, r: f64) -> f64 {
    MTable::new(pot, r).m(r)
}

pub fn b_of(pot: &PotentialSpec, d: f64) -> f64 {
    (1.0 + m_of(pot, d)).sqrt() * d
}

/// Inverse of B by bisection. B(d) >= d and m is nondecreasing, so the root
/// lies in [y / sqrt(1 + m(y)), y].
pub fn b_inverse(pot: &PotentialSpec, y: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::InvalidInput(format!("B^-1 needs a finite y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let table = MTable::new(pot, y);
    let my = table.m(y);
    if !my.is_finite() {
        return Err(Error::InvalidInput(format!("y = {y} is outside the range of B")));
    }
    let mut lo = y / (1.0 + my).sqrt();
    let mut hi = y;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if table.b(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of the functional trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRow {
    pub t: f64,
    pub d: f64,
    pub d1: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub v_ham: f64,
}

pub fn functional_row(t: f64, s: &StatePair, gamma: f64, epsilon: f64, pot: &PotentialSpec) -> FunctionalRow {
    FunctionalRow {
        t,
        d: distance_d(s),
        d1: distance_d1(s),
        v: lyapunov_v(s, gamma, epsilon),
        w: lyapunov_w(s, gamma, epsilon, pot),
        v_ham: hamiltonian_v(s, pot),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_fallbacks_match_closed_forms() {
        let p = PotentialSpec::new("sin", |u: f64| -u.sin()).unwrap();
        let q = PotentialSpec::sine_gordon(1.0);
        for &u in &[-2.5, -0.3, 0.0, 0.7, 3.2] {
            assert!((p.integral(u) - q.integral(u)).abs() < 1e-13);
            assert!((p.f_prime(u) - q.f_prime(u)).abs() < 1e-8);
        }
        assert!(PotentialSpec::new("bad", |u| u + 1.0).is_err());
    }

    #[test]
    fn lambda_split_balances() {
        let l = balanced_lambda_split(1.0);
        let a = 3.0 * (1.0 - l) * omega1() / 4.0;
        let b = 3.0 * l * PI2 / 4.0 - 1.0;
        assert!((a - b).abs() < 1e-14);
    }
}
