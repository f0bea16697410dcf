//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Modal amplitude of theta: a'' + eps k a' + c^2 k a = 0, a(0) = 0, a'(0) = 1,
/// with k = (n pi)^2. Returns (a, a').
pub fn modal(n: usize, t: f64, eps: f64, c: f64) -> (f64, f64) {
    let kap = (n as f64 * PI).powi(2);
    let disc = eps * eps * kap * kap - 4.0 * c * c * kap;
    if disc > 0.0 {
        let sq = disc.sqrt();
        let r1 = -2.0 * c * c * kap / (eps * kap + sq);
        let r2 = -0.5 * (eps * kap + sq);
        let (e1, e2) = ((r1 * t).exp(), (r2 * t).exp());
        ((e1 - e2) / sq, (r1 * e1 - r2 * e2) / sq)
    } else if disc < 0.0 {
        let om = 0.5 * (-disc).sqrt();
        let d = (-0.5 * eps * kap * t).exp();
        let a = d * (om * t).sin() / om;
        let ap = d * ((om * t).cos() - 0.5 * eps * kap * (om * t).sin() / om);
        (a, ap)
    } else {
        let d = (-0.5 * eps * kap * t).exp();
        (t * d, d * (1.0 - 0.5 * eps * kap * t))
    }
}

/// sum_{n>=1} cos(n pi x) / (n pi)^2 for x in [0, 2].
fn s2(x: f64) -> f64 {
    1.0 / 6.0 - x / 2.0 + x * x / 4.0
}

fn reduce(x: f64) -> f64 {
    let y = x.abs().rem_euclid(2.0);
    if y > 1.0 {
        2.0 - y
    } else {
        y
    }
}

const MODES: usize = 4000;

/// theta from its cosine series with the 1/n^2 tail summed in closed form.
pub fn theta_fourier(x: f64, t: f64, eps: f64, c: f64) -> f64 {
    let x = reduce(x);
    let e = (-c * c * t / eps).exp() / eps;
    let mut s = 0.5 * t + e * s2(x);
    for n in 1..=MODES {
        let kap = (n as f64 * PI).powi(2);
        let (a, _) = modal(n, t, eps, c);
        s += (a - e / kap) * (n as f64 * PI * x).cos();
    }
    s
}

/// theta_t from the series; the tail -(c^2/eps) e / kappa is summed in closed form.
pub fn theta_t_fourier(x: f64, t: f64, eps: f64, c: f64) -> f64 {
    let x = reduce(x);
    let e = (-c * c * t / eps).exp() / eps;
    let lead = -c * c / eps * e;
    let mut s = 0.5 + lead * s2(x);
    for n in 1..=MODES {
        let kap = (n as f64 * PI).powi(2);
        let (_, ap) = modal(n, t, eps, c);
        s += (ap - lead / kap) * (n as f64 * PI * x).cos();
    }
    s
}

/// Classical theta_xx (x away from the kink).
pub fn theta_xx_fourier(x: f64, t: f64, eps: f64, c: f64) -> f64 {
    let x = reduce(x);
    let e = (-c * c * t / eps).exp() / eps;
    let b = e * (2.0 * c * c / (eps * eps) - c.powi(4) * t / eps.powi(3));
    // sum cos = -1/2 away from the kink
    let mut s = 0.5 * e - b * s2(x);
    for n in 1..=MODES {
        let kap = (n as f64 * PI).powi(2);
        let (a, _) = modal(n, t, eps, c);
        s -= (kap * a - e - b / kap) * (n as f64 * PI * x).cos();
    }
    s
}

/// I0 by its power series (independent of the library routine).
pub fn i0_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-18 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Brute-force K(x, t) in the original variables: composite Simpson in
/// tau on [0, t] and in z on [0, zmax].
pub fn k_simpson(x: f64, t: f64, eps: f64, c: f64, nt: usize, nz: usize, zmax: f64) -> f64 {
    let simpson_w = |i: usize, n: usize| -> f64 {
        if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let ht = t / nt as f64;
    let hz = zmax / nz as f64;
    let mut outer = 0.0;
    for i in 1..=nt {
        let tau = i as f64 * ht;
        let sfac = x * x / (4.0 * eps * tau);
        let mut inner = 0.0;
        for j in 0..=nz {
            let z = j as f64 * hz;
            let g = sfac * (z + 1.0) * (-sfac * (z + 1.0).powi(2)).exp()
                * i0_series(2.0 * c * x * z.sqrt() / eps);
            inner += simpson_w(j, nz) * g;
        }
        inner *= hz / 3.0;
        let pref = (-c * c * tau / eps).exp() / (PI * eps * tau).sqrt();
        outer += simpson_w(i, nt) * pref * inner;
    }
    outer * ht / 3.0
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
