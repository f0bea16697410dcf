//! Chebyshev interpolation on an interval at Chebyshev-Lobatto points.

#[derive(Debug, Clone)]
pub struct Cheb {
    a: f64,
    b: f64,
    coef: Vec<f64>,
}

/// Lobatto points on [a, b] in ascending order (n + 1 points).
pub fn lobatto_points(n: usize, a: f64, b: f64) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..=n)
        .map(|j| {
            if j == 0 {
                a
            } else if j == n {
                b
            } else {
                mid - half * (std::f64::consts::PI * j as f64 / n as f64).cos()
            }
        })
        .collect()
}

impl Cheb {
    /// `vals` are samples at `lobatto_points(n, a, b)` (ascending).
    pub fn from_values(vals: &[f64], a: f64, b: f64) -> Self {
        let n = vals.len() - 1;
        assert!(n >= 1);
        let nf = n as f64;
        let table: Vec<f64> = (0..2 * n)
            .map(|m| (std::f64::consts::PI * m as f64 / nf).cos())
            .collect();
        let mut coef = vec![0.0; n + 1];
        for (k, ck) in coef.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..=n {
                // standard node t_j = cos(pi j / n) sits at ascending index n - j
                let fj = vals[n - j];
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += w * fj * table[(j * k) % (2 * n)];
            }
            *ck = 2.0 * s / nf;
        }
        coef[0] *= 0.5;
        coef[n] *= 0.5;
        Cheb { a, b, coef }
    }

    pub fn degree(&self) -> usize {
        self.coef.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coef.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coef[0]
    }

    pub fn derivative(&self) -> Cheb {
        let n = self.degree();
        let scale = 2.0 / (self.b - self.a);
        if n == 0 {
            return Cheb {
                a: self.a,
                b: self.b,
                coef: vec![0.0],
            };
        }
        let mut d = vec![0.0; n + 1];
        for k in (1..=n).rev() {
            let next = if k < n { d[k + 1] } else { 0.0 };
            d[k - 1] = next + 2.0 * k as f64 * self.coef[k];
        }
        d[0] *= 0.5;
        d.truncate(n.max(1));
        for c in d.iter_mut() {
            *c *= scale;
        }
        Cheb {
            a: self.a,
            b: self.b,
            coef: d,
        }
    }

    /// Largest magnitude among the last three coefficients relative to the largest overall.
    pub fn tail_ratio(&self) -> f64 {
        let big = self.coef.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if big == 0.0 {
            return 0.0;
        }
        let n = self.coef.len();
        let tail = self.coef[n.saturating_sub(3)..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
        tail / big
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.coef.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}
