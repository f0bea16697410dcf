use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Space-time samples on a uniform grid: x_i = i/(nx-1), t_n = t0 + n dt.
/// Storage is time-major: value (i, n) lives at n * nx + i.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub nx: usize,
    pub nt: usize,
    pub t0: f64,
    pub dt: f64,
    pub u: Vec<f64>,
    pub ut: Option<Vec<f64>>,
    pub ux: Option<Vec<f64>>,
    pub uxx: Option<Vec<f64>>,
}

/// Second-order spatial derivatives of one time row; one-sided second-order
/// stencils at the end points.
pub fn spatial_derivatives(u: &[f64], dx: f64) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    assert!(n >= 4, "need at least 4 points for boundary stencils");
    let mut ux = vec![0.0; n];
    let mut uxx = vec![0.0; n];
    for i in 1..n - 1 {
        ux[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
    }
    ux[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
    ux[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx);
    uxx[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / (dx * dx);
    uxx[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / (dx * dx);
    (ux, uxx)
}

impl GridFunction {
    pub fn zeros(nx: usize, nt: usize, t0: f64, dt: f64) -> Result<Self> {
        if nx < 3 || nt < 1 || !(dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grid needs nx >= 3, nt >= 1, dt > 0 (got {nx}, {nt}, {dt})"
            )));
        }
        Ok(GridFunction {
            nx,
            nt,
            t0,
            dt,
            u: vec![0.0; nx * nt],
            ut: None,
            ux: None,
            uxx: None,
        })
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.nt - 1)
    }

    #[inline]
    pub fn at(&self, i: usize, n: usize) -> f64 {
        self.u[n * self.nx + i]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.u[n * self.nx..(n + 1) * self.nx]
    }

    pub fn row_of<'a>(&self, data: &'a [f64], n: usize) -> &'a [f64] {
        &data[n * self.nx..(n + 1) * self.nx]
    }

    /// Fills u_x and u_xx from the stored values.
    pub fn derive_spatial(&mut self) {
        let dx = self.dx();
        let mut ux = vec![0.0; self.u.len()];
        let mut uxx = vec![0.0; self.u.len()];
        for n in 0..self.nt {
            let (a, b) = spatial_derivatives(self.row(n), dx);
            ux[n * self.nx..(n + 1) * self.nx].copy_from_slice(&a);
            uxx[n * self.nx..(n + 1) * self.nx].copy_from_slice(&b);
        }
        self.ux = Some(ux);
        self.uxx = Some(uxx);
    }

    /// Fills u_t by second-order differences in time when it is missing.
    pub fn derive_time(&mut self) {
        if self.ut.is_some() || self.nt < 3 {
            return;
        }
        let nx = self.nx;
        let mut ut = vec![0.0; self.u.len()];
        for n in 0..self.nt {
            for i in 0..nx {
                ut[n * nx + i] = if n == 0 {
                    (-3.0 * self.at(i, 0) + 4.0 * self.at(i, 1) - self.at(i, 2)) / (2.0 * self.dt)
                } else if n == self.nt - 1 {
                    (3.0 * self.at(i, n) - 4.0 * self.at(i, n - 1) + self.at(i, n - 2))
                        / (2.0 * self.dt)
                } else {
                    (self.at(i, n + 1) - self.at(i, n - 1)) / (2.0 * self.dt)
                };
            }
        }
        self.ut = Some(ut);
    }

    fn locate(&self, x: f64, t: f64) -> (usize, f64, usize, f64) {
        let fx = (x.clamp(0.0, 1.0) / self.dx()).min((self.nx - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let ax = fx - i as f64;
        if self.nt == 1 {
            return (i, ax, 0, 0.0);
        }
        let ft = ((t - self.t0) / self.dt).clamp(0.0, (self.nt - 1) as f64);
        let n = (ft.floor() as usize).min(self.nt - 2);
        (i, ax, n, ft - n as f64)
    }

    /// Bilinear interpolation of any companion array (clamped to the grid).
    pub fn interp_of(&self, data: &[f64], x: f64, t: f64) -> f64 {
        let (i, ax, n, at) = self.locate(x, t);
        let nx = self.nx;
        let v = |ii: usize, nn: usize| data[nn * nx + ii];
        if self.nt == 1 {
            return (1.0 - ax) * v(i, 0) + ax * v(i + 1, 0);
        }
        (1.0 - at) * ((1.0 - ax) * v(i, n) + ax * v(i + 1, n))
            + at * ((1.0 - ax) * v(i, n + 1) + ax * v(i + 1, n + 1))
    }

    pub fn interp(&self, x: f64, t: f64) -> f64 {
        self.interp_of(&self.u, x, t)
    }

    /// Max deviation of the boundary columns from prescribed data.
    pub fn boundary_mismatch(&self, h1: impl Fn(f64) -> f64, h2: impl Fn(f64) -> f64) -> f64 {
        let mut m = 0.0f64;
        for n in 0..self.nt {
            let t = self.t(n);
            m = m.max((self.at(0, n) - h1(t)).abs());
            m = m.max((self.at(self.nx - 1, n) - h2(t)).abs());
        }
        m
    }

    /// Max |a - b| over all samples (grids must share shape).
    pub fn sup_diff(&self, other: &GridFunction) -> Result<f64> {
        if self.nx != other.nx || self.nt != other.nt {
            return Err(Error::InvalidInput("grid shapes differ".into()));
        }
        Ok(self
            .u
            .iter()
            .zip(&other.u)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Sub-sampled copy keeping every `stride`-th time row.
    pub fn every(&self, stride: usize) -> GridFunction {
        let rows: Vec<usize> = (0..self.nt).step_by(stride.max(1)).collect();
        let pick = |d: &Vec<f64>| -> Vec<f64> {
            rows.iter()
                .flat_map(|&n| d[n * self.nx..(n + 1) * self.nx].iter().copied())
                .collect()
        };
        GridFunction {
            nx: self.nx,
            nt: rows.len(),
            t0: self.t0,
            dt: self.dt * stride.max(1) as f64,
            u: pick(&self.u),
            ut: self.ut.as_ref().map(pick),
            ux: self.ux.as_ref().map(pick),
            uxx: self.uxx.as_ref().map(pick),
        }
    }

    /// CSV with header `x,t,u,ut` (ut empty when not stored).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,t,u,ut")?;
        for n in 0..self.nt {
            let t = self.t(n);
            for i in 0..self.nx {
                let ut = match &self.ut {
                    Some(v) => format!("{:e}", v[n * self.nx + i]),
                    None => String::new(),
                };
                writeln!(w, "{:e},{:e},{:e},{}", self.x(i), t, self.at(i, n), ut)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid csv".into()))??;
        if header.trim() != "x,t,u,ut" {
            return Err(Error::Parse(format!("unexpected header '{header}'")));
        }
        let mut ts: Vec<f64> = Vec::new();
        let mut u = Vec::new();
        let mut ut = Vec::new();
        let mut has_ut = true;
        let mut nx = 0usize;
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 columns", k + 2)));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))
            };
            let x = num(cols[0])?;
            let t = num(cols[1])?;
            if ts.last().is_none_or(|&l| l != t) {
                ts.push(t);
            }
            if ts.len() == 1 {
                nx += 1;
            }
            let _ = x;
            u.push(num(cols[2])?);
            if cols[3].trim().is_empty() {
                has_ut = false;
            } else {
                ut.push(num(cols[3])?);
            }
        }
        let nt = ts.len();
        if nt == 0 || nx < 3 || u.len() != nx * nt {
            return Err(Error::Parse("grid csv is not a full rectangle".into()));
        }
        let dt = if nt > 1 { (ts[nt - 1] - ts[0]) / (nt - 1) as f64 } else { 1.0 };
        Ok(GridFunction {
            nx,
            nt,
            t0: ts[0],
            dt,
            u,
            ut: if has_ut { Some(ut) } else { None },
            ux: None,
            uxx: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_exact_for_quadratics() {
        let dx = 0.1;
        let u: Vec<f64> = (0..11).map(|i| (i as f64 * dx).powi(2)).collect();
        let (ux, uxx) = spatial_derivatives(&u, dx);
        for i in 0..11 {
            assert!((ux[i] - 2.0 * i as f64 * dx).abs() < 1e-12);
            assert!((uxx[i] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut g = GridFunction::zeros(4, 3, 0.5, 0.25).unwrap();
        for (k, v) in g.u.iter_mut().enumerate() {
            *v = k as f64 * 0.1;
        }
        g.ut = Some(g.u.iter().map(|v| -v).collect());
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(back.nx, 4);
        assert_eq!(back.nt, 3);
        assert_eq!(back.u, g.u);
        assert_eq!(back.ut, g.ut);
        assert!((back.dt - 0.25).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear_data() {
        let mut g = GridFunction::zeros(5, 4, 0.0, 0.5).unwrap();
        for n in 0..4 {
            for i in 0..5 {
                g.u[n * 5 + i] = 2.0 * g.x(i) + 3.0 * g.t(n) + 1.0;
            }
        }
        assert!((g.interp(0.33, 0.7) - (0.66 + 2.1 + 1.0)).abs() < 1e-14);
    }
}
