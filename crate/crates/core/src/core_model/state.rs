use super::grid::{spatial_derivatives, GridFunction};
use crate::error::{Error, Result};

/// Spatial snapshot (phi, psi) = (u(., t), u_t(., t)) on a uniform grid,
/// with first and second derivative samples of phi.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub phi: Vec<f64>,
    pub phi_x: Vec<f64>,
    pub phi_xx: Vec<f64>,
    pub psi: Vec<f64>,
    /// Tagged as a state of the normalized problem (zero boundary values).
    pub homogeneous: bool,
}

impl StatePair {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.phi.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Samples analytic functions on nx points.
    pub fn from_fns(
        nx: usize,
        phi: impl Fn(f64) -> f64,
        phi_x: impl Fn(f64) -> f64,
        phi_xx: impl Fn(f64) -> f64,
        psi: impl Fn(f64) -> f64,
    ) -> Self {
        let xs: Vec<f64> = (0..nx).map(|i| i as f64 / (nx - 1) as f64).collect();
        StatePair {
            phi: xs.iter().map(|&x| phi(x)).collect(),
            phi_x: xs.iter().map(|&x| phi_x(x)).collect(),
            phi_xx: xs.iter().map(|&x| phi_xx(x)).collect(),
            psi: xs.iter().map(|&x| psi(x)).collect(),
            homogeneous: true,
        }
        .cleaned()
    }

    /// Derivatives from the diagnostic stencils.
    pub fn from_samples(phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if phi.len() != psi.len() || phi.len() < 4 {
            return Err(Error::InvalidInput(
                "phi and psi need equal lengths of at least 4".into(),
            ));
        }
        let dx = 1.0 / (phi.len() - 1) as f64;
        let (phi_x, phi_xx) = spatial_derivatives(&phi, dx);
        Ok(StatePair {
            phi,
            phi_x,
            phi_xx,
            psi,
            homogeneous: true,
        }
        .cleaned())
    }

    /// Time row n of a grid; uses stored derivative grids when present.
    pub fn from_grid(g: &GridFunction, n: usize) -> Result<Self> {
        let ut = g
            .ut
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("grid has no u_t samples".into()))?;
        let phi = g.row(n).to_vec();
        let psi = g.row_of(ut, n).to_vec();
        match (&g.ux, &g.uxx) {
            (Some(ux), Some(uxx)) => Ok(StatePair {
                phi,
                phi_x: g.row_of(ux, n).to_vec(),
                phi_xx: g.row_of(uxx, n).to_vec(),
                psi,
                homogeneous: true,
            }
            .cleaned()),
            _ => Self::from_samples(phi, psi),
        }
    }

    fn cleaned(mut self) -> Self {
        let tol = 1e-12;
        let n = self.phi.len();
        self.homogeneous = self.phi[0].abs() <= tol
            && self.phi[n - 1].abs() <= tol
            && self.psi[0].abs() <= tol
            && self.psi[n - 1].abs() <= tol;
        self
    }

    pub fn check_homogeneous(&self) -> Result<()> {
        if self.homogeneous {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "state does not vanish at x = 0 and x = 1".into(),
            ))
        }
    }
}
