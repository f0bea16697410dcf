//! Bessel function, fundamental solution K, periodized kernel theta,
//! Green's function w, and numerical checks of the kernel integral bounds.

mod bessel;
mod bounds;
mod fundamental;
mod profile;
mod table;
mod theta;

pub use bessel::{bessel_i0, bessel_i0e};
pub use bounds::{ltheta_residual, verify_kernel_bounds, BoundCheck, BoundReport};
pub use fundamental::{fundamental_k, fundamental_k_t};
pub use profile::{profile_cache_clear, ProfileCache, ThetaProfile};
pub use table::{KernelTable, Quantity};
pub use theta::{
    green_w, green_w_derivatives, reduce_argument, theta, theta_derivative, theta_t, Which,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub epsilon: f64,
    pub c: f64,
    /// Number of image pairs kept in the periodized sum.
    pub series_terms: usize,
    pub quad_tol: f64,
}

impl KernelParams {
    pub fn new(epsilon: f64, c: f64) -> Result<Self> {
        let p = KernelParams {
            epsilon,
            c,
            series_terms: 8,
            quad_tol: 1e-11,
        };
        p.validate()?;
        Ok(p)
    }

    /// Raises `series_terms` so the neglected images lie beyond the wave
    /// front plus a diffusive margin for all s <= horizon.
    pub fn with_terms_for_horizon(mut self, horizon: f64) -> Self {
        let reach = self.c * horizon + 8.0 * (self.epsilon * horizon).sqrt() + 1.0;
        self.series_terms = self.series_terms.max((0.5 * reach).ceil() as usize + 1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel needs epsilon > 0 and c > 0, got epsilon = {}, c = {}",
                self.epsilon, self.c
            )));
        }
        if self.series_terms < 1 {
            return Err(Error::InvalidInput("series_terms must be >= 1".into()));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::InvalidInput("quad_tol must be positive".into()));
        }
        Ok(())
    }

    /// Mass of the point singularity carried by theta_xx at the origin.
    pub fn delta_mass(&self, s: f64) -> f64 {
        (-self.c * self.c * s / self.epsilon).exp() / self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub value: f64,
    pub est_error: f64,
}

impl KernelEval {
    pub fn exact(value: f64) -> Self {
        KernelEval {
            value,
            est_error: 0.0,
        }
    }
}
