use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Forcing f(x, t, u, u_x, u_xx, u_t).
pub type Forcing = Arc<dyn Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync>;

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar function of one variable with optional analytic derivatives.
/// Missing derivatives fall back to 4th-order central differences.
#[derive(Clone)]
pub struct Smooth1 {
    f: F1,
    d1: Option<F1>,
    d2: Option<F1>,
    zero: bool,
}

impl fmt::Debug for Smooth1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Smooth1")
            .field("analytic_d1", &self.d1.is_some())
            .field("analytic_d2", &self.d2.is_some())
            .field("zero", &self.zero)
            .finish()
    }
}

const FD_STEP: f64 = 1e-3;

impl Smooth1 {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Smooth1 {
            f: Arc::new(f),
            d1: None,
            d2: None,
            zero: false,
        }
    }

    pub fn with_derivatives(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Smooth1 {
            f: Arc::new(f),
            d1: Some(Arc::new(d1)),
            d2: Some(Arc::new(d2)),
            zero: false,
        }
    }

    pub fn zero() -> Self {
        Smooth1 {
            f: Arc::new(|_| 0.0),
            d1: Some(Arc::new(|_| 0.0)),
            d2: Some(Arc::new(|_| 0.0)),
            zero: true,
        }
    }

    pub fn constant(v: f64) -> Self {
        if v == 0.0 {
            return Self::zero();
        }
        Smooth1::with_derivatives(move |_| v, |_| 0.0, |_| 0.0)
    }

    /// a sin(k pi x)
    pub fn sine_mode(a: f64, k: f64) -> Self {
        let w = k * std::f64::consts::PI;
        Smooth1::with_derivatives(
            move |x| a * (w * x).sin(),
            move |x| a * w * (w * x).cos(),
            move |x| -a * w * w * (w * x).sin(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        match &self.d1 {
            Some(d) => d(x),
            None => {
                let h = FD_STEP;
                let f = &self.f;
                (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
            }
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match &self.d2 {
            Some(d) => d(x),
            None => {
                let h = FD_STEP;
                let f = &self.f;
                (16.0 * (f(x + h) + f(x - h)) - (f(x + 2.0 * h) + f(x - 2.0 * h)) - 30.0 * f(x))
                    / (12.0 * h * h)
            }
        }
    }

    /// g(x) = a * self(s x); derivatives scale accordingly.
    pub fn rescaled(&self, a: f64, s: f64) -> Self {
        if self.zero {
            return Self::zero();
        }
        let (f1, f2, f3) = (self.clone(), self.clone(), self.clone());
        Smooth1::with_derivatives(
            move |x| a * f1.eval(s * x),
            move |x| a * s * f2.d1(s * x),
            move |x| a * s * s * f3.d2(s * x),
        )
    }

    pub fn sub(&self, other: &Smooth1) -> Self {
        if other.zero {
            return self.clone();
        }
        let (a, b, c, d, e, g) = (
            self.clone(),
            other.clone(),
            self.clone(),
            other.clone(),
            self.clone(),
            other.clone(),
        );
        Smooth1::with_derivatives(
            move |x| a.eval(x) - b.eval(x),
            move |x| c.d1(x) - d.d1(x),
            move |x| e.d2(x) - g.d2(x),
        )
    }
}

/// Affine change of time recorded by the rescaling: t_new = time_factor * t_orig,
/// u_new(x, t_new) = u_orig(x, t_new / time_factor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub time_factor: f64,
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling { time_factor: 1.0 }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub epsilon: f64,
    pub c: f64,
    pub forcing: Forcing,
    pub u0: Smooth1,
    pub u1: Smooth1,
    pub h1: Smooth1,
    pub h2: Smooth1,
    /// None means unbounded.
    pub horizon: Option<f64>,
    pub scaling: Scaling,
    /// true when the forcing is known to vanish identically (enables shortcuts).
    pub forcing_is_zero: bool,
    pub name: String,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("epsilon", &self.epsilon)
            .field("c", &self.c)
            .field("horizon", &self.horizon)
            .field("scaling", &self.scaling)
            .field("forcing_is_zero", &self.forcing_is_zero)
            .field("h1_zero", &self.h1.is_zero())
            .field("h2_zero", &self.h2.is_zero())
            .finish()
    }
}

pub const CONSISTENCY_TOL: f64 = 1e-9;

impl ProblemSpec {
    /// Homogeneous Dirichlet problem with zero data and zero forcing.
    pub fn new(epsilon: f64, c: f64) -> Self {
        ProblemSpec {
            epsilon,
            c,
            forcing: Arc::new(|_, _, _, _, _, _| 0.0),
            u0: Smooth1::zero(),
            u1: Smooth1::zero(),
            h1: Smooth1::zero(),
            h2: Smooth1::zero(),
            horizon: None,
            scaling: Scaling::default(),
            forcing_is_zero: true,
            name: "unnamed".into(),
        }
    }

    pub fn with_forcing(
        mut self,
        f: impl Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.forcing = Arc::new(f);
        self.forcing_is_zero = false;
        self
    }

    pub fn with_initial(mut self, u0: Smooth1, u1: Smooth1) -> Self {
        self.u0 = u0;
        self.u1 = u1;
        self
    }

    pub fn with_boundary(mut self, h1: Smooth1, h2: Smooth1) -> Self {
        self.h1 = h1;
        self.h2 = h2;
        self
    }

    pub fn with_horizon(mut self, t: f64) -> Self {
        self.horizon = Some(t);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn f(&self, x: f64, t: f64, u: f64, ux: f64, uxx: f64, ut: f64) -> f64 {
        (self.forcing)(x, t, u, ux, uxx, ut)
    }

    pub fn has_zero_boundaries(&self) -> bool {
        self.h1.is_zero() && self.h2.is_zero()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon and c must be positive, got {} and {}",
                self.epsilon, self.c
            )));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0) {
                return Err(Error::InvalidInput(format!("horizon must be positive, got {t}")));
            }
        }
        let checks = [
            ("h1(0) = u0(0)", self.h1.eval(0.0), self.u0.eval(0.0)),
            ("h2(0) = u0(1)", self.h2.eval(0.0), self.u0.eval(1.0)),
            ("h1'(0) = u1(0)", self.h1.d1(0.0), self.u1.eval(0.0)),
            ("h2'(0) = u1(1)", self.h2.d1(0.0), self.u1.eval(1.0)),
        ];
        for (name, a, b) in checks {
            if !((a - b).abs() <= CONSISTENCY_TOL) {
                return Err(Error::Consistency(format!("{name}: {a} vs {b}")));
            }
        }
        Ok(())
    }
}
