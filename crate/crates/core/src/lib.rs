//! Numerical laboratory for the dissipative wave equation
//! `-eps u_xxt - c^2 u_xx + u_tt = f` on [0, 1] with Dirichlet data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheb;
pub mod config;
pub mod comparison;
pub mod core_model;
pub mod error;
pub mod fdsolver;
pub mod forcing_examples;
pub mod functionals;
pub mod kernels;
pub mod picard;
pub mod quad;
pub mod scenarios;

pub use error::{Error, Result};
