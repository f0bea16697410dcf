//! Problem definitions, grids, state snapshots and the transforms that
//! reduce an instance to the normalized problem (c = 1, zero boundaries).

mod grid;
mod spec;
mod state;
mod transforms;

pub use grid::{spatial_derivatives, GridFunction};
pub use spec::{Forcing, ProblemSpec, Scaling, Smooth1};
pub use state::StatePair;
pub use transforms::{
    homogenize_boundaries, perturbation_spec, perturbation_spec_with_tol, pde_residual,
    rescale_unit_wavespeed, BoundaryLift,
};
