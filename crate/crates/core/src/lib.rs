//! Numerical laboratory for the Hardy-Moser-Trudinger inequality on the unit disc.
//!
//! Radial functions are discretised in the hyperbolic coordinate `t`, with
//! `r = tanh(t/2)`. In that variable the singular weight `(1-r^2)^{-2}`
//! becomes the smooth weight `sinh(t)/4` and all functionals reduce to
//! one-dimensional integrals on `(0, T_max]` plus closed-form tails.

pub mod blowup_lab;
pub mod error;
pub mod extremal;
pub mod hardy_green;
pub mod linalg;
pub mod profiles;
pub mod quadrature;
pub mod radial_core;
pub mod rearrange;

pub use error::{Error, Result};
pub use radial_core::{
    annulus_hardy, boundary_decay_bound, exp_moment, exp_moment_guarded, hardy_functional,
    lem_a_check, make_grid, potential_average, ExpMoment, Grading, HardyDecomposition,
    RadialFunction, RadialGrid,
};
