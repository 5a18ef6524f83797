//! Grids in the hyperbolic coordinate, sampled radial profiles and the
//! integral functionals of the disc.
//!
//! With `r = tanh(t/2)`: `dr/dt = (1-r^2)/2`, `sinh t = 2r/(1-r^2)`, the area
//! element is `π tanh(t/2) sech^2(t/2) dt`, `|∇u|^2 dx = 2π ũ'^2 sinh t dt`
//! and `u^2 (1-r^2)^{-2} dx = (π/2) ũ^2 sinh t dt`.

mod function;
mod functionals;
mod grid;

pub use function::RadialFunction;
pub use functionals::{
    annulus_hardy, area_weight, boundary_decay_bound, exp_moment, exp_moment_guarded,
    hardy_functional, lem_a_check, potential_average, ExpMoment, HardyDecomposition,
};
pub use grid::{make_grid, Grading, QuadPoint, RadialGrid, Stencil, GEOMETRIC_T_MIN, WINDOW};

pub(crate) use grid::{hermite, hermite_d};
