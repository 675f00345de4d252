//! Grid calculus for symmetric unimodal densities: modulo reduction, convolution, the periodic
//! profile `d(x)`, and the bounds built on the shifted Riemann-sum lemma.

mod convolve;
mod entropy;
mod grid;
mod modulo;
mod profile;
mod riemann;
mod shape;

pub use convolve::{convolve, convolve_all, convolve_direct};
pub use entropy::{entropy, entropy_bounds_x, hq, power_bounds};
pub use grid::{GridDensity, Parity, DEFAULT_CELLS, MASS_TOL};
pub use modulo::{mod_reduce, wrap};
pub use profile::{d_extrema, d_on_grid, d_profile, d_value, input_density, DExtrema};
pub use riemann::{riemann_shift_sum, riemann_shift_sum_fn, SumForm};
pub use shape::{is_symmetric, is_unimodal, max_slope};
