//! Shared fixtures for the benchmarks.

use epdiff_core::{make_grid, scenarios, Grid, GridField};

/// Grid with `P = 2N + 1` points and `alpha = 1`.
pub fn grid(n_modes: usize) -> Grid {
    make_grid(n_modes, 1.0).expect("valid grid")
}

/// The Gaussian bump used for the energy experiments, as coordinates.
pub fn gaussian_state(grid: &Grid) -> GridField {
    let (u, _) = scenarios::gaussian(grid, 1.0, 0.0, 1.0).expect("valid width");
    epdiff_core::integrator::coordinates_from_velocity(&u)
}
