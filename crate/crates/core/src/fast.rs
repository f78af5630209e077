//! FFT evaluation of the three tensor contractions that make up the
//! discrete update, plus the kinetic energy.
//!
//! With `u = X` the grid values and `m = H u`:
//!
//! ```text
//! Σ_i X_i E_ip            = m_p / P
//! Σ_ij X̄_i X_j C_ijp      = -(u_x ⋆ m)_p / P
//! Σ_ij X_i X̄_j D_ijp      = ∂_x(u ⋆ m)_p / P
//! ```
//!
//! Products are formed pointwise on the `P`-point grid with no dealiasing;
//! these are exact identities for the dense tensors in [`crate::algebra`],
//! aliasing included. The signs are the ones the dense contractions
//! produce under this crate's transform convention (see `tests/acceptance.rs`).

use std::f64::consts::PI;

use crate::error::Result;
use crate::spectral::{Grid, GridField};

/// `(1/P) H X`.
pub fn e_term(grid: &Grid, x: &GridField) -> Result<GridField> {
    let p = grid.n_points() as f64;
    let m = grid.helmholtz_slice(x)?;
    Ok(m.into_iter().map(|v| v / p).collect::<Vec<_>>().into())
}

/// `-(1/P) u_x ⋆ m`.
pub fn c_term(grid: &Grid, x: &GridField) -> Result<GridField> {
    let p = grid.n_points() as f64;
    let ux = grid.derivative_slice(x)?;
    let m = grid.helmholtz_slice(x)?;
    Ok(ux.iter().zip(&m).map(|(a, b)| -a * b / p).collect::<Vec<_>>().into())
}

/// `(1/P) ∂_x(u ⋆ m)`.
pub fn d_term(grid: &Grid, x: &GridField) -> Result<GridField> {
    let p = grid.n_points() as f64;
    let m = grid.helmholtz_slice(x)?;
    let um: Vec<f64> = x.iter().zip(&m).map(|(a, b)| a * b).collect();
    let d = grid.derivative_slice(&um)?;
    Ok(d.into_iter().map(|v| v / p).collect::<Vec<_>>().into())
}

/// Kinetic energy `½ ∫ (u² + α u_x²) dx`, evaluated as `½ (2π/P) Σ_j u_j m_j`.
///
/// This equals `π` times the flat pairing of the discrete vector field with itself.
pub fn energy(grid: &Grid, x: &GridField) -> Result<f64> {
    let m = grid.helmholtz_slice(x)?;
    let dot: f64 = x.iter().zip(&m).map(|(a, b)| a * b).sum();
    Ok(0.5 * (2.0 * PI / grid.n_points() as f64) * dot)
}

/// Momentum `m = H u` (alias of [`crate::spectral::apply_helmholtz`]).
pub fn momentum(grid: &Grid, x: &GridField) -> Result<GridField> {
    grid.helmholtz_slice(x).map(GridField::new)
}
