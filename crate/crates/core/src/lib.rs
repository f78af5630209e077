//! Structure-preserving pseudospectral integrator for the one-dimensional
//! EPDiff (Camassa-Holm) equation, built on discrete diffeomorphisms.
//!
//! - [`spectral`]: grid, unitary DFT, derivative and Helmholtz operators.
//! - [`algebra`]: dense matrix oracle for small grids (basis, pairing, tensors).
//! - [`fast`]: FFT evaluation of the update terms and the energy.
//! - [`integrator`]: explicit / implicit / average time stepping.
//! - [`reference`]: independent RK4 pseudospectral Camassa-Holm solver.
//! - [`scenarios`]: initial conditions.
//! - [`config`], [`trajectory`], [`verify`]: run plumbing used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod config;
pub mod error;
pub mod fast;
pub mod integrator;
pub mod reference;
pub mod scenarios;
pub mod spectral;
pub mod stats;
pub mod trajectory;
pub mod verify;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use algebra::{MatrixAlgebra, OperatorMatrix, TensorCDE, TimeRule, MAX_TENSOR_POINTS};
pub use config::{ConfigError, Overrides, RunConfig, SchemeChoice};
pub use error::{Error, Result};
pub use integrator::{
    residual, run, step, Observer, RunOptions, SchemeKind, SolverMethod, SolverOptions, StepEvent, StepReport,
};
pub use reference::{ch_rhs, rk4_run, ReferenceOptions};
pub use scenarios::ScenarioSpec;
pub use spectral::{make_grid, Grid, GridField, SpectralCoeffs};
pub use rustfft::num_complex::Complex64;
pub use trajectory::{EnergySample, Snapshot, TrajectoryRecord};
