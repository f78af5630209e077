//! Method-of-lines pseudospectral Camassa-Holm solver with classical RK4.
//!
//! Independent of the variational machinery; shares only the grid and FFT.
//! Evolves the momentum `m` under `ṁ = -(u m_x + 2 m u_x)`, `u = H⁻¹ m`.

use std::time::Instant;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fast;
use crate::spectral::{Grid, GridField};
use crate::trajectory::{EnergySample, RecordMetadata, TrajectoryRecord};

/// States whose ∞-norm exceeds this are treated as blown up.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptions {
    /// 2/3-rule dealiasing of products.
    pub dealias: bool,
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_stride: usize,
}

impl ReferenceOptions {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self { dealias: true, dt, n_steps, snapshot_stride: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("reference dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument("snapshot stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }
}

fn cutoff(grid: &Grid, dealias: bool) -> i64 {
    let n = grid.n_modes() as i64;
    if dealias {
        2 * n / 3
    } else {
        n
    }
}

/// `-(u m_x + 2 m u_x)` with `u = H⁻¹ m`.
///
/// With `dealias`, modes `|k| > ⌊2N/3⌋` are zeroed in every factor before
/// the products and in the result.
pub fn ch_rhs(grid: &Grid, m: &GridField, dealias: bool) -> Result<GridField> {
    grid.check_len(m.len())?;
    let kc = cutoff(grid, dealias);
    let mask = move |k: i64| if k.abs() > kc { 0.0 } else { 1.0 };
    let real = |v: f64| Complex64::new(v, 0.0);
    let m_f = grid.apply_symbol(m, |k| real(mask(k)))?;
    let m_x = grid.apply_symbol(m, |k| Complex64::new(0.0, k as f64 * mask(k)))?;
    let u = grid.apply_symbol(m, |k| real(mask(k) / grid.helmholtz_symbol(k)))?;
    let u_x = grid.apply_symbol(m, |k| Complex64::new(0.0, k as f64 * mask(k) / grid.helmholtz_symbol(k)))?;
    let rhs: Vec<f64> = (0..m.len()).map(|j| -(u[j] * m_x[j] + 2.0 * m_f[j] * u_x[j])).collect();
    if dealias {
        grid.apply_symbol(&rhs, |k| real(mask(k))).map(GridField::new)
    } else {
        Ok(GridField::new(rhs))
    }
}

fn axpy(a: f64, x: &GridField, y: &GridField) -> GridField {
    GridField::new(x.iter().zip(y.iter()).map(|(xi, yi)| a * xi + yi).collect())
}

/// One classical RK4 step.
pub fn rk4_step(grid: &Grid, m: &GridField, dt: f64, dealias: bool) -> Result<GridField> {
    let k1 = ch_rhs(grid, m, dealias)?;
    let k2 = ch_rhs(grid, &axpy(0.5 * dt, &k1, m), dealias)?;
    let k3 = ch_rhs(grid, &axpy(0.5 * dt, &k2, m), dealias)?;
    let k4 = ch_rhs(grid, &axpy(dt, &k3, m), dealias)?;
    Ok(GridField::new(
        (0..m.len()).map(|j| m[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])).collect(),
    ))
}

/// Integrates from momentum `m0`. Snapshots hold the velocity `u = H⁻¹ m`
/// (and `m` in [`TrajectoryRecord::momentum`]).
pub fn rk4_run(grid: &Grid, m0: &GridField, opts: &ReferenceOptions) -> Result<TrajectoryRecord> {
    opts.validate()?;
    grid.check_len(m0.len())?;
    let started = Instant::now();
    let mut record = TrajectoryRecord::new("reference", grid);
    let mut m = m0.clone();
    let push = |record: &mut TrajectoryRecord, t: f64, m: &GridField, snapshot: bool| -> Result<()> {
        let u = GridField::new(grid.inverse_helmholtz_slice(m)?);
        record.energy.push(EnergySample { t, energy: fast::energy(grid, &u)?, iterations: 0, residual: 0.0 });
        if snapshot {
            record.push_snapshot(grid, t, &u)?;
        }
        Ok(())
    };
    push(&mut record, 0.0, &m, true)?;
    for k in 1..=opts.n_steps {
        let t = k as f64 * opts.dt;
        m = rk4_step(grid, &m, opts.dt, opts.dealias)?;
        let norm = m.iter().fold(0.0f64, |a, v| if v.is_finite() { a.max(v.abs()) } else { f64::INFINITY });
        if norm > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence { t, norm });
        }
        push(&mut record, t, &m, k % opts.snapshot_stride == 0 || k == opts.n_steps)?;
    }
    record.metadata = RecordMetadata::new(started.elapsed().as_secs_f64());
    Ok(record)
}
