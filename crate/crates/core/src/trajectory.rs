//! Trajectory records and their on-disk formats.
//!
//! Velocity CSV: header `t,u_0,...,u_{P-1}`, one row per snapshot.
//! Energy CSV: header `t,energy,iterations,residual`, one row per step.
//! Reals are written as `{:.16e}` (17 significant digits, round-trips f64).

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::StepReport;
use crate::spectral::{Grid, GridField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFailureInfo {
    /// Time the failed step was aiming for.
    pub t: f64,
    pub reason: String,
    pub report: StepReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub code_version: String,
    pub wall_time_seconds: f64,
    /// Echo of the configuration that produced the record, if any.
    pub config: Option<serde_json::Value>,
}

impl RecordMetadata {
    pub fn new(wall_time_seconds: f64) -> Self {
        Self { code_version: crate::VERSION.to_string(), wall_time_seconds, config: None }
    }
}

impl Default for RecordMetadata {
    fn default() -> Self {
        Self::new(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// Scheme name (`explicit`, `implicit`, `average` or `reference`).
    pub label: String,
    pub n_points: usize,
    pub alpha: f64,
    /// Velocity snapshots.
    pub snapshots: Vec<Snapshot>,
    /// Momentum snapshots at the same times as `snapshots`.
    pub momentum: Vec<Snapshot>,
    pub energy: Vec<EnergySample>,
    pub failure: Option<StepFailureInfo>,
    pub metadata: RecordMetadata,
}

impl TrajectoryRecord {
    pub fn new(label: &str, grid: &Grid) -> Self {
        Self {
            label: label.to_string(),
            n_points: grid.n_points(),
            alpha: grid.alpha(),
            snapshots: Vec::new(),
            momentum: Vec::new(),
            energy: Vec::new(),
            failure: None,
            metadata: RecordMetadata::default(),
        }
    }

    pub(crate) fn push_snapshot(&mut self, grid: &Grid, t: f64, u: &GridField) -> Result<()> {
        let m = grid.helmholtz_slice(u)?;
        self.snapshots.push(Snapshot { t, values: u.to_vec() });
        self.momentum.push(Snapshot { t, values: m });
        Ok(())
    }

    pub fn final_velocity(&self) -> Option<GridField> {
        self.snapshots.last().map(|s| GridField::new(s.values.clone()))
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.energy.iter().map(|e| e.energy).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.energy.iter().map(|e| e.t).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Turns a flagged partial record into [`Error::StepFailure`].
    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            None => Ok(self),
            Some(f) => Err(Error::StepFailure { t: f.t, reason: f.reason, report: f.report }),
        }
    }

    pub fn write_velocity_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for j in 0..self.n_points {
            write!(w, ",u_{j}")?;
        }
        writeln!(w)?;
        for s in &self.snapshots {
            write!(w, "{:.16e}", s.t)?;
            for v in &s.values {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_energy_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,energy,iterations,residual")?;
        for e in &self.energy {
            writeln!(w, "{:.16e},{:.16e},{},{:.16e}", e.t, e.energy, e.iterations, e.residual)?;
        }
        Ok(())
    }

    /// Everything except the snapshots, as pretty JSON.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label,
            "n_points": self.n_points,
            "alpha": self.alpha,
            "snapshots": self.snapshots.len(),
            "steps": self.energy.len().saturating_sub(1),
            "final_time": self.final_time(),
            "failure": self.failure,
            "metadata": self.metadata,
        })
    }
}

/// Reads a velocity CSV back into `(t, values)` rows.
pub fn read_velocity_csv(text: &str) -> Result<Vec<Snapshot>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?;
    let width = header.split(',').count();
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let nums = line
                .split(',')
                .map(|f| f.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad CSV value '{f}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if nums.len() != width {
                return Err(Error::LengthMismatch { expected: width, found: nums.len() });
            }
            Ok(Snapshot { t: nums[0], values: nums[1..].to_vec() })
        })
        .collect()
}

/// Python/matplotlib script that renders a waterfall of `u(x, t)` and the energy trace.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
# Usage: python3 plot.py [run-directory]
import sys, os
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

d = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
u = np.loadtxt(os.path.join(d, "trajectory.csv"), delimiter=",", skiprows=1, ndmin=2)
e = np.loadtxt(os.path.join(d, "energy.csv"), delimiter=",", skiprows=1, ndmin=2)
t, vals = u[:, 0], u[:, 1:]
P = vals.shape[1]
x = -np.pi + 2 * np.pi * np.arange(P) / P

fig, (a, b) = plt.subplots(1, 2, figsize=(12, 5))
span = max(np.ptp(vals), 1e-12)
step = max(1, len(t) // 40)
for n, i in enumerate(range(0, len(t), step)):
    a.plot(x, vals[i] + 0.05 * span * n, "k", lw=0.6)
a.set_xlabel("x")
a.set_title("u(x, t) waterfall")
b.plot(e[:, 0], e[:, 1])
b.set_xlabel("t")
b.set_ylabel("energy")
b.set_title("energy trace")
fig.tight_layout()
fig.savefig(os.path.join(d, "plot.png"), dpi=120)
"#;
