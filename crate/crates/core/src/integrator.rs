//! Nonholonomic variational time stepping.
//!
//! The unknown at each step is the coordinate vector `X` of the discrete
//! vector field `U = Σ_j X_j B_j`. One step solves the residual equation
//! (see [`residual`]) for `X_new` given `X_old`. Both the "explicit" and the
//! "implicit" update are quadratic in `X_new`; the names refer to how the
//! velocity is read off two consecutive configurations, not to solvability.
//!
//! `B_j` realizes `+u ∂_x`, which is the Lie derivative of the field `-u`,
//! so the coordinates are the negated physical velocity. [`run`] takes and
//! records the physical velocity `u = -X`; [`step`] and [`residual`] work
//! on coordinates.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fast;
use crate::spectral::{Grid, GridField};
use crate::trajectory::{EnergySample, RecordMetadata, StepFailureInfo, TrajectoryRecord};

/// Time discretization of the velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Explicit,
    Implicit,
    Average,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Explicit, SchemeKind::Implicit, SchemeKind::Average];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Explicit => "explicit",
            SchemeKind::Implicit => "implicit",
            SchemeKind::Average => "average",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "explicit" => Ok(SchemeKind::Explicit),
            "implicit" => Ok(SchemeKind::Implicit),
            "average" => Ok(SchemeKind::Average),
            "midpoint" => Err(Error::Unsupported(
                "the midpoint rule is not supported: its discrete update contains \
                 third-order terms in U"
                    .into(),
            )),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}' (expected explicit, implicit or average)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Newton,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Bound on the ∞-norm of [`residual`].
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: SolverMethod,
    /// Step for finite-difference Jacobian checks; not used by the solver.
    pub newton_fd_epsilon: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 50, method: SolverMethod::Newton, newton_fd_epsilon: 1e-7 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("solver tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("solver max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, residual {:.3e}, {}",
            self.iterations,
            self.residual_norm,
            if self.converged { "converged" } else { "not converged" }
        )
    }
}

pub fn coordinates_from_velocity(u: &GridField) -> GridField {
    u.scaled(-1.0)
}

pub fn velocity_from_coordinates(x: &GridField) -> GridField {
    x.scaled(-1.0)
}

/// Quadratic terms without the `1/P` factor: `(-X_x ⋆ m, ∂(X ⋆ m))`.
fn quadratic_terms(grid: &Grid, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = grid.helmholtz_slice(x)?;
    let ux = grid.derivative_slice(x)?;
    let c = ux.iter().zip(&m).map(|(a, b)| -a * b).collect();
    let um: Vec<f64> = x.iter().zip(&m).map(|(a, b)| a * b).collect();
    let d = grid.derivative_slice(&um)?;
    Ok((c, d))
}

/// `P` times [`residual`].
fn scaled_residual(
    grid: &Grid,
    scheme: SchemeKind,
    x_new: &[f64],
    x_old: &[f64],
    m_old: &[f64],
    old_terms: &(Vec<f64>, Vec<f64>),
    dt: f64,
) -> Result<Vec<f64>> {
    let m_new = grid.helmholtz_slice(x_new)?;
    let (c_new, d_new) = quadratic_terms(grid, x_new)?;
    let (c_old, d_old) = old_terms;
    debug_assert_eq!(x_old.len(), x_new.len());
    Ok((0..x_new.len())
        .map(|p| {
            let de = m_new[p] - m_old[p];
            let explicit = c_old[p] - d_new[p];
            let implicit = c_new[p] - d_old[p];
            de + dt
                * match scheme {
                    SchemeKind::Explicit => explicit,
                    SchemeKind::Implicit => implicit,
                    SchemeKind::Average => 0.5 * (explicit + implicit),
                }
        })
        .collect())
}

fn check_step_args(grid: &Grid, x_new: &GridField, x_old: &GridField, dt: f64) -> Result<()> {
    grid.check_len(x_new.len())?;
    grid.check_len(x_old.len())?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Update residual in coordinates, with the same `1/P` scaling as the dense tensors:
///
/// ```text
/// explicit  e(X') - e(X) + dt [c(X)  - d(X')]
/// implicit  e(X') - e(X) + dt [c(X') - d(X) ]
/// average   mean of the two
/// ```
///
/// where `e`, `c`, `d` are [`fast::e_term`], [`fast::c_term`], [`fast::d_term`].
pub fn residual(
    grid: &Grid,
    scheme: SchemeKind,
    x_new: &GridField,
    x_old: &GridField,
    dt: f64,
) -> Result<GridField> {
    check_step_args(grid, x_new, x_old, dt)?;
    let m_old = grid.helmholtz_slice(x_old)?;
    let old_terms = quadratic_terms(grid, x_old)?;
    let p = grid.n_points() as f64;
    let r = scaled_residual(grid, scheme, x_new, x_old, &m_old, &old_terms, dt)?;
    Ok(r.into_iter().map(|v| v / p).collect::<Vec<_>>().into())
}

/// Circulant column `j` built from column 0.
fn circulant_column(col0: &[f64], j: usize) -> impl Iterator<Item = f64> + '_ {
    let p = col0.len();
    (0..p).map(move |i| col0[(i + p - j) % p])
}

/// Column-major Jacobian of `P · residual` with respect to `X_new`.
fn assemble_jacobian(grid: &Grid, scheme: SchemeKind, x: &[f64], dt: f64) -> Result<Vec<f64>> {
    let p = grid.n_points();
    let mut e0 = vec![0.0; p];
    e0[0] = 1.0;
    let h0 = grid.helmholtz_slice(&e0)?;
    let d0 = grid.derivative_slice(&e0)?;
    let m = grid.helmholtz_slice(x)?;
    let ux = grid.derivative_slice(x)?;

    let (w_c, w_d) = match scheme {
        SchemeKind::Explicit => (0.0, dt),
        SchemeKind::Implicit => (dt, 0.0),
        SchemeKind::Average => (0.5 * dt, 0.5 * dt),
    };

    let mut jac = vec![0.0; p * p];
    let mut tmp = vec![0.0; p];
    for j in 0..p {
        let hcol: Vec<f64> = circulant_column(&h0, j).collect();
        let dcol: Vec<f64> = circulant_column(&d0, j).collect();
        let col = &mut jac[j * p..(j + 1) * p];
        col.copy_from_slice(&hcol);
        if w_c != 0.0 {
            // ∂c/∂X e_j = -(m ⋆ D e_j + X_x ⋆ H e_j)
            for i in 0..p {
                col[i] -= w_c * (m[i] * dcol[i] + ux[i] * hcol[i]);
            }
        }
        if w_d != 0.0 {
            // ∂d/∂X e_j = D(e_j m_j + X ⋆ H e_j)
            for i in 0..p {
                tmp[i] = x[i] * hcol[i];
            }
            let dx = grid.derivative_slice(&tmp)?;
            for i in 0..p {
                col[i] -= w_d * (m[j] * dcol[i] + dx[i]);
            }
        }
    }
    Ok(jac)
}

/// Analytic Jacobian of `P ·` [`residual`] with respect to `X_new`.
pub fn jacobian(grid: &Grid, scheme: SchemeKind, x_new: &GridField, dt: f64) -> Result<DMatrix<f64>> {
    grid.check_len(x_new.len())?;
    let p = grid.n_points();
    Ok(DMatrix::from_vec(p, p, assemble_jacobian(grid, scheme, x_new, dt)?))
}

/// Central finite-difference Jacobian of `P ·` [`residual`], for checking [`jacobian`].
pub fn finite_difference_jacobian(
    grid: &Grid,
    scheme: SchemeKind,
    x_new: &GridField,
    x_old: &GridField,
    dt: f64,
    epsilon: f64,
) -> Result<DMatrix<f64>> {
    check_step_args(grid, x_new, x_old, dt)?;
    let p = grid.n_points();
    let m_old = grid.helmholtz_slice(x_old)?;
    let old_terms = quadratic_terms(grid, x_old)?;
    let mut jac = DMatrix::zeros(p, p);
    let mut probe = x_new.to_vec();
    for j in 0..p {
        probe[j] = x_new[j] + epsilon;
        let plus = scaled_residual(grid, scheme, &probe, x_old, &m_old, &old_terms, dt)?;
        probe[j] = x_new[j] - epsilon;
        let minus = scaled_residual(grid, scheme, &probe, x_old, &m_old, &old_terms, dt)?;
        probe[j] = x_new[j];
        for i in 0..p {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * epsilon);
        }
    }
    Ok(jac)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Solves one update for `X_new`, starting from `X_old`.
///
/// Fails with [`Error::StepFailure`] (carrying the report) when the solver
/// does not reach `opts.tolerance` within `opts.max_iterations`.
pub fn step(
    grid: &Grid,
    scheme: SchemeKind,
    x_old: &GridField,
    dt: f64,
    opts: &SolverOptions,
) -> Result<(GridField, StepReport)> {
    check_step_args(grid, x_old, x_old, dt)?;
    solve_step(grid, scheme, x_old, dt, opts)
}

/// Solves the update with time step `-dt`, i.e. runs the scheme backwards.
///
/// An explicit step followed by a reversed implicit step (and vice versa)
/// returns to the starting state, since the two residuals are time
/// reflections of each other.
pub fn reverse_step(
    grid: &Grid,
    scheme: SchemeKind,
    x_old: &GridField,
    dt: f64,
    opts: &SolverOptions,
) -> Result<(GridField, StepReport)> {
    check_step_args(grid, x_old, x_old, dt)?;
    solve_step(grid, scheme, x_old, -dt, opts)
}

fn solve_step(
    grid: &Grid,
    scheme: SchemeKind,
    x_old: &GridField,
    dt: f64,
    opts: &SolverOptions,
) -> Result<(GridField, StepReport)> {
    opts.validate()?;
    let p = grid.n_points();
    let inv_p = 1.0 / p as f64;
    let m_old = grid.helmholtz_slice(x_old)?;
    let old_terms = quadratic_terms(grid, x_old)?;

    let mut x = x_old.to_vec();
    let mut r = scaled_residual(grid, scheme, &x, x_old, &m_old, &old_terms, dt)?;
    let mut report = StepReport { iterations: 0, residual_norm: max_abs(&r) * inv_p, converged: false };
    let fail = |report: StepReport, reason: String| Error::StepFailure { t: f64::NAN, reason, report };

    while report.residual_norm > opts.tolerance {
        if report.iterations >= opts.max_iterations {
            return Err(fail(report, "solver did not converge".into()));
        }
        match opts.method {
            SolverMethod::Newton => {
                let jac = assemble_jacobian(grid, scheme, &x, dt)?;
                let a = faer::Mat::<f64>::from_fn(p, p, |i, j| jac[j * p + i]);
                let b = faer::Mat::<f64>::from_fn(p, 1, |i, _| r[i]);
                let delta = a.partial_piv_lu().solve(&b);
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi -= delta[(i, 0)];
                }
            }
            SolverMethod::Picard => {
                // H X' = H X - dt (quadratic terms at the current iterate)
                let (c_cur, d_cur) = quadratic_terms(grid, &x)?;
                let (c_old, d_old) = &old_terms;
                let rhs: Vec<f64> = (0..p)
                    .map(|i| {
                        let explicit = c_old[i] - d_cur[i];
                        let implicit = c_cur[i] - d_old[i];
                        m_old[i]
                            - dt * match scheme {
                                SchemeKind::Explicit => explicit,
                                SchemeKind::Implicit => implicit,
                                SchemeKind::Average => 0.5 * (explicit + implicit),
                            }
                    })
                    .collect();
                x = grid.inverse_helmholtz_slice(&rhs)?;
            }
        }
        report.iterations += 1;
        if x.iter().any(|v| !v.is_finite()) {
            report.residual_norm = f64::INFINITY;
            return Err(fail(report, "iterate became non-finite (singular Jacobian?)".into()));
        }
        r = scaled_residual(grid, scheme, &x, x_old, &m_old, &old_terms, dt)?;
        report.residual_norm = max_abs(&r) * inv_p;
    }
    report.converged = true;
    Ok((GridField::new(x), report))
}

/// Per-step callback.
pub trait Observer {
    fn on_step(&mut self, event: &StepEvent<'_>);
}

#[derive(Debug)]
pub struct StepEvent<'a> {
    pub index: usize,
    pub t: f64,
    pub velocity: &'a GridField,
    pub energy: f64,
    pub report: &'a StepReport,
}

impl<F: FnMut(&StepEvent<'_>)> Observer for F {
    fn on_step(&mut self, event: &StepEvent<'_>) {
        self(event)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    pub n_steps: usize,
    /// Keep a velocity snapshot every `snapshot_stride` steps (the final
    /// state is always kept).
    pub snapshot_stride: usize,
    pub solver: SolverOptions,
}

impl RunOptions {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self { dt, n_steps, snapshot_stride: 1, solver: SolverOptions::default() }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }
}

/// Integrates from the velocity field `u0` for `opts.n_steps` steps.
///
/// A step failure stops the run; the partial record is returned with
/// [`TrajectoryRecord::failure`] set (see [`TrajectoryRecord::into_result`]).
pub fn run(
    grid: &Grid,
    scheme: SchemeKind,
    u0: &GridField,
    opts: &RunOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<TrajectoryRecord> {
    if opts.n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if opts.snapshot_stride == 0 {
        return Err(Error::InvalidArgument("snapshot stride must be at least 1".into()));
    }
    grid.check_len(u0.len())?;
    opts.solver.validate()?;
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", opts.dt)));
    }

    let started = Instant::now();
    let mut record = TrajectoryRecord::new(scheme.name(), grid);
    let mut x = coordinates_from_velocity(u0);
    record.push_snapshot(grid, 0.0, u0)?;
    record.energy.push(EnergySample { t: 0.0, energy: fast::energy(grid, u0)?, iterations: 0, residual: 0.0 });

    for k in 1..=opts.n_steps {
        let t = k as f64 * opts.dt;
        match step(grid, scheme, &x, opts.dt, &opts.solver) {
            Ok((next, report)) => {
                x = next;
                let u = velocity_from_coordinates(&x);
                let energy = fast::energy(grid, &u)?;
                record.energy.push(EnergySample {
                    t,
                    energy,
                    iterations: report.iterations,
                    residual: report.residual_norm,
                });
                if k % opts.snapshot_stride == 0 || k == opts.n_steps {
                    record.push_snapshot(grid, t, &u)?;
                }
                let event = StepEvent { index: k, t, velocity: &u, energy, report: &report };
                for obs in observers.iter_mut() {
                    obs.on_step(&event);
                }
            }
            Err(Error::StepFailure { reason, report, .. }) => {
                let u = velocity_from_coordinates(&x);
                let last_t = (k - 1) as f64 * opts.dt;
                if record.snapshots.last().map(|s| s.t) != Some(last_t) {
                    record.push_snapshot(grid, last_t, &u)?;
                }
                record.failure = Some(StepFailureInfo { t, reason, report });
                break;
            }
            Err(other) => return Err(other),
        }
    }
    record.metadata = RecordMetadata::new(started.elapsed().as_secs_f64());
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{apply_helmholtz, invert_helmholtz, make_grid, spectral_derivative};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Grid, seed: u64, amp: f64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridField::from_fn(grid, |_| amp * rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("Average".parse::<SchemeKind>().unwrap(), SchemeKind::Average);
        assert!(matches!("midpoint".parse::<SchemeKind>(), Err(Error::Unsupported(_))));
        assert!(matches!("rk4".parse::<SchemeKind>(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn residual_of_stationary_sine() {
        let g = make_grid(4, 1.0).unwrap();
        let x = GridField::from_fn(&g, f64::sin);
        let dt = 0.01;
        let r = residual(&g, SchemeKind::Explicit, &x, &x, dt).unwrap();
        // dt/P · [-sin 2x - 2 sin 2x]
        let p = g.n_points() as f64;
        let want = GridField::from_fn(&g, |x| -3.0 * dt / p * (2.0 * x).sin());
        assert!(r.max_abs_diff(&want) < 1e-14);
        let zero = GridField::zeros(&g);
        assert_eq!(residual(&g, SchemeKind::Average, &zero, &zero, dt).unwrap().max_abs(), 0.0);
        assert!(residual(&g, SchemeKind::Average, &zero, &zero, 0.0).is_err());
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let g = make_grid(8, 1.0).unwrap();
        for s in SchemeKind::ALL {
            let (x, rep) = step(&g, s, &GridField::zeros(&g), 0.1, &SolverOptions::default()).unwrap();
            assert_eq!(x.max_abs(), 0.0);
            assert!(rep.converged && rep.iterations == 0);
        }
    }

    #[test]
    fn newton_converges_and_satisfies_residual() {
        let g = make_grid(16, 1.0).unwrap();
        let x0 = GridField::from_fn(&g, |x| 0.5 * x.sin() + 0.2 * (2.0 * x).cos());
        for s in SchemeKind::ALL {
            let (x1, rep) = step(&g, s, &x0, 0.01, &SolverOptions::default()).unwrap();
            assert!(rep.converged && rep.iterations <= 5, "{s}: {rep}");
            let r = residual(&g, s, &x1, &x0, 0.01).unwrap();
            assert!(r.max_abs() <= 1e-12);
            assert!((r.max_abs() - rep.residual_norm).abs() < 1e-15);
        }
    }

    #[test]
    fn picard_agrees_with_newton_for_small_steps() {
        let g = make_grid(8, 1.0).unwrap();
        let x0 = GridField::from_fn(&g, |x| 0.3 * x.sin());
        let picard = SolverOptions { method: SolverMethod::Picard, ..Default::default() };
        for s in SchemeKind::ALL {
            let (a, _) = step(&g, s, &x0, 1e-3, &SolverOptions::default()).unwrap();
            let (b, rep) = step(&g, s, &x0, 1e-3, &picard).unwrap();
            assert!(rep.converged);
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = make_grid(8, 1.0).unwrap();
        let x0 = GridField::from_fn(&g, |x| 0.3 * x.sin());
        let opts = SolverOptions { max_iterations: 1, tolerance: 1e-300, ..Default::default() };
        match step(&g, SchemeKind::Average, &x0, 0.01, &opts) {
            Err(Error::StepFailure { report, .. }) => {
                assert_eq!(report.iterations, 1);
                assert!(!report.converged);
            }
            other => panic!("expected step failure, got {other:?}"),
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = make_grid(10, 0.8).unwrap();
        let x_old = random_field(&g, 1, 0.5);
        let x_new = random_field(&g, 2, 0.5);
        for s in SchemeKind::ALL {
            let a = jacobian(&g, s, &x_new, 0.05).unwrap();
            let f = finite_difference_jacobian(&g, s, &x_new, &x_old, 0.05, 1e-6).unwrap();
            let rel = (&a - &f).norm() / a.norm();
            assert!(rel < 1e-8, "{s}: {rel:e}");
        }
    }

    #[test]
    fn explicit_then_reversed_implicit_returns() {
        let g = make_grid(12, 1.0).unwrap();
        let x0 = GridField::from_fn(&g, |x| 0.4 * x.sin() + 0.1);
        let opts = SolverOptions::default();
        for (fwd, back) in [(SchemeKind::Explicit, SchemeKind::Implicit), (SchemeKind::Implicit, SchemeKind::Explicit)] {
            let (x1, _) = step(&g, fwd, &x0, 0.02, &opts).unwrap();
            let (x2, _) = reverse_step(&g, back, &x1, 0.02, &opts).unwrap();
            assert!(x2.max_abs_diff(&x0) < 1e-11, "{fwd}: {:e}", x2.max_abs_diff(&x0));
        }
        let (x1, _) = step(&g, SchemeKind::Average, &x0, 0.02, &opts).unwrap();
        let (x2, _) = reverse_step(&g, SchemeKind::Average, &x1, 0.02, &opts).unwrap();
        assert!(x2.max_abs_diff(&x0) < 1e-11);
    }

    #[test]
    fn small_step_follows_continuous_vector_field() {
        // Ẋ = H⁻¹[X_x m + ∂(X m)] solves the time-continuous equations.
        let g = make_grid(8, 1.0).unwrap();
        let x0 = GridField::from_fn(&g, f64::sin);
        let m = apply_helmholtz(&g, &x0).unwrap();
        let xx = spectral_derivative(&g, &x0).unwrap();
        let dum = spectral_derivative(&g, &x0.pointwise(&m)).unwrap();
        let rhs = invert_helmholtz(&g, &xx.pointwise(&m).add(&dum)).unwrap();
        let opts = SolverOptions { tolerance: 1e-16, ..Default::default() };
        let quotients: Vec<GridField> = [1e-5, 1e-6, 1e-7]
            .iter()
            .map(|&dt| {
                let (x1, _) = step(&g, SchemeKind::Explicit, &x0, dt, &SolverOptions { max_iterations: 5, ..opts })
                    .or_else(|_| step(&g, SchemeKind::Explicit, &x0, dt, &SolverOptions::default()))
                    .unwrap();
                x1.sub(&x0).scaled(1.0 / dt)
            })
            .collect();
        // Richardson on the first two levels removes the O(dt) term.
        let extrapolated = quotients[1].scaled(10.0 / 9.0).sub(&quotients[0].scaled(1.0 / 9.0));
        assert!(extrapolated.max_abs_diff(&rhs) / rhs.max_abs() < 1e-6);
        assert!(quotients[2].max_abs_diff(&rhs) / rhs.max_abs() < 1e-5);
    }

    #[test]
    fn run_zero_and_guards() {
        let g = make_grid(8, 1.0).unwrap();
        let zero = GridField::zeros(&g);
        let rec = run(&g, SchemeKind::Average, &zero, &RunOptions::new(0.1, 5), &mut []).unwrap();
        assert!(rec.failure.is_none());
        assert_eq!(rec.energy.len(), 6);
        assert!(rec.energy.iter().all(|e| e.energy == 0.0));
        assert!(rec.snapshots.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
        assert!(run(&g, SchemeKind::Average, &zero, &RunOptions::new(0.1, 0), &mut []).is_err());
    }

    #[test]
    fn run_observers_and_stride() {
        let g = make_grid(8, 1.0).unwrap();
        let u0 = GridField::from_fn(&g, |x| 0.2 * x.sin());
        let mut seen = Vec::new();
        let mut obs = |e: &StepEvent<'_>| seen.push((e.index, e.report.converged));
        let rec = run(&g, SchemeKind::Average, &u0, &RunOptions::new(0.01, 7).with_stride(3), &mut [&mut obs])
            .unwrap();
        assert_eq!(seen.len(), 7);
        assert!(seen.iter().all(|(_, c)| *c));
        let times: Vec<f64> = rec.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times.len(), 4); // 0, 3, 6, 7
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }
}
