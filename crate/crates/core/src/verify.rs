//! Self-check suite: dense-oracle equivalence, Jacobian, energy identities,
//! resource guard, and a mutation check showing the oracle comparison is
//! sensitive to a flipped conjugation.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{MatrixAlgebra, TensorCDE};
use crate::error::{Error, Result};
use crate::fast;
use crate::integrator::{self, SchemeKind, SolverOptions};
use crate::spectral::{make_grid, Grid, GridField};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

pub const DEFAULT_SEED: u64 = 0x5eed;

fn relative(a: &[Complex64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let den = b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    num / den
}

fn random_field(grid: &Grid, rng: &mut ChaCha8Rng) -> GridField {
    GridField::from_fn(grid, |_| rng.gen_range(-1.0..1.0))
}

/// Largest relative mismatch between the tensor contractions and `terms`.
fn oracle_mismatch(
    grid: &Grid,
    tensors: &TensorCDE,
    samples: usize,
    rng: &mut ChaCha8Rng,
    c_term: impl Fn(&Grid, &GridField) -> Result<GridField>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random_field(grid, rng);
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        worst = worst
            .max(relative(&tensors.contract_e(&xc), &fast::e_term(grid, &x)?))
            .max(relative(&tensors.contract_c(&xc), &c_term(grid, &x)?))
            .max(relative(&tensors.contract_d(&xc), &fast::d_term(grid, &x)?));
    }
    Ok(worst)
}

/// `c_term` with the derivative symbol conjugated (`ik → -ik`).
fn mutated_c_term(grid: &Grid, x: &GridField) -> Result<GridField> {
    let p = grid.n_points() as f64;
    let ux = grid.apply_symbol(x, |k| Complex64::new(0.0, -(k as f64)))?;
    let m = grid.helmholtz_slice(x)?;
    Ok(ux.iter().zip(&m).map(|(a, b)| -a * b / p).collect::<Vec<_>>().into())
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Result<(bool, String)>) {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        self.checks.push(CheckResult { name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() });
    }
}

pub fn run_suite(seed: u64) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = Suite { checks: Vec::new() };

    let mut tensors = Vec::new();
    suite.check("tensor assembly (P = 5, 7, 9)", || {
        for n in [2, 3, 4] {
            let g = make_grid(n, 1.0)?;
            let t = MatrixAlgebra::new(&g).tensors()?;
            tensors.push((g, t));
        }
        Ok((true, "assembled".into()))
    });

    suite.check("oracle equivalence of e/c/d terms", || {
        let mut worst = 0.0f64;
        for (g, t) in &tensors {
            worst = worst.max(oracle_mismatch(g, t, 100, &mut rng, fast::c_term)?);
        }
        Ok((worst <= 1e-10 && !tensors.is_empty(), format!("max relative error {worst:.3e} (tolerance 1e-10)")))
    });

    suite.check("mutation sensitivity (conjugated derivative in c)", || {
        let (g, t) = tensors.first().ok_or_else(|| Error::InvalidArgument("no tensors".into()))?;
        let err = oracle_mismatch(g, t, 5, &mut rng, mutated_c_term)?;
        Ok((err > 1e-3, format!("mutated relative error {err:.3e} (must be detected)")))
    });

    suite.check("update residual matches dense oracle (P = 7)", || {
        let (g, t) = &tensors[1];
        let mut worst = 0.0f64;
        for scheme in SchemeKind::ALL {
            let xn = random_field(g, &mut rng);
            let xo = random_field(g, &mut rng);
            let fast_r = integrator::residual(g, scheme, &xn, &xo, 0.05)?;
            let dense = t.oracle_residual(scheme, &xn, &xo, 0.05)?;
            worst = worst.max(relative(&dense, &fast_r));
        }
        Ok((worst <= 1e-10, format!("max relative error {worst:.3e}")))
    });

    suite.check("tensor resource guard (P = 33)", || {
        let g = make_grid(16, 1.0)?;
        match MatrixAlgebra::new(&g).tensors() {
            Err(e @ Error::ResourceLimit { .. }) => Ok((true, e.to_string())),
            Err(e) => Ok((false, format!("unexpected error: {e}"))),
            Ok(_) => Ok((false, "tensors were assembled".into())),
        }
    });

    suite.check("energy and continuum identities (u = sin x)", || {
        let g = make_grid(8, 1.0)?;
        let x = GridField::from_fn(&g, f64::sin);
        let p = g.n_points() as f64;
        let e = (fast::energy(&g, &x)? - PI).abs();
        let sin2 = GridField::from_fn(&g, |x| (2.0 * x).sin());
        let de = fast::e_term(&g, &x)?.scaled(p).max_abs_diff(&x.scaled(2.0));
        let dc = fast::c_term(&g, &x)?.scaled(p).max_abs_diff(&sin2.scaled(-1.0));
        let dd = fast::d_term(&g, &x)?.scaled(p).max_abs_diff(&sin2.scaled(2.0));
        let worst = e.max(de).max(dc).max(dd);
        Ok((worst <= 1e-10, format!("max deviation {worst:.3e}")))
    });

    suite.check("energy equals π times the flat pairing (P = 9)", || {
        let (g, _) = &tensors[2];
        let alg = MatrixAlgebra::new(g);
        let x = random_field(g, &mut rng);
        let u = alg.vector_field_matrix(&x)?;
        let pairing = alg.flat_pairing(&u, &u)?;
        let e = fast::energy(g, &x)?;
        let err = (PI * pairing.re - e).abs() / e + pairing.im.abs();
        Ok((err <= 1e-10, format!("relative error {err:.3e}")))
    });

    suite.check("Newton Jacobian vs finite differences (P = 33)", || {
        let g = make_grid(16, 1.0)?;
        let xo = random_field(&g, &mut rng).scaled(0.5);
        let xn = random_field(&g, &mut rng).scaled(0.5);
        let eps = SolverOptions::default().newton_fd_epsilon;
        let mut worst = 0.0f64;
        for scheme in SchemeKind::ALL {
            let a = integrator::jacobian(&g, scheme, &xn, 0.01)?;
            let f = integrator::finite_difference_jacobian(&g, scheme, &xn, &xo, 0.01, eps)?;
            worst = worst.max((&a - &f).norm() / a.norm());
        }
        Ok((worst <= 1e-6, format!("max relative error {worst:.3e}")))
    });

    suite.check("explicit/implicit time reflection", || {
        let g = make_grid(16, 1.0)?;
        let x0 = GridField::from_fn(&g, |x| 0.3 * x.sin() + 0.1 * (2.0 * x).cos());
        let opts = SolverOptions::default();
        let (x1, _) = integrator::step(&g, SchemeKind::Explicit, &x0, 0.01, &opts)?;
        let (back, _) = integrator::reverse_step(&g, SchemeKind::Implicit, &x1, 0.01, &opts)?;
        let err = back.max_abs_diff(&x0);
        Ok((err <= 10.0 * opts.tolerance * g.n_points() as f64, format!("return error {err:.3e}")))
    });

    let passed = suite.checks.iter().all(|c| c.passed);
    VerifyReport { passed, seed, checks: suite.checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let report = run_suite(DEFAULT_SEED);
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert!(report.passed);
    }
}
