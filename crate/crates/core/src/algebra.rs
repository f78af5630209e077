//! Dense matrix realization of discrete diffeomorphisms and discrete vector
//! fields, for small grids.
//!
//! Matrices act on mode-indexed coefficient vectors (row/column `r` holds
//! mode `r - N`). A vector field sampled as `X` becomes
//!
//! ```text
//! U = F T_X F⁻¹ D = Σ_j X_j B_j,      B_j = F I_j F⁻¹ D
//! ```
//!
//! The flat pairing only sees the mode-0 row of an operator with its
//! trailing `D` removed, so every [`OperatorMatrix`] that ends in `D` keeps
//! that "prefix" alongside its entries.
//!
//! Everything here is O(P³) or worse and exists to check the FFT path in
//! [`crate::fast`] term by term.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::SchemeKind;
use crate::spectral::{Grid, GridField};

/// Largest point count for which [`MatrixAlgebra::tensors`] will run.
pub const MAX_TENSOR_POINTS: usize = 31;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorRole {
    Diffeomorphism,
    VectorField,
    Basis,
    Product,
}

/// A dense `P × P` complex operator on mode coefficients.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    role: OperatorRole,
    entries: DMatrix<Complex64>,
    /// `A` such that `entries = A · D`, when known.
    prefix: Option<DMatrix<Complex64>>,
}

impl OperatorMatrix {
    pub fn role(&self) -> OperatorRole {
        self.role
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Wraps an arbitrary invertible matrix as a discrete diffeomorphism.
    pub fn diffeomorphism(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidArgument("operator must be square".into()));
        }
        Ok(Self { role: OperatorRole::Diffeomorphism, entries, prefix: None })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            role: OperatorRole::Diffeomorphism,
            entries: DMatrix::identity(dim, dim),
            prefix: None,
        }
    }

    /// Largest entry modulus in the column of mode 0.
    pub fn mode_zero_column_norm(&self) -> f64 {
        let n = self.dim() / 2;
        self.entries.column(n).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self · other`; the product keeps a prefix when `other` has one.
    pub fn compose(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            role: OperatorRole::Product,
            entries: &self.entries * &other.entries,
            prefix: other.prefix.as_ref().map(|p| &self.entries * p),
        }
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> DMatrix<Complex64> {
        &self.entries * &other.entries - &other.entries * &self.entries
    }

    /// Mode-0 row of the prefix, i.e. the row the flat pairing reads.
    fn stripped_row(&self) -> Result<Vec<Complex64>> {
        let prefix = self
            .prefix
            .as_ref()
            .ok_or(Error::UnsupportedOperand("flat pairing needs an operator of the form A·D"))?;
        let n = prefix.nrows() / 2;
        Ok(prefix.row(n).iter().copied().collect())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        (&self.entries - &other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Weights `w_k = 1 + αk²` of the flat pairing on stripped coefficients.
///
/// For `k ≠ 0` this reproduces `U_0k V̄_0k (α - D_kk⁻²)` exactly; at `k = 0`
/// the weight is 1, matching `H_00 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatWeight(Vec<f64>);

impl FlatWeight {
    pub fn new(grid: &Grid) -> Self {
        Self(grid.modes().map(|k| grid.helmholtz_symbol(k)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Time rules relating consecutive discrete diffeomorphisms to a velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeRule {
    Explicit,
    Implicit,
    Midpoint,
    Average,
}

impl From<SchemeKind> for TimeRule {
    fn from(s: SchemeKind) -> Self {
        match s {
            SchemeKind::Explicit => TimeRule::Explicit,
            SchemeKind::Implicit => TimeRule::Implicit,
            SchemeKind::Average => TimeRule::Average,
        }
    }
}

/// Dense transform, derivative and basis for one grid.
#[derive(Debug, Clone)]
pub struct MatrixAlgebra {
    grid: Grid,
    fourier: DMatrix<Complex64>,
    fourier_inv: DMatrix<Complex64>,
    derivative: DMatrix<Complex64>,
    weights: FlatWeight,
}

impl MatrixAlgebra {
    pub fn new(grid: &Grid) -> Self {
        let p = grid.n_points();
        let norm = 1.0 / (p as f64).sqrt();
        let modes: Vec<i64> = grid.modes().collect();
        let fourier = DMatrix::from_fn(p, p, |r, j| {
            Complex64::from_polar(norm, -(modes[r] as f64) * grid.points()[j])
        });
        let fourier_inv = fourier.adjoint();
        let derivative = DMatrix::from_fn(p, p, |r, c| {
            if r == c {
                Complex64::new(0.0, modes[r] as f64)
            } else {
                ZERO
            }
        });
        Self { grid: grid.clone(), fourier, fourier_inv, derivative, weights: FlatWeight::new(grid) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn fourier(&self) -> &DMatrix<Complex64> {
        &self.fourier
    }

    pub fn weights(&self) -> &FlatWeight {
        &self.weights
    }

    fn multiplication(&self, samples: &[f64]) -> DMatrix<Complex64> {
        let diag = DMatrix::from_fn(samples.len(), samples.len(), |r, c| {
            if r == c {
                Complex64::new(samples[r], 0.0)
            } else {
                ZERO
            }
        });
        &self.fourier * diag * &self.fourier_inv
    }

    /// `B_j = F I_j F⁻¹ D`.
    pub fn basis_matrix(&self, j: usize) -> Result<OperatorMatrix> {
        let p = self.grid.n_points();
        if j >= p {
            return Err(Error::IndexOutOfRange { index: j, len: p });
        }
        // F I_j F⁻¹ is the outer product of column j of F with row j of F⁻¹.
        let prefix = self.fourier.column(j) * self.fourier_inv.row(j);
        Ok(OperatorMatrix {
            role: OperatorRole::Basis,
            entries: &prefix * &self.derivative,
            prefix: Some(prefix),
        })
    }

    /// `F T_X F⁻¹ D = Σ_j X_j B_j`.
    pub fn vector_field_matrix(&self, x: &GridField) -> Result<OperatorMatrix> {
        self.grid.check_len(x.len())?;
        let prefix = self.multiplication(x);
        Ok(OperatorMatrix {
            role: OperatorRole::VectorField,
            entries: &prefix * &self.derivative,
            prefix: Some(prefix),
        })
    }

    /// `⟨U♭, V⟩ = Σ_k w_k ŭ_k conj(v̆_k)` on stripped mode-0 rows.
    pub fn flat_pairing(&self, u: &OperatorMatrix, v: &OperatorMatrix) -> Result<Complex64> {
        let a = u.stripped_row()?;
        let b = v.stripped_row()?;
        Ok(self.pair_rows(&a, &b))
    }

    fn pair_rows(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter()
            .zip(b)
            .zip(self.weights.as_slice())
            .map(|((x, y), w)| x * y.conj() * *w)
            .sum()
    }

    /// Dense `C`, `D` and `E` assembled from basis products and flat pairings.
    pub fn tensors(&self) -> Result<TensorCDE> {
        let p = self.grid.n_points();
        if p > MAX_TENSOR_POINTS {
            return Err(Error::ResourceLimit {
                what: "dense C/D/E tensors",
                points: p,
                limit: MAX_TENSOR_POINTS,
            });
        }
        let basis: Vec<OperatorMatrix> =
            (0..p).map(|j| self.basis_matrix(j)).collect::<Result<_>>()?;
        let rows: Vec<Vec<Complex64>> =
            basis.iter().map(|b| b.stripped_row()).collect::<Result<_>>()?;

        let mut c = vec![ZERO; p * p * p];
        let mut d = vec![ZERO; p * p * p];
        let mut e = vec![ZERO; p * p];
        for a in 0..p {
            for b in 0..p {
                e[a * p + b] = self.pair_rows(&rows[a], &rows[b]);
                // product = B_a B_b
                let product = basis[a].compose(&basis[b]).stripped_row()?;
                for j in 0..p {
                    let value = self.pair_rows(&rows[j], &product);
                    // C_ijp = ⟨B_j♭, B_i B_p⟩ with (i, p) = (a, b)
                    c[(a * p + j) * p + b] = value;
                    // D_ijp = ⟨B_i♭, B_p B_j⟩ with (p, j) = (a, b), i = j here
                    d[(j * p + b) * p + a] = value;
                }
            }
        }
        Ok(TensorCDE { n_points: p, alpha: self.grid.alpha(), c, d, e })
    }

    /// Advances `q` by one step of `rule` with velocity `u`.
    pub fn evolve_q(
        &self,
        q: &OperatorMatrix,
        u: &OperatorMatrix,
        dt: f64,
        rule: TimeRule,
    ) -> Result<OperatorMatrix> {
        evolve_q(q, u, dt, rule)
    }
}

fn lu_solve(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let lu = a.clone().lu();
    lu.solve(b).ok_or_else(|| Error::SingularSolve { condition: condition_estimate(a) })
}

fn inverse(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularSolve { condition: condition_estimate(a) })
}

/// Ratio of extreme singular values (infinite when singular).
fn condition_estimate(a: &DMatrix<Complex64>) -> f64 {
    let s = a.clone().singular_values();
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Relative change below which the average rule's fixed point is accepted.
const AVERAGE_RULE_TOL: f64 = 1e-10;
const AVERAGE_RULE_MAX_ITER: usize = 50;

/// One step of the discrete diffeomorphism path.
///
/// ```text
/// explicit   q' - q = dt U q
/// implicit   q' - q = dt U q'
/// midpoint   q' - q = dt U (q + q')/2
/// average    (q' - q)(q⁻¹ + q'⁻¹)/2 = dt U
/// ```
pub fn evolve_q(
    q: &OperatorMatrix,
    u: &OperatorMatrix,
    dt: f64,
    rule: TimeRule,
) -> Result<OperatorMatrix> {
    let n = q.dim();
    if u.dim() != n {
        return Err(Error::LengthMismatch { expected: n, found: u.dim() });
    }
    let id = DMatrix::<Complex64>::identity(n, n);
    let qm = &q.entries;
    let um = &u.entries;
    let dtc = Complex64::new(dt, 0.0);
    let next = match rule {
        TimeRule::Explicit => qm + um * qm * dtc,
        TimeRule::Implicit => lu_solve(&(&id - um * dtc), qm)?,
        TimeRule::Midpoint => {
            let half = Complex64::new(0.5 * dt, 0.0);
            lu_solve(&(&id - um * half), &((&id + um * half) * qm))?
        }
        TimeRule::Average => {
            let q_inv = inverse(qm)?;
            let mut next = qm + um * qm * dtc;
            let two_dt = Complex64::new(2.0 * dt, 0.0);
            let mut converged = false;
            for _ in 0..AVERAGE_RULE_MAX_ITER {
                let sum = &q_inv + inverse(&next)?;
                let candidate = qm + um * inverse(&sum)? * two_dt;
                let change = (&candidate - &next).norm() / candidate.norm().max(1.0);
                next = candidate;
                if change < AVERAGE_RULE_TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::SingularSolve { condition: condition_estimate(&next) });
            }
            next
        }
    };
    Ok(OperatorMatrix { role: OperatorRole::Diffeomorphism, entries: next, prefix: None })
}

/// Velocity implied by two consecutive configurations under `rule`.
pub fn velocity_between(
    q: &OperatorMatrix,
    q_next: &OperatorMatrix,
    dt: f64,
    rule: TimeRule,
) -> Result<DMatrix<Complex64>> {
    let diff = (&q_next.entries - &q.entries) / Complex64::new(dt, 0.0);
    Ok(match rule {
        TimeRule::Explicit => diff * inverse(&q.entries)?,
        TimeRule::Implicit => diff * inverse(&q_next.entries)?,
        TimeRule::Midpoint => {
            diff * inverse(&(&q.entries + &q_next.entries))? * Complex64::new(2.0, 0.0)
        }
        TimeRule::Average => {
            (diff * (inverse(&q.entries)? + inverse(&q_next.entries)?)) * Complex64::new(0.5, 0.0)
        }
    })
}

/// Dense rank-3 tensors `C_ijp`, `D_ijp` and the matrix `E_ip`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCDE {
    n_points: usize,
    alpha: f64,
    /// Row-major `[i][j][p]`.
    c: Vec<Complex64>,
    /// Row-major `[i][j][p]`.
    d: Vec<Complex64>,
    /// Row-major `[i][p]`.
    e: Vec<Complex64>,
}

impl TensorCDE {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn c(&self, i: usize, j: usize, p: usize) -> Complex64 {
        self.c[(i * self.n_points + j) * self.n_points + p]
    }

    pub fn d(&self, i: usize, j: usize, p: usize) -> Complex64 {
        self.d[(i * self.n_points + j) * self.n_points + p]
    }

    pub fn e(&self, i: usize, p: usize) -> Complex64 {
        self.e[i * self.n_points + p]
    }

    /// `Σ_i X_i E_ip`.
    pub fn contract_e(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_points;
        (0..n).map(|p| (0..n).map(|i| x[i] * self.e(i, p)).sum()).collect()
    }

    /// `Σ_ij conj(X_i) X_j C_ijp`.
    pub fn contract_c(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_points;
        let mut out = vec![ZERO; n];
        for i in 0..n {
            for j in 0..n {
                let w = x[i].conj() * x[j];
                for (p, o) in out.iter_mut().enumerate() {
                    *o += w * self.c(i, j, p);
                }
            }
        }
        out
    }

    /// `Σ_ij X_i conj(X_j) D_ijp`.
    pub fn contract_d(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_points;
        let mut out = vec![ZERO; n];
        for i in 0..n {
            for j in 0..n {
                let w = x[i] * x[j].conj();
                for (p, o) in out.iter_mut().enumerate() {
                    *o += w * self.d(i, j, p);
                }
            }
        }
        out
    }

    /// Discrete update residual evaluated with the dense tensors.
    ///
    /// ```text
    /// explicit  E(X' - X) + dt [C(X, X) - D(X', X')]
    /// implicit  E(X' - X) + dt [C(X', X') - D(X, X)]
    /// average   mean of the two
    /// ```
    pub fn oracle_residual(
        &self,
        scheme: SchemeKind,
        x_new: &GridField,
        x_old: &GridField,
        dt: f64,
    ) -> Result<Vec<Complex64>> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        for len in [x_new.len(), x_old.len()] {
            if len != self.n_points {
                return Err(Error::LengthMismatch { expected: self.n_points, found: len });
            }
        }
        let cx = |f: &GridField| f.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>();
        let (xn, xo) = (cx(x_new), cx(x_old));
        let e_new = self.contract_e(&xn);
        let e_old = self.contract_e(&xo);
        let explicit = || -> Vec<Complex64> {
            let c = self.contract_c(&xo);
            let d = self.contract_d(&xn);
            (0..self.n_points).map(|p| e_new[p] - e_old[p] + (c[p] - d[p]) * dt).collect()
        };
        let implicit = || -> Vec<Complex64> {
            let c = self.contract_c(&xn);
            let d = self.contract_d(&xo);
            (0..self.n_points).map(|p| e_new[p] - e_old[p] + (c[p] - d[p]) * dt).collect()
        };
        Ok(match scheme {
            SchemeKind::Explicit => explicit(),
            SchemeKind::Implicit => implicit(),
            SchemeKind::Average => {
                explicit().iter().zip(implicit()).map(|(a, b)| (a + b) * 0.5).collect()
            }
        })
    }

    /// Writes a one-line JSON header followed by the raw little-endian arrays.
    ///
    /// Layout after the newline: `C`, then `D`, then `E`, each row-major,
    /// each entry as two `f64` (re, im).
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let header = DumpHeader {
            format: DUMP_FORMAT.to_string(),
            version: 1,
            n_points: self.n_points,
            alpha: self.alpha,
            arrays: vec![
                DumpArray { name: "C".into(), shape: vec![self.n_points; 3] },
                DumpArray { name: "D".into(), shape: vec![self.n_points; 3] },
                DumpArray { name: "E".into(), shape: vec![self.n_points; 2] },
            ],
            element: "complex128 little-endian (re, im), row-major".into(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for z in self.c.iter().chain(&self.d).chain(&self.e) {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::InvalidArgument("tensor dump has no header line".into()))?;
        let header: DumpHeader = serde_json::from_slice(&bytes[..split])?;
        if header.format != DUMP_FORMAT || header.version != 1 {
            return Err(Error::InvalidArgument(format!(
                "unsupported tensor dump {} v{}",
                header.format, header.version
            )));
        }
        let n = header.n_points;
        let body = &bytes[split + 1..];
        let expected = (2 * n * n * n + n * n) * 16;
        if body.len() != expected {
            return Err(Error::LengthMismatch { expected, found: body.len() });
        }
        let mut values = body.chunks_exact(16).map(|chunk| {
            let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
            let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
            Complex64::new(re, im)
        });
        let c = values.by_ref().take(n * n * n).collect();
        let d = values.by_ref().take(n * n * n).collect();
        let e = values.collect();
        Ok(Self { n_points: n, alpha: header.alpha, c, d, e })
    }
}

const DUMP_FORMAT: &str = "epdiff-tensors";

#[derive(Debug, Serialize, Deserialize)]
struct DumpHeader {
    format: String,
    version: u32,
    n_points: usize,
    alpha: f64,
    arrays: Vec<DumpArray>,
    element: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpArray {
    name: String,
    shape: Vec<usize>,
}
