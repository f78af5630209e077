//! Truncated Fourier space on the periodic interval [-π, π).
//!
//! A [`Grid`] with `N` modes carries `P = 2N + 1` equispaced collocation
//! points `x_j = -π + 2πj/P`. Fields are sampled at those points
//! ([`GridField`]) and transformed with the unitary DFT
//!
//! ```text
//! coeff[k] = P^(-1/2) Σ_j field[j] · exp(-i k x_j),   k = -N..N
//! ```
//!
//! so that `coeff[k]` is (up to `√P`) the amplitude of `e^{ikx}`. The
//! differentiation symbol is `ik` and the Helmholtz operator
//! `H = Id - α D²` has symbol `1 + αk²`.
//!
//! `alpha` multiplies `u_xx` directly: in the usual Camassa-Holm notation
//! `m = u - α² u_xx`, this crate's `alpha` is that `α²`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Imaginary parts above this (relative to the field's magnitude) after a
/// transform that should return a real field are treated as internal errors.
pub const REALITY_TOLERANCE: f64 = 1e-10;

/// Spatial and spectral discretization parameters.
#[derive(Clone)]
pub struct Grid {
    n_modes: usize,
    alpha: f64,
    points: Vec<f64>,
    /// Mode number for each slot of an unshifted FFT buffer.
    fft_modes: Vec<i64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_modes", &self.n_modes)
            .field("n_points", &self.n_points())
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_modes == other.n_modes && self.alpha == other.alpha
    }
}

impl Grid {
    pub fn new(n_modes: usize, alpha: f64) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidArgument("n_modes must be at least 1".into()));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        let p = 2 * n_modes + 1;
        let spacing = 2.0 * PI / p as f64;
        let points = (0..p).map(|j| -PI + j as f64 * spacing).collect();
        let fft_modes = (0..p)
            .map(|q| if q <= n_modes { q as i64 } else { q as i64 - p as i64 })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            n_modes,
            alpha,
            points,
            fft_modes,
            forward: planner.plan_fft_forward(p),
            inverse: planner.plan_fft_inverse(p),
        })
    }

    /// Returns a grid with the same resolution and a different Helmholtz coefficient.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.n_modes, alpha)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_points(&self) -> usize {
        2 * self.n_modes + 1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_points() as f64
    }

    /// Mode numbers `-N..=N` in coefficient order.
    pub fn modes(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n_modes as i64;
        -n..=n
    }

    /// Position of mode `k` inside a [`SpectralCoeffs`] vector.
    pub fn mode_index(&self, k: i64) -> Option<usize> {
        let n = self.n_modes as i64;
        (-n..=n).contains(&k).then(|| (k + n) as usize)
    }

    /// Helmholtz symbol `1 + αk²`.
    pub fn helmholtz_symbol(&self, k: i64) -> f64 {
        1.0 + self.alpha * (k * k) as f64
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if found == self.n_points() {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected: self.n_points(), found })
        }
    }

    /// Unnormalized forward FFT of real samples (slot `q` holds mode `fft_modes[q]`).
    fn fft_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Applies a Fourier multiplier to a real field and returns the real result.
    ///
    /// `symbol(k)` must satisfy `symbol(-k) = conj(symbol(k))` for the output
    /// to be real; the imaginary residue is checked, not silently dropped.
    pub(crate) fn apply_symbol(
        &self,
        values: &[f64],
        symbol: impl Fn(i64) -> Complex64,
    ) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        let mut buf = self.fft_real(values);
        for (c, &k) in buf.iter_mut().zip(&self.fft_modes) {
            *c *= symbol(k);
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n_points() as f64;
        real_part(&buf, scale)
    }

    pub(crate) fn derivative_slice(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.apply_symbol(values, |k| Complex64::new(0.0, k as f64))
    }

    pub(crate) fn helmholtz_slice(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.apply_symbol(values, |k| Complex64::new(self.helmholtz_symbol(k), 0.0))
    }

    pub(crate) fn inverse_helmholtz_slice(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.apply_symbol(values, |k| Complex64::new(1.0 / self.helmholtz_symbol(k), 0.0))
    }
}

fn real_part(buf: &[Complex64], scale: f64) -> Result<Vec<f64>> {
    let mut max_imag = 0.0f64;
    let mut max_real = 0.0f64;
    let out = buf
        .iter()
        .map(|c| {
            max_imag = max_imag.max(c.im.abs());
            max_real = max_real.max(c.re.abs());
            c.re * scale
        })
        .collect();
    let tolerance = REALITY_TOLERANCE * max_real.max(1.0);
    if max_imag > tolerance {
        return Err(Error::NonReal { max_imag: max_imag * scale, tolerance: tolerance * scale });
    }
    Ok(out)
}

/// Real samples `u(x_j)` at the grid's collocation points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridField(Vec<f64>);

impl GridField {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self(vec![0.0; grid.n_points()])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64) -> f64) -> Self {
        Self(grid.points().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    /// Elementwise product (the `⋆` product on grid values).
    pub fn pointwise(&self, other: &GridField) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn sub(&self, other: &GridField) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &GridField) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Largest absolute difference to another field of the same length.
    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

impl Deref for GridField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GridField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for GridField {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Fourier coefficients ordered by mode `-N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs(Vec<Complex64>);

impl SpectralCoeffs {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self(coeffs)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); grid.n_points()])
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn n_modes(&self) -> i64 {
        (self.0.len() / 2) as i64
    }

    /// Coefficient of mode `k`; panics if `|k| > N`.
    pub fn mode(&self, k: i64) -> Complex64 {
        self.0[(k + self.n_modes()) as usize]
    }

    pub fn mode_mut(&mut self, k: i64) -> &mut Complex64 {
        let n = self.n_modes();
        &mut self.0[(k + n) as usize]
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest violation of `coeff[-k] = conj(coeff[k])`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n_modes();
        (0..=n)
            .map(|k| (self.mode(-k) - self.mode(k).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Builds a grid with `2N + 1` points; see [`Grid::new`].
pub fn make_grid(n_modes: usize, alpha: f64) -> Result<Grid> {
    Grid::new(n_modes, alpha)
}

/// Unitary DFT of a real field.
pub fn dft(grid: &Grid, field: &GridField) -> Result<SpectralCoeffs> {
    grid.check_len(field.len())?;
    let buf = grid.fft_real(field);
    Ok(shift_forward(grid, &buf))
}

/// Unitary DFT of complex samples.
pub fn dft_complex(grid: &Grid, samples: &[Complex64]) -> Result<SpectralCoeffs> {
    grid.check_len(samples.len())?;
    let mut buf = samples.to_vec();
    grid.forward.process(&mut buf);
    Ok(shift_forward(grid, &buf))
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

// exp(-ik x_j) = (-1)^k exp(-2πi kj/P) because x_0 = -π.
fn shift_forward(grid: &Grid, buf: &[Complex64]) -> SpectralCoeffs {
    let p = grid.n_points() as i64;
    let norm = 1.0 / (p as f64).sqrt();
    let coeffs = grid
        .modes()
        .map(|k| buf[k.rem_euclid(p) as usize] * (sign(k) * norm))
        .collect();
    SpectralCoeffs(coeffs)
}

/// Inverse of [`dft`] for complex samples.
pub fn idft_complex(grid: &Grid, coeffs: &SpectralCoeffs) -> Result<Vec<Complex64>> {
    grid.check_len(coeffs.len())?;
    let p = grid.n_points() as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); p as usize];
    for k in grid.modes() {
        buf[k.rem_euclid(p) as usize] = coeffs.mode(k) * sign(k);
    }
    grid.inverse.process(&mut buf);
    let norm = 1.0 / (p as f64).sqrt();
    buf.iter_mut().for_each(|c| *c *= norm);
    Ok(buf)
}

/// Inverse of [`dft`]. The coefficients must describe a real field.
pub fn idft(grid: &Grid, coeffs: &SpectralCoeffs) -> Result<GridField> {
    let samples = idft_complex(grid, coeffs)?;
    real_part(&samples, 1.0).map(GridField)
}

/// Spectral derivative `F⁻¹ D F`, exact for band-limited fields.
pub fn spectral_derivative(grid: &Grid, field: &GridField) -> Result<GridField> {
    grid.derivative_slice(field).map(GridField)
}

/// Momentum `m = u - α u_xx`.
pub fn apply_helmholtz(grid: &Grid, field: &GridField) -> Result<GridField> {
    grid.helmholtz_slice(field).map(GridField)
}

/// Velocity from momentum, `u = H⁻¹ m`.
pub fn invert_helmholtz(grid: &Grid, field: &GridField) -> Result<GridField> {
    grid.inverse_helmholtz_slice(field).map(GridField)
}

/// Collocation discretization: samples `f` on the grid and transforms.
pub fn discretize(grid: &Grid, f: impl Fn(f64) -> f64) -> SpectralCoeffs {
    let field = GridField::from_fn(grid, f);
    shift_forward(grid, &grid.fft_real(&field))
}

/// As [`discretize`] for complex-valued functions.
pub fn discretize_complex(grid: &Grid, f: impl Fn(f64) -> Complex64) -> SpectralCoeffs {
    let mut buf: Vec<Complex64> = grid.points().iter().map(|&x| f(x)).collect();
    grid.forward.process(&mut buf);
    shift_forward(grid, &buf)
}

/// Evaluates the trigonometric interpolant `P^(-1/2) Σ_k coeff[k] e^{ikx}` at any `x`.
pub fn reconstruct(grid: &Grid, coeffs: &SpectralCoeffs, x: f64) -> Result<Complex64> {
    grid.check_len(coeffs.len())?;
    let norm = 1.0 / (grid.n_points() as f64).sqrt();
    let sum: Complex64 = grid
        .modes()
        .map(|k| coeffs.mode(k) * Complex64::from_polar(1.0, k as f64 * x))
        .sum();
    Ok(sum * norm)
}
