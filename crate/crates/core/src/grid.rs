//! Uniform periodic 1D grid, complex fields sampled on it, and the spectral
//! operators every other module builds on.
//!
//! Units are oscillator units throughout (ħ = m = ω = 1). Positions run from
//! `-extent/2` in steps of `spacing`; wavenumbers use the standard FFT
//! ordering `0, dk, …, (n/2-1)dk, -(n/2)dk, …, -dk`.

use std::fmt;
use std::iter::Sum;
use std::ops::Mul;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serializable description of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_points: usize,
    pub extent: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<Grid>> {
        make_grid(self.n_points, self.extent)
    }
}

pub struct Grid {
    n_points: usize,
    extent: f64,
    spacing: f64,
    positions: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.n_points)
            .field("extent", &self.extent)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.extent == other.extent
    }
}

/// Builds a grid of `n_points` (a power of two, at least 8) spanning `extent`.
pub fn make_grid(n_points: usize, extent: f64) -> Result<Arc<Grid>> {
    if n_points < 8 || !n_points.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "n_points must be a power of two >= 8, got {n_points}"
        )));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "extent must be positive, got {extent}"
        )));
    }
    let spacing = extent / n_points as f64;
    let positions = (0..n_points)
        .map(|i| -0.5 * extent + i as f64 * spacing)
        .collect();
    let dk = std::f64::consts::TAU / extent;
    let half = n_points / 2;
    let wavenumbers = (0..n_points)
        .map(|m| {
            if m < half {
                m as f64 * dk
            } else {
                (m as f64 - n_points as f64) * dk
            }
        })
        .collect();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n_points);
    let inverse = planner.plan_fft_inverse(n_points);
    Ok(Arc::new(Grid {
        n_points,
        extent,
        spacing,
        positions,
        wavenumbers,
        forward,
        inverse,
    }))
}

impl Grid {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            n_points: self.n_points,
            extent: self.extent,
        }
    }

    /// Largest representable wavenumber (Nyquist).
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    /// Index of the grid point nearest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x + 0.5 * self.extent) / self.spacing).round();
        (i.max(0.0) as usize).min(self.n_points - 1)
    }

    /// Index of the mirror point `-x_i` under the periodic parity map.
    pub fn mirror_index(&self, i: usize) -> usize {
        (self.n_points - i) % self.n_points
    }

    /// Scratch buffer large enough for either transform.
    pub fn fft_scratch(&self) -> Vec<Complex64> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// Unnormalized forward DFT in place.
    pub fn forward_in_place(&self, values: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(values, scratch);
    }

    /// Inverse DFT in place, normalized so that inverse(forward(f)) = f.
    pub fn inverse_in_place(&self, values: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(values, scratch);
        let inv_n = 1.0 / self.n_points as f64;
        values.iter_mut().for_each(|v| *v *= inv_n);
    }
}

/// Complex field sampled on a grid. Values carry units of x0^{-1/2}; a field
/// representing N atoms has `norm() == N`.
#[derive(Clone, PartialEq)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl fmt::Debug for ComplexField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexField")
            .field("grid", &self.grid)
            .field("norm", &self.norm())
            .finish()
    }
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.n_points()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.positions().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: Arc<Grid>, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn same_grid(&self, other: &ComplexField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// |ψ_i|² at every grid point.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Σ |ψ_i|² Δx.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// ∫ ψ* φ dx.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.spacing())
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexField {
        ComplexField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Norm computed in the spectral domain (Parseval).
    pub fn spectral_norm(&self) -> f64 {
        let mut buf = self.values.clone();
        let mut scratch = self.grid.fft_scratch();
        self.grid.forward_in_place(&mut buf, &mut scratch);
        let n = self.grid.n_points() as f64;
        buf.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing() / n
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Spectral second derivative with periodic boundary conditions.
pub fn laplacian(field: &ComplexField) -> ComplexField {
    let grid = field.grid();
    let mut buf = field.values().to_vec();
    let mut scratch = grid.fft_scratch();
    grid.forward_in_place(&mut buf, &mut scratch);
    for (v, k) in buf.iter_mut().zip(grid.wavenumbers()) {
        *v *= -k * k;
    }
    grid.inverse_in_place(&mut buf, &mut scratch);
    ComplexField {
        grid: Arc::clone(grid),
        values: buf,
    }
}

/// Applies the kinetic operator -½∇² into `out`, reusing `scratch`.
pub(crate) fn apply_kinetic(
    grid: &Grid,
    input: &[Complex64],
    out: &mut [Complex64],
    scratch: &mut [Complex64],
) {
    out.copy_from_slice(input);
    grid.forward_in_place(out, scratch);
    for (v, k) in out.iter_mut().zip(grid.wavenumbers()) {
        *v *= 0.5 * k * k;
    }
    grid.inverse_in_place(out, scratch);
}

/// Riemann sum Σ v_i Δx (identical to the trapezoid rule on a periodic grid).
pub fn integrate<T>(values: &[T], grid: &Grid) -> Result<T>
where
    T: Copy + Sum<T> + Mul<f64, Output = T>,
{
    if values.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_points(),
            actual: values.len(),
        });
    }
    Ok(values.iter().copied().sum::<T>() * grid.spacing())
}

/// Rescales a field so that Σ|ψ|²Δx equals `target_norm`.
pub fn normalize(field: &ComplexField, target_norm: f64) -> Result<ComplexField> {
    let norm = field.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    if !(target_norm >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target norm must be non-negative, got {target_norm}"
        )));
    }
    let factor = (target_norm / norm).sqrt();
    Ok(field.scaled(Complex64::new(factor, 0.0)))
}

/// Diagonal multiplier in Fourier space, f ↦ F⁻¹[m(k)·F f], with its own scratch.
pub(crate) struct SpectralFilter {
    grid: Arc<Grid>,
    factors: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SpectralFilter {
    pub(crate) fn new(grid: Arc<Grid>, symbol: impl Fn(f64) -> Complex64) -> Self {
        let factors = grid.wavenumbers().iter().map(|&k| symbol(k)).collect();
        let scratch = grid.fft_scratch();
        Self {
            grid,
            factors,
            scratch,
        }
    }

    pub(crate) fn apply(&mut self, values: &mut [Complex64]) {
        self.grid.forward_in_place(values, &mut self.scratch);
        for (v, f) in values.iter_mut().zip(&self.factors) {
            *v *= f;
        }
        self.grid.inverse_in_place(values, &mut self.scratch);
    }
}
