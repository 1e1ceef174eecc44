//! Grids, field/spectrum representations, transforms and norm quadrature for
//! functions on the unit torus T^n.
//!
//! Conventions, shared by every module:
//! - modes multiply `e^{2 pi i <x, xi>}` with xi on the centered lattice
//!   `[-M/2, M/2)^n`, stored in row-major order over axes;
//! - the forward transform is the normalized mean, so coefficients are true
//!   Fourier coefficients and Plancherel reads `sum |c|^2 = mean |f|^2`;
//! - the bracket is `<x> = 1 + |x|`.

use std::cell::RefCell;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SdError};

/// Japanese bracket `<x> = 1 + |x|`.
pub fn bracket(x: f64) -> f64 {
    1.0 + x.abs()
}

/// Discretization of T^n: `modes_per_axis` points and centered modes per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    dim: u32,
    modes_per_axis: u32,
}

impl TorusGrid {
    pub fn new(dim: u32, modes_per_axis: u32) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(SdError::InvalidGrid(format!(
                "dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        if modes_per_axis % 2 != 0 {
            return Err(SdError::InvalidGrid(format!(
                "modes_per_axis must be even (got {modes_per_axis})"
            )));
        }
        if !(4..=1024).contains(&modes_per_axis) {
            return Err(SdError::InvalidGrid(format!(
                "modes_per_axis must lie in [4, 1024] (got {modes_per_axis})"
            )));
        }
        Ok(TorusGrid {
            dim,
            modes_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis as usize
    }

    pub fn point_count(&self) -> usize {
        self.modes_per_axis().pow(self.dim)
    }

    /// Grid spacing per axis (unit period).
    pub fn spacing(&self) -> f64 {
        1.0 / self.modes_per_axis() as f64
    }

    /// Mode at a canonical (row-major) index; unused axes are zero.
    pub fn mode_at(&self, index: usize) -> [i64; 3] {
        let m = self.modes_per_axis() as i64;
        let half = m / 2;
        let mut out = [0i64; 3];
        let mut rest = index as i64;
        for axis in (0..self.dim()).rev() {
            out[axis] = rest % m - half;
            rest /= m;
        }
        out
    }

    /// `|xi|^2` at a canonical index (exact integer arithmetic).
    pub fn norm_sq_at(&self, index: usize) -> i64 {
        let mode = self.mode_at(index);
        mode[0] * mode[0] + mode[1] * mode[1] + mode[2] * mode[2]
    }

    /// Canonical index of a mode, if it lies on the lattice.
    pub fn index_of(&self, mode: &[i64]) -> Option<usize> {
        if mode.len() != self.dim() {
            return None;
        }
        let m = self.modes_per_axis() as i64;
        let half = m / 2;
        let mut index = 0i64;
        for &component in mode {
            if !(-half..half).contains(&component) {
                return None;
            }
            index = index * m + (component + half);
        }
        Some(index as usize)
    }

    /// Physical coordinates of a grid point at a canonical index.
    pub fn point_at(&self, index: usize) -> [f64; 3] {
        let m = self.modes_per_axis();
        let mut out = [0f64; 3];
        let mut rest = index;
        for axis in (0..self.dim()).rev() {
            out[axis] = (rest % m) as f64 / m as f64;
            rest /= m;
        }
        out
    }

    /// All modes in canonical order.
    pub fn modes(&self) -> Vec<[i64; 3]> {
        (0..self.point_count()).map(|i| self.mode_at(i)).collect()
    }
}

/// Physical-space samples of a function on the grid, row-major over axes.
#[derive(Clone, Debug)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

/// Fourier coefficients indexed in the canonical mode order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.point_count() {
            return Err(SdError::SizeMismatch(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                grid.point_count()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Field {
            grid,
            values: vec![Complex64::ZERO; grid.point_count()],
        }
    }

    pub fn constant(grid: TorusGrid, value: Complex64) -> Self {
        Field {
            grid,
            values: vec![value; grid.point_count()],
        }
    }

    pub fn from_real(grid: TorusGrid, values: &[f64]) -> Result<Self> {
        Field::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
    }

    /// Fails unless every imaginary part is below 1e-12 in magnitude.
    pub fn require_real(&self) -> Result<()> {
        let max_imag = self.max_imag_abs();
        if max_imag > 1e-12 {
            return Err(SdError::NotRealValued { max_imag });
        }
        Ok(())
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn to_spectrum(&self) -> Spectrum {
        fourier_forward(self)
    }
}

impl Spectrum {
    pub fn new(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.point_count() {
            return Err(SdError::SizeMismatch(format!(
                "spectrum has {} coefficients, grid needs {}",
                coeffs.len(),
                grid.point_count()
            )));
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Spectrum {
            grid,
            coeffs: vec![Complex64::ZERO; grid.point_count()],
        }
    }

    /// A single mode with the given coefficient.
    pub fn single_mode(grid: TorusGrid, mode: &[i64], coeff: Complex64) -> Result<Self> {
        let index = grid.index_of(mode).ok_or_else(|| {
            SdError::InvalidParameter(format!("mode {mode:?} is outside the lattice"))
        })?;
        let mut spectrum = Spectrum::zeros(grid);
        spectrum.coeffs[index] = coeff;
        Ok(spectrum)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn to_field(&self) -> Field {
        fourier_inverse(self)
    }

    pub fn l2(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        }
    })
}

/// Unnormalized DFT along every axis of a row-major hypercube with side `m`.
fn fft_nd(data: &mut [Complex64], dim: usize, m: usize, inverse: bool) {
    let fft = plan(m, inverse);
    let total = data.len();
    let mut line = vec![Complex64::ZERO; m];
    for axis in 0..dim {
        let stride = m.pow((dim - 1 - axis) as u32);
        let lines = total / m;
        for l in 0..lines {
            // Decompose the line id into (outer block, inner offset).
            let inner = l % stride;
            let outer = l / stride;
            let base = outer * stride * m + inner;
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = data[base + k * stride];
            }
            fft.process(&mut line);
            for (k, value) in line.iter().enumerate() {
                data[base + k * stride] = *value;
            }
        }
    }
}

/// Natural DFT bin (per axis) holding the centered-lattice entry at canonical
/// per-axis index `i`: frequency `i - M/2` lives in bin `(i + M/2) mod M`.
fn natural_index(grid: TorusGrid, canonical: usize) -> usize {
    let m = grid.modes_per_axis();
    let half = m / 2;
    let mut natural = 0usize;
    let mut rest = canonical;
    let mut pow = 1usize;
    for _ in 0..grid.dim() {
        let i = rest % m;
        natural += ((i + half) % m) * pow;
        rest /= m;
        pow *= m;
    }
    natural
}

/// Forward transform: normalized mean, coefficients on the centered lattice.
pub fn fourier_forward(field: &Field) -> Spectrum {
    let grid = field.grid;
    let mut buf = field.values.clone();
    fft_nd(&mut buf, grid.dim(), grid.modes_per_axis(), false);
    let scale = 1.0 / grid.point_count() as f64;
    let mut coeffs = vec![Complex64::ZERO; buf.len()];
    for canonical in 0..coeffs.len() {
        coeffs[canonical] = buf[natural_index(grid, canonical)] * scale;
    }
    Spectrum { grid, coeffs }
}

/// Inverse transform: synthesis sum over the centered lattice.
pub fn fourier_inverse(spectrum: &Spectrum) -> Field {
    let grid = spectrum.grid;
    let mut buf = vec![Complex64::ZERO; spectrum.coeffs.len()];
    for canonical in 0..buf.len() {
        buf[natural_index(grid, canonical)] = spectrum.coeffs[canonical];
    }
    fft_nd(&mut buf, grid.dim(), grid.modes_per_axis(), true);
    Field {
        grid,
        values: buf,
    }
}

/// Sobolev norm `(sum <xi>^{2s} |c(xi)|^2)^{1/2}`; `s = 0` is the L^2 norm.
pub fn sobolev_norm(s: f64, spectrum: &Spectrum) -> Result<f64> {
    if s < 0.0 || !s.is_finite() {
        return Err(SdError::InvalidParameter(format!(
            "sobolev_norm needs s >= 0 (got {s})"
        )));
    }
    let grid = spectrum.grid;
    let mut total = 0.0;
    for (index, c) in spectrum.coeffs.iter().enumerate() {
        let weight = bracket((grid.norm_sq_at(index) as f64).sqrt()).powf(2.0 * s);
        total += weight * c.norm_sqr();
    }
    Ok(total.sqrt())
}

/// Grid quadrature `(mean |f|^p)^{1/p}`; `p = infinity` returns the max.
pub fn lebesgue_norm(p: f64, field: &Field) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(SdError::InvalidParameter(format!(
            "lebesgue_norm needs p >= 1 (got {p})"
        )));
    }
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    let mean = field
        .values
        .iter()
        .map(|z| z.norm().powf(p))
        .sum::<f64>()
        / field.values.len() as f64;
    Ok(mean.powf(1.0 / p))
}

/// Two-thirds rule: zero every coefficient with a component beyond M/3.
/// Idempotent; protects cubic products from aliasing.
pub fn dealias(spectrum: &Spectrum) -> Spectrum {
    let grid = spectrum.grid;
    let m = grid.modes_per_axis() as i64;
    let mut out = spectrum.clone();
    for (index, c) in out.coeffs.iter_mut().enumerate() {
        let mode = grid.mode_at(index);
        if mode.iter().any(|&component| 3 * component.abs() > m) {
            *c = Complex64::ZERO;
        }
    }
    out
}

fn write_complex_rows<W: Write>(out: &mut W, values: &[Complex64]) -> Result<()> {
    for z in values {
        writeln!(out, "{},{}", z.re, z.im)?;
    }
    Ok(())
}

fn read_complex_rows<R: BufRead>(input: R, expected: usize) -> Result<Vec<Complex64>> {
    let mut values = Vec::with_capacity(expected);
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (re, im) = line
            .split_once(',')
            .ok_or_else(|| SdError::Parse(format!("expected 're,im', got '{line}'")))?;
        let re: f64 = re
            .trim()
            .parse()
            .map_err(|e| SdError::Parse(format!("bad real part '{re}': {e}")))?;
        let im: f64 = im
            .trim()
            .parse()
            .map_err(|e| SdError::Parse(format!("bad imaginary part '{im}': {e}")))?;
        values.push(Complex64::new(re, im));
    }
    if values.len() != expected {
        return Err(SdError::Parse(format!(
            "expected {expected} coefficient rows, found {}",
            values.len()
        )));
    }
    Ok(values)
}

/// CSV record: header `n,M,kind`, then `re,im` rows in canonical order.
pub fn write_field_csv<W: Write>(out: &mut W, field: &Field) -> Result<()> {
    writeln!(
        out,
        "{},{},field",
        field.grid.dim(),
        field.grid.modes_per_axis()
    )?;
    write_complex_rows(out, &field.values)
}

pub fn write_spectrum_csv<W: Write>(out: &mut W, spectrum: &Spectrum) -> Result<()> {
    writeln!(
        out,
        "{},{},spectrum",
        spectrum.grid.dim(),
        spectrum.grid.modes_per_axis()
    )?;
    write_complex_rows(out, &spectrum.coeffs)
}

fn parse_header(line: &str) -> Result<(u32, u32, String)> {
    let parts: Vec<&str> = line.trim().split(',').collect();
    if parts.len() != 3 {
        return Err(SdError::Parse(format!(
            "expected header 'n,M,kind', got '{line}'"
        )));
    }
    let n: u32 = parts[0]
        .parse()
        .map_err(|e| SdError::Parse(format!("bad dimension '{}': {e}", parts[0])))?;
    let m: u32 = parts[1]
        .parse()
        .map_err(|e| SdError::Parse(format!("bad mode count '{}': {e}", parts[1])))?;
    Ok((n, m, parts[2].to_string()))
}

pub fn read_field_csv<R: BufRead>(mut input: R) -> Result<Field> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let (n, m, kind) = parse_header(&header)?;
    if kind != "field" {
        return Err(SdError::Parse(format!("expected kind 'field', got '{kind}'")));
    }
    let grid = TorusGrid::new(n, m)?;
    let values = read_complex_rows(input, grid.point_count())?;
    Field::new(grid, values)
}

pub fn read_spectrum_csv<R: BufRead>(mut input: R) -> Result<Spectrum> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let (n, m, kind) = parse_header(&header)?;
    if kind != "spectrum" {
        return Err(SdError::Parse(format!(
            "expected kind 'spectrum', got '{kind}'"
        )));
    }
    let grid = TorusGrid::new(n, m)?;
    let coeffs = read_complex_rows(input, grid.point_count())?;
    Spectrum::new(grid, coeffs)
}
