//! Duhamel fixed-point construction on a periodic time window: mollifier
//! cutoffs, the nonlinearity w = F0(u) + F1(u), the Duhamel map, its
//! modulation decomposition, and Picard iteration to a local-in-time
//! solution.
//!
//! Functions of (x, t) live on `T^n x [-L/2, L/2)` with time frequencies
//! `lambda` on the lattice `(1/L) Z`, truncated to the sample count. The
//! standard window has L = 4, which keeps every lambda a dyadic rational so
//! modulation comparisons are exact.

use num_complex::Complex64;

use crate::error::{Result, SdError};
use crate::propagators::ModelParams;
use crate::torus::{fourier_forward, fourier_inverse, plan, Field, Spectrum, TorusGrid};
use crate::xsb;

/// Periodic time window holding the local-existence scale delta.
#[derive(Clone, Copy, Debug)]
pub struct TimeWindow {
    length: f64,
    samples: usize,
    delta: f64,
}

impl TimeWindow {
    pub fn new(length: f64, samples: usize, delta: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(SdError::InvalidParameter(format!(
                "window length must be positive (got {length})"
            )));
        }
        if samples < 8 || samples % 2 != 0 {
            return Err(SdError::InvalidParameter(format!(
                "window needs an even sample count >= 8 (got {samples})"
            )));
        }
        if !(delta > 0.0) || !(4.0 * delta < length) {
            return Err(SdError::InvalidParameter(format!(
                "need 0 < 4 delta < length (delta = {delta}, length = {length})"
            )));
        }
        Ok(TimeWindow {
            length,
            samples,
            delta,
        })
    }

    /// The standard window of length 4; delta <= 1/2 keeps every cutoff
    /// support embedded.
    pub fn standard(samples: usize, delta: f64) -> Result<Self> {
        TimeWindow::new(4.0, samples, delta)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dt(&self) -> f64 {
        self.length / self.samples as f64
    }

    /// Sample time `t_j = -L/2 + j dt`; index [`Self::zero_index`] is t = 0.
    pub fn time_at(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dt()
    }

    pub fn zero_index(&self) -> usize {
        self.samples / 2
    }

    /// Frequency `lambda = k / L` at canonical index `jk` (k = jk - N/2).
    pub fn lambda_at(&self, jk: usize) -> f64 {
        (jk as f64 - (self.samples / 2) as f64) / self.length
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|j| self.time_at(j)).collect()
    }
}

/// Smooth bump from the exp(-1/x) mollifier: exactly 1 on the plateau,
/// exactly 0 outside the support, smooth in between.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    support: (f64, f64),
    plateau: (f64, f64),
}

fn ramp(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else {
        let rise = (-1.0 / y).exp();
        let fall = (-1.0 / (1.0 - y)).exp();
        rise / (rise + fall)
    }
}

impl Bump {
    pub fn new(support: (f64, f64), plateau: (f64, f64)) -> Result<Self> {
        if !(support.0 < plateau.0 && plateau.0 <= plateau.1 && plateau.1 < support.1) {
            return Err(SdError::InvalidParameter(format!(
                "bump needs support {support:?} strictly around plateau {plateau:?}"
            )));
        }
        Ok(Bump { support, plateau })
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.support.0 || t >= self.support.1 {
            0.0
        } else if t < self.plateau.0 {
            ramp((t - self.support.0) / (self.plateau.0 - self.support.0))
        } else if t > self.plateau.1 {
            ramp((self.support.1 - t) / (self.support.1 - self.plateau.1))
        } else {
            1.0
        }
    }

    /// `psi_T(t) = psi(t / T)`: plateau and support scale linearly.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(SdError::InvalidParameter(format!(
                "bump scale must be positive (got {scale})"
            )));
        }
        Bump::new(
            (self.support.0 * scale, self.support.1 * scale),
            (self.plateau.0 * scale, self.plateau.1 * scale),
        )
    }
}

/// Which cutoff of the fixed-point construction to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffKind {
    /// Plateau [0, delta], support [-2 delta, 2 delta].
    Existence,
    /// Plateau [-1, 1], support [-2, 2].
    UnitPlateau,
}

/// A cutoff sampled on the window grid together with its defining bump.
#[derive(Clone, Debug)]
pub struct TimeCutoff {
    pub bump: Bump,
    pub samples: Vec<f64>,
}

pub fn cutoff_psi(kind: CutoffKind, window: &TimeWindow) -> Result<TimeCutoff> {
    let bump = match kind {
        CutoffKind::Existence => Bump::new(
            (-2.0 * window.delta, 2.0 * window.delta),
            (0.0, window.delta),
        )?,
        CutoffKind::UnitPlateau => Bump::new((-2.0, 2.0), (-1.0, 1.0))?,
    };
    let half = window.length / 2.0;
    if bump.support.0 < -half || bump.support.1 > half {
        return Err(SdError::InvalidParameter(format!(
            "cutoff support {:?} exceeds the window [{}, {})",
            bump.support, -half, half
        )));
    }
    let samples = window.times().iter().map(|&t| bump.eval(t)).collect();
    Ok(TimeCutoff { bump, samples })
}

/// Samples u(x, t_j) on the window, time-major (`values[j * points + x]`).
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    grid: TorusGrid,
    window: TimeWindow,
    values: Vec<Complex64>,
}

/// Coefficients c(xi, lambda_k), lambda-major (`coeffs[jk * points + mode]`).
#[derive(Clone, Debug)]
pub struct SpaceTimeSpectrum {
    grid: TorusGrid,
    window: TimeWindow,
    coeffs: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn new(grid: TorusGrid, window: TimeWindow, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.point_count() * window.samples() {
            return Err(SdError::SizeMismatch(format!(
                "space-time field has {} samples, needs {} x {}",
                values.len(),
                window.samples(),
                grid.point_count()
            )));
        }
        Ok(SpaceTimeField {
            grid,
            window,
            values,
        })
    }

    pub fn zeros(grid: TorusGrid, window: TimeWindow) -> Self {
        SpaceTimeField {
            grid,
            window,
            values: vec![Complex64::ZERO; grid.point_count() * window.samples()],
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn slice(&self, j: usize) -> &[Complex64] {
        let p = self.grid.point_count();
        &self.values[j * p..(j + 1) * p]
    }

    pub fn slice_mut(&mut self, j: usize) -> &mut [Complex64] {
        let p = self.grid.point_count();
        &mut self.values[j * p..(j + 1) * p]
    }

    /// Field at one time sample.
    pub fn field_at(&self, j: usize) -> Field {
        Field::new(self.grid, self.slice(j).to_vec()).expect("slice length matches grid")
    }

    pub fn scale_by_time_profile(&mut self, profile: &[f64]) {
        let p = self.grid.point_count();
        for (j, &w) in profile.iter().enumerate() {
            for z in &mut self.values[j * p..(j + 1) * p] {
                *z *= w;
            }
        }
    }

    /// Root mean square over the space-time grid (equals the coefficient
    /// l2 by Plancherel).
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn max_abs_diff(&self, other: &SpaceTimeField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_spectrum(&self) -> SpaceTimeSpectrum {
        let p = self.grid.point_count();
        let n = self.window.samples();
        // spatial transform per slice
        let mut mixed = vec![Complex64::ZERO; self.values.len()];
        for j in 0..n {
            let slice = Field::new(self.grid, self.slice(j).to_vec()).unwrap();
            mixed[j * p..(j + 1) * p].copy_from_slice(fourier_forward(&slice).coeffs());
        }
        // time transform per mode; the shifted origin t_0 = -L/2 contributes
        // a (-1)^k twist
        let fft = plan(n, false);
        let mut line = vec![Complex64::ZERO; n];
        let mut coeffs = vec![Complex64::ZERO; self.values.len()];
        let half = n / 2;
        for mode in 0..p {
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = mixed[j * p + mode];
            }
            fft.process(&mut line);
            for jk in 0..n {
                let bin = (jk + half) % n;
                let sign = if (jk + half) % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[jk * p + mode] = line[bin] * (sign / n as f64);
            }
        }
        SpaceTimeSpectrum {
            grid: self.grid,
            window: self.window,
            coeffs,
        }
    }
}

impl SpaceTimeSpectrum {
    pub fn new(grid: TorusGrid, window: TimeWindow, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.point_count() * window.samples() {
            return Err(SdError::SizeMismatch(format!(
                "space-time spectrum has {} coefficients, needs {} x {}",
                coeffs.len(),
                window.samples(),
                grid.point_count()
            )));
        }
        Ok(SpaceTimeSpectrum {
            grid,
            window,
            coeffs,
        })
    }

    pub fn zeros(grid: TorusGrid, window: TimeWindow) -> Self {
        SpaceTimeSpectrum {
            grid,
            window,
            coeffs: vec![Complex64::ZERO; grid.point_count() * window.samples()],
        }
    }

    /// Single coefficient at mode `xi` and time-frequency index k
    /// (lambda = k / L).
    pub fn atom(
        grid: TorusGrid,
        window: TimeWindow,
        mode: &[i64],
        k: i64,
        coeff: Complex64,
    ) -> Result<Self> {
        let mode_index = grid.index_of(mode).ok_or_else(|| {
            SdError::InvalidParameter(format!("mode {mode:?} is outside the lattice"))
        })?;
        let half = (window.samples() / 2) as i64;
        if !(-half..half).contains(&k) {
            return Err(SdError::InvalidParameter(format!(
                "time-frequency index {k} outside [-{half}, {half})"
            )));
        }
        let mut out = SpaceTimeSpectrum::zeros(grid, window);
        let jk = (k + half) as usize;
        out.coeffs[jk * grid.point_count() + mode_index] = coeff;
        Ok(out)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Iterate nonzero coefficients as (mode_index, jk, coefficient).
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let p = self.grid.point_count();
        self.coeffs.iter().enumerate().filter_map(move |(i, &c)| {
            if c == Complex64::ZERO {
                None
            } else {
                Some((i % p, i / p, c))
            }
        })
    }

    pub fn l2(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_field(&self) -> SpaceTimeField {
        let p = self.grid.point_count();
        let n = self.window.samples();
        let half = n / 2;
        // undo the time transform per mode
        let fft = plan(n, true);
        let mut line = vec![Complex64::ZERO; n];
        let mut mixed = vec![Complex64::ZERO; self.coeffs.len()];
        for mode in 0..p {
            line.fill(Complex64::ZERO);
            for jk in 0..n {
                let bin = (jk + half) % n;
                let sign = if (jk + half) % 2 == 0 { 1.0 } else { -1.0 };
                line[bin] = self.coeffs[jk * p + mode] * sign;
            }
            fft.process(&mut line);
            for j in 0..n {
                mixed[j * p + mode] = line[j];
            }
        }
        // inverse spatial per slice
        let mut values = vec![Complex64::ZERO; self.coeffs.len()];
        for j in 0..n {
            let spectrum = Spectrum::new(self.grid, mixed[j * p..(j + 1) * p].to_vec()).unwrap();
            values[j * p..(j + 1) * p].copy_from_slice(fourier_inverse(&spectrum).values());
        }
        SpaceTimeField {
            grid: self.grid,
            window: self.window,
            values,
        }
    }
}

/// CSV record for space-time data: header
/// `n,M,N_t,length,delta,kind`, then `re,im` rows (lambda-major for
/// spectra, time-major for fields).
pub fn write_spacetime_spectrum_csv<W: std::io::Write>(
    out: &mut W,
    spectrum: &SpaceTimeSpectrum,
) -> Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},spacetime_spectrum",
        spectrum.grid.dim(),
        spectrum.grid.modes_per_axis(),
        spectrum.window.samples(),
        spectrum.window.length(),
        spectrum.window.delta()
    )?;
    for c in &spectrum.coeffs {
        writeln!(out, "{},{}", c.re, c.im)?;
    }
    Ok(())
}

pub fn read_spacetime_spectrum_csv<R: std::io::BufRead>(mut input: R) -> Result<SpaceTimeSpectrum> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let parts: Vec<&str> = header.trim().split(',').collect();
    if parts.len() != 6 || parts[5] != "spacetime_spectrum" {
        return Err(SdError::Parse(format!(
            "expected header 'n,M,N_t,length,delta,spacetime_spectrum', got '{}'",
            header.trim()
        )));
    }
    let parse = |text: &str, what: &str| -> Result<f64> {
        text.parse()
            .map_err(|e| SdError::Parse(format!("bad {what} '{text}': {e}")))
    };
    let grid = TorusGrid::new(parse(parts[0], "dimension")? as u32, parse(parts[1], "mode count")? as u32)?;
    let window = TimeWindow::new(
        parse(parts[3], "window length")?,
        parse(parts[2], "sample count")? as usize,
        parse(parts[4], "delta")?,
    )?;
    let expected = grid.point_count() * window.samples();
    let mut coeffs = Vec::with_capacity(expected);
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (re, im) = line
            .split_once(',')
            .ok_or_else(|| SdError::Parse(format!("expected 're,im', got '{line}'")))?;
        coeffs.push(Complex64::new(
            parse(re, "real part")?,
            parse(im, "imaginary part")?,
        ));
    }
    if coeffs.len() != expected {
        return Err(SdError::Parse(format!(
            "expected {expected} coefficient rows, found {}",
            coeffs.len()
        )));
    }
    SpaceTimeSpectrum::new(grid, window, coeffs)
}

/// `U(t_j) u0` realized on the window (the free orbit of the data).
pub fn free_orbit(u0: &Spectrum, window: &TimeWindow) -> SpaceTimeField {
    let grid = u0.grid();
    let mut out = SpaceTimeField::zeros(grid, *window);
    for j in 0..window.samples() {
        let evolved = crate::propagators::free_evolution(u0, window.time_at(j));
        out.slice_mut(j)
            .copy_from_slice(fourier_inverse(&evolved).values());
    }
    out
}

/// Order-2 exponential quadrature weights over one step of size `dt` for
/// `(1/K) \int e^{-(t - tau)/K} s(tau) dtau`: returns (decay, w_left, w_right).
fn exp_weights(dt: f64, k: f64) -> (f64, f64, f64) {
    let z = dt / k;
    let decay = (-z).exp();
    let ph = if z.abs() < 1e-5 {
        1.0 + z * (-0.5 + z * (1.0 / 6.0 + z * (-1.0 / 24.0 + z / 120.0)))
    } else {
        (-z).exp_m1() / -z
    };
    (decay, ph - decay, 1.0 - ph)
}

/// The nonlinearity `w = F0(u) + F1(u)` on the window:
///
///   F0(u)(t) = e^{-t/K} u(t) v0,
///   F1(u)(t) = (eps/K) u(t) \int_0^t e^{-(t-tau)/K} |u(tau)|^alpha dtau,
///
/// with the memory integral accumulated by the order-2 exponential
/// quadrature, oriented away from t = 0 in both directions.
pub fn nonlinear_w(
    u: &SpaceTimeField,
    v0: &Field,
    params: &ModelParams,
) -> Result<SpaceTimeField> {
    if u.grid() != v0.grid() {
        return Err(SdError::SizeMismatch(
            "u and v0 must live on the same grid".into(),
        ));
    }
    v0.require_real()?;
    let window = u.window();
    let n = window.samples();
    let p = u.grid().point_count();
    let kk = params.relaxation;
    let eps = params.coupling.value();
    let j0 = window.zero_index();

    let source: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            u.slice(j)
                .iter()
                .map(|z| {
                    if params.alpha == 2.0 {
                        z.norm_sqr()
                    } else {
                        z.norm().powf(params.alpha)
                    }
                })
                .collect()
        })
        .collect();

    // memory integral J(t_j) = \int_0^{t_j} e^{-(t_j - tau)/K} |u|^alpha dtau
    let (decay, w0, w1) = exp_weights(window.dt(), kk);
    let grow = 1.0 / decay;
    let mut memory = vec![vec![0.0f64; p]; n];
    for j in j0..n - 1 {
        for x in 0..p {
            memory[j + 1][x] =
                decay * memory[j][x] + kk * (w0 * source[j][x] + w1 * source[j + 1][x]);
        }
    }
    for j in (1..=j0).rev() {
        for x in 0..p {
            memory[j - 1][x] =
                grow * (memory[j][x] - kk * (w0 * source[j - 1][x] + w1 * source[j][x]));
        }
    }

    let mut out = SpaceTimeField::zeros(u.grid(), window);
    for j in 0..n {
        let damp = (-window.time_at(j) / kk).exp();
        for x in 0..p {
            let f0 = u.slice(j)[x] * (damp * v0.values()[x].re);
            let f1 = u.slice(j)[x] * (eps / kk * memory[j][x]);
            out.slice_mut(j)[x] = f0 + f1;
        }
    }
    Ok(out)
}

/// Duhamel map on the stored time samples:
///
///   u_hat(xi, t) = e^{2 pi i t |xi|^2} u0_hat(xi)
///                  - i \int_0^t e^{2 pi i (t - tau) |xi|^2} w_hat(xi, tau) dtau,
///
/// the mode-wise integral by composite trapezoid, oriented away from t = 0.
pub fn duhamel_apply(u0: &Spectrum, w: &SpaceTimeField) -> Result<SpaceTimeField> {
    if u0.grid() != w.grid() {
        return Err(SdError::SizeMismatch(
            "data and source must share a grid".into(),
        ));
    }
    let grid = w.grid();
    let window = w.window();
    let n = window.samples();
    let p = grid.point_count();
    let j0 = window.zero_index();
    let dt = window.dt();
    let two_pi = 2.0 * std::f64::consts::PI;

    // spatial transform of every slice
    let mut what = vec![Complex64::ZERO; n * p];
    for j in 0..n {
        let spectrum = fourier_forward(&w.field_at(j));
        what[j * p..(j + 1) * p].copy_from_slice(spectrum.coeffs());
    }

    let mut values = vec![Complex64::ZERO; n * p];
    let mut integrand = vec![Complex64::ZERO; n];
    let mut cumulative = vec![Complex64::ZERO; n];
    for mode in 0..p {
        let q = grid.norm_sq_at(mode) as f64;
        for (j, slot) in integrand.iter_mut().enumerate() {
            let phase = Complex64::from_polar(1.0, -two_pi * (window.time_at(j) * q).fract());
            *slot = phase * what[j * p + mode];
        }
        cumulative[j0] = Complex64::ZERO;
        for j in j0..n - 1 {
            cumulative[j + 1] = cumulative[j] + (integrand[j] + integrand[j + 1]) * (dt / 2.0);
        }
        for j in (1..=j0).rev() {
            cumulative[j - 1] = cumulative[j] - (integrand[j - 1] + integrand[j]) * (dt / 2.0);
        }
        let data = u0.coeffs()[mode];
        for j in 0..n {
            let phase = Complex64::from_polar(1.0, two_pi * (window.time_at(j) * q).fract());
            values[j * p + mode] = phase * (data - Complex64::i() * cumulative[j]);
        }
    }

    // back to physical space per slice
    let mut out = SpaceTimeField::zeros(grid, window);
    for j in 0..n {
        let spectrum = Spectrum::new(grid, values[j * p..(j + 1) * p].to_vec())?;
        out.slice_mut(j)
            .copy_from_slice(fourier_inverse(&spectrum).values());
    }
    Ok(out)
}

/// One application of the fixed-point map
/// `Phi(u) = psi_1 [U(t) u0 - i \int_0^t U(t - tau) w(u)(tau) dtau]`.
pub fn fixed_point_map(
    u: &SpaceTimeField,
    u0: &Spectrum,
    v0: &Field,
    params: &ModelParams,
) -> Result<SpaceTimeField> {
    let psi1 = cutoff_psi(CutoffKind::Existence, &u.window())?;
    let w = nonlinear_w(u, v0, params)?;
    let mut phi = duhamel_apply(u0, &w)?;
    phi.scale_by_time_profile(&psi1.samples);
    Ok(phi)
}

/// One Picard iteration record: consecutive-difference norm and ratio.
#[derive(Clone, Copy, Debug)]
pub struct PicardIteration {
    pub k: usize,
    pub diff_norm: f64,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct PicardSolution {
    pub fixed_point: SpaceTimeField,
    pub history: Vec<PicardIteration>,
}

/// Picard iteration `u^{(k+1)} = Phi(u^{(k)})` from `u^{(0)} = psi_1 U(t) u0`,
/// stopped when the consecutive-difference X^{s,1/2} norm drops below `tol`.
/// Three consecutive non-contracting ratios abort with `NoContraction`
/// (data too large or delta too large).
pub fn picard_solve(
    u0: &Spectrum,
    v0: &Field,
    params: &ModelParams,
    window: &TimeWindow,
    stop_s: f64,
    tol: f64,
    kmax: usize,
) -> Result<PicardSolution> {
    if kmax < 1 {
        return Err(SdError::InvalidParameter("kmax must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(SdError::InvalidParameter(format!(
            "tolerance must be positive (got {tol})"
        )));
    }
    let psi1 = cutoff_psi(CutoffKind::Existence, window)?;
    let mut current = free_orbit(u0, window);
    current.scale_by_time_profile(&psi1.samples);

    let mut history: Vec<PicardIteration> = Vec::new();
    let mut bad_streak = 0usize;
    for k in 1..=kmax {
        let next = fixed_point_map(&current, u0, v0, params)?;
        let mut diff = next.clone();
        for (d, c) in diff.values.iter_mut().zip(&current.values) {
            *d -= c;
        }
        let diff_norm = xsb::xsb_norm(&diff.to_spectrum(), stop_s, 0.5);
        let ratio = history
            .last()
            .filter(|prev| prev.diff_norm > 0.0)
            .map(|prev| diff_norm / prev.diff_norm);
        history.push(PicardIteration {
            k,
            diff_norm,
            ratio,
        });
        current = next;
        if diff_norm < tol {
            return Ok(PicardSolution {
                fixed_point: current,
                history,
            });
        }
        if let Some(r) = ratio {
            if r >= 1.0 {
                bad_streak += 1;
                if bad_streak >= 3 {
                    return Err(SdError::NoContraction {
                        ratios: history.iter().filter_map(|h| h.ratio).collect(),
                    });
                }
            } else {
                bad_streak = 0;
            }
        }
    }
    Err(SdError::NotConverged {
        kmax,
        last_diff: history.last().map(|h| h.diff_norm).unwrap_or(f64::NAN),
    })
}

/// Outcome of one delta in the local-existence probe.
#[derive(Clone, Debug)]
pub struct ProbeRecord {
    pub delta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub last_ratio: Option<f64>,
}

/// Doubling probe for the empirical local-existence time: run the solver at
/// delta, 2 delta, 4 delta, ... until the iteration stops contracting or the
/// window can no longer hold the cutoff support.
pub fn existence_probe(
    u0: &Spectrum,
    v0: &Field,
    params: &ModelParams,
    window: &TimeWindow,
    stop_s: f64,
    tol: f64,
    kmax: usize,
    max_doublings: usize,
) -> Result<Vec<ProbeRecord>> {
    let mut records = Vec::new();
    let mut delta = window.delta();
    for _ in 0..=max_doublings {
        let probe_window = match TimeWindow::new(window.length(), window.samples(), delta) {
            Ok(w) => w,
            Err(_) => break,
        };
        match picard_solve(u0, v0, params, &probe_window, stop_s, tol, kmax) {
            Ok(solution) => {
                records.push(ProbeRecord {
                    delta,
                    converged: true,
                    iterations: solution.history.len(),
                    last_ratio: solution.history.last().and_then(|h| h.ratio),
                });
            }
            Err(SdError::NoContraction { ratios }) => {
                records.push(ProbeRecord {
                    delta,
                    converged: false,
                    iterations: ratios.len(),
                    last_ratio: ratios.last().copied(),
                });
                break;
            }
            Err(SdError::NotConverged { kmax, last_diff }) => {
                records.push(ProbeRecord {
                    delta,
                    converged: false,
                    iterations: kmax,
                    last_ratio: Some(last_diff),
                });
                break;
            }
            Err(e) => return Err(e),
        }
        delta *= 2.0;
    }
    Ok(records)
}

/// The modulation decomposition of `psi_1 x Duhamel(0, w)`.
///
/// The `linear` slot belongs to the data term `psi_1 U(t) u0`, which enters
/// through [`fixed_point_map`] separately; it is zero here, so the four
/// slots sum to the full inhomogeneous contribution.
#[derive(Clone, Debug)]
pub struct DuhamelTerms {
    pub linear: SpaceTimeField,
    /// Near-paraboloid part: Taylor series in t against the unit-band
    /// modulation cutoff.
    pub taylor: SpaceTimeField,
    /// Far-paraboloid part oscillating with the full time frequency.
    pub oscillating: SpaceTimeField,
    /// Far-paraboloid part anchored on the free phase.
    pub anchored: SpaceTimeField,
    pub report: DecomposeReport,
}

#[derive(Clone, Debug)]
pub struct DecomposeReport {
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    /// X^{s,b} norms of (linear, taylor, oscillating, anchored).
    pub term_norms: [f64; 4],
    pub sum_norm: f64,
    /// X^{s, b'-1} norm of the source w.
    pub source_norm: f64,
    /// Relative gap between the term sum and the closed-form reference.
    pub rel_mismatch: f64,
    /// Gap between the closed-form reference and the trapezoid Duhamel route.
    pub quadrature_gap: f64,
    pub quadrature_flagged: bool,
}

/// `-(e^{2 pi i mu t} - 1) / (2 pi mu)`, the mode response of the Duhamel
/// integral, with a series branch at the removable singularity mu = 0.
fn duhamel_response(mu: f64, t: f64) -> Complex64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    if mu.abs() < 1e-6 {
        let z = Complex64::new(0.0, two_pi * mu * t);
        let series = Complex64::ONE + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
        -Complex64::i() * t * series
    } else {
        let phase = Complex64::from_polar(1.0, two_pi * mu * t);
        -(phase - 1.0) / (two_pi * mu)
    }
}

/// Split `psi_1 x Duhamel(0, w)` by modulation: a Taylor series where the
/// modulation lies in the unit band (the series converges fast because
/// |mu| <= 2 there) and two explicit far-band terms. The report carries each
/// term's X^{s,b} norm, the source's X^{s,b'-1} norm, and the reproduction
/// gap against the closed-form reference (built from the nonzero
/// coefficients, so feed it sparse synthetic sources).
pub fn duhamel_decompose(
    w: &SpaceTimeSpectrum,
    s: f64,
    b: f64,
    b_prime: f64,
) -> Result<DuhamelTerms> {
    let grid = w.grid();
    let window = w.window();
    let n = window.samples();
    let p = grid.point_count();
    let psi1 = cutoff_psi(CutoffKind::Existence, &window)?;
    let psi2 = cutoff_psi(CutoffKind::UnitPlateau, &window)?.bump;
    let times = window.times();
    let two_pi = 2.0 * std::f64::consts::PI;

    // Per-mode ingredients over lambda: near-band moments
    // S_k(xi) = sum_lambda psi2(mu) mu^{k-1} w_hat, and the far-band
    // multipliers (regular there: |mu| >= 1 on the support of 1 - psi2).
    let max_series = 96usize;
    let mut far_oscillating = SpaceTimeSpectrum::zeros(grid, window);
    let mut anchored_modes = vec![Complex64::ZERO; p];
    let mut moments = vec![vec![Complex64::ZERO; p]; max_series + 1];
    for jk in 0..n {
        let lambda = window.lambda_at(jk);
        for mode in 0..p {
            let c = w.coeffs()[jk * p + mode];
            if c == Complex64::ZERO {
                continue;
            }
            let mu = lambda - grid.norm_sq_at(mode) as f64;
            let near = psi2.eval(mu);
            if near != 0.0 {
                let mut power = 1.0; // mu^{k-1}, starting at k = 1
                for row in moments.iter_mut().skip(1) {
                    row[mode] += c * (near * power);
                    power *= mu;
                    if power == 0.0 {
                        break;
                    }
                }
            }
            let far = 1.0 - near;
            if far != 0.0 {
                let weight = far / (two_pi * mu);
                far_oscillating.coeffs_mut()[jk * p + mode] = c * (-weight);
                anchored_modes[mode] += c * weight;
            }
        }
    }

    // Taylor term: psi1(t) (-1/2pi) sum_k ((2 pi i)^k / k!) t^k S_k on the
    // free phase, truncated once the k-th contribution falls below 1e-12.
    let tmax = times
        .iter()
        .zip(&psi1.samples)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&t, _)| t.abs())
        .fold(0.0f64, f64::max);
    let mut coefficients: Vec<Complex64> = Vec::new();
    let mut factor = Complex64::ONE; // (2 pi i)^k / k!
    let mut scale_guess: f64 = 0.0;
    for k in 1..=max_series {
        factor *= Complex64::new(0.0, two_pi) / k as f64;
        coefficients.push(factor);
        let moment_max = moments[k].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let bound = factor.norm() * tmax.powi(k as i32) * moment_max;
        scale_guess = scale_guess.max(bound);
        if bound < 1e-12 * scale_guess.max(1e-300) && k >= 4 {
            break;
        }
    }
    let series_len = coefficients.len();

    let mut taylor = SpaceTimeField::zeros(grid, window);
    for j in 0..n {
        if psi1.samples[j] == 0.0 {
            continue;
        }
        let t = times[j];
        let mut modes = vec![Complex64::ZERO; p];
        let mut t_pow = 1.0;
        for k in 1..=series_len {
            t_pow *= t;
            let c_k = coefficients[k - 1] * t_pow;
            for (slot, m) in modes.iter_mut().zip(&moments[k]) {
                *slot += c_k * m;
            }
        }
        let prefactor = -psi1.samples[j] / two_pi;
        for (mode, slot) in modes.iter_mut().enumerate() {
            let q = grid.norm_sq_at(mode) as f64;
            *slot *= prefactor * Complex64::from_polar(1.0, two_pi * (t * q).fract());
        }
        let spectrum = Spectrum::new(grid, modes)?;
        taylor
            .slice_mut(j)
            .copy_from_slice(fourier_inverse(&spectrum).values());
    }

    // Oscillating term: a lambda multiplier, realized through the window
    // transform, then cut by psi1.
    let mut oscillating = far_oscillating.to_field();
    oscillating.scale_by_time_profile(&psi1.samples);

    // Anchored term: one mode vector on the free phase, cut by psi1.
    let mut anchored = SpaceTimeField::zeros(grid, window);
    if anchored_modes.iter().any(|c| *c != Complex64::ZERO) {
        for j in 0..n {
            if psi1.samples[j] == 0.0 {
                continue;
            }
            let t = times[j];
            let modes: Vec<Complex64> = anchored_modes
                .iter()
                .enumerate()
                .map(|(mode, &a)| {
                    let q = grid.norm_sq_at(mode) as f64;
                    a * psi1.samples[j] * Complex64::from_polar(1.0, two_pi * (t * q).fract())
                })
                .collect();
            let spectrum = Spectrum::new(grid, modes)?;
            anchored
                .slice_mut(j)
                .copy_from_slice(fourier_inverse(&spectrum).values());
        }
    }

    // Closed-form reference psi1 x Duhamel(0, w), accumulated in mode space
    // over the nonzero coefficients, then synthesized per slice.
    let mut reference_modes = vec![Complex64::ZERO; n * p];
    for (mode, jk, c) in w.nonzero() {
        let q = grid.norm_sq_at(mode) as f64;
        let mu = window.lambda_at(jk) - q;
        for j in 0..n {
            if psi1.samples[j] == 0.0 {
                continue;
            }
            let t = times[j];
            reference_modes[j * p + mode] += c
                * duhamel_response(mu, t)
                * Complex64::from_polar(1.0, two_pi * (t * q).fract())
                * psi1.samples[j];
        }
    }
    let mut reference = SpaceTimeField::zeros(grid, window);
    for j in 0..n {
        let spectrum = Spectrum::new(grid, reference_modes[j * p..(j + 1) * p].to_vec())?;
        reference
            .slice_mut(j)
            .copy_from_slice(fourier_inverse(&spectrum).values());
    }

    let mut sum = taylor.clone();
    for ((z, a), b_) in sum
        .values
        .iter_mut()
        .zip(&oscillating.values)
        .zip(&anchored.values)
    {
        *z += a + b_;
    }
    let ref_scale = reference.l2();
    let rel_mismatch = if ref_scale > 0.0 {
        let mut gap = sum.clone();
        for (g, r) in gap.values.iter_mut().zip(&reference.values) {
            *g -= r;
        }
        gap.l2() / ref_scale
    } else {
        sum.l2()
    };

    // trapezoid route cross-check
    let quadrature_gap = if ref_scale > 0.0 {
        let mut trapezoid = duhamel_apply(&Spectrum::zeros(grid), &w.to_field())?;
        trapezoid.scale_by_time_profile(&psi1.samples);
        for (z, r) in trapezoid.values.iter_mut().zip(&reference.values) {
            *z -= r;
        }
        trapezoid.l2() / ref_scale
    } else {
        0.0
    };

    let linear = SpaceTimeField::zeros(grid, window);
    let report = DecomposeReport {
        s,
        b,
        b_prime,
        term_norms: [
            0.0,
            xsb::xsb_norm(&taylor.to_spectrum(), s, b),
            xsb::xsb_norm(&oscillating.to_spectrum(), s, b),
            xsb::xsb_norm(&anchored.to_spectrum(), s, b),
        ],
        sum_norm: xsb::xsb_norm(&sum.to_spectrum(), s, b),
        source_norm: xsb::xsb_norm(w, s, b_prime - 1.0),
        rel_mismatch,
        quadrature_gap,
        quadrature_flagged: quadrature_gap > 1e-6,
    };

    Ok(DuhamelTerms {
        linear,
        taylor,
        oscillating,
        anchored,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagators::{evolve, SimState, Sign};
    use crate::torus::{lebesgue_norm, sobolev_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(grid: TorusGrid, amplitude: f64, width: f64) -> Field {
        let values = (0..grid.point_count())
            .map(|i| {
                let x = grid.point_at(i)[0];
                Complex64::new(
                    amplitude * (-((x - 0.5) * (x - 0.5)) / (2.0 * width * width)).exp(),
                    0.0,
                )
            })
            .collect();
        Field::new(grid, values).unwrap()
    }

    #[test]
    fn window_preconditions() {
        assert!(TimeWindow::standard(256, 0.05).is_ok());
        assert!(TimeWindow::standard(255, 0.05).is_err());
        assert!(TimeWindow::standard(256, 1.0).is_err()); // 4 delta = length
        assert!(TimeWindow::new(-1.0, 256, 0.05).is_err());
        let w = TimeWindow::standard(256, 0.05).unwrap();
        assert_eq!(w.time_at(w.zero_index()), 0.0);
        assert_eq!(w.lambda_at(w.samples() / 2), 0.0);
    }

    #[test]
    fn cutoff_values() {
        let w = TimeWindow::standard(512, 0.1).unwrap();
        let psi1 = cutoff_psi(CutoffKind::Existence, &w).unwrap();
        let d = w.delta();
        assert_eq!(psi1.bump.eval(d / 2.0), 1.0);
        assert_eq!(psi1.bump.eval(3.0 * d), 0.0);
        assert_eq!(psi1.bump.eval(-2.0 * d), 0.0);
        assert!(psi1.bump.eval(-d) > 0.0 && psi1.bump.eval(-d) < 1.0);

        let psi2 = cutoff_psi(CutoffKind::UnitPlateau, &w).unwrap();
        assert_eq!(psi2.bump.eval(0.0), 1.0);
        assert_eq!(psi2.bump.eval(2.5), 0.0);
        assert_eq!(psi2.bump.eval(-1.0), 1.0);

        // support exceeding the window is rejected
        let tight = TimeWindow::new(3.0, 256, 0.05).unwrap();
        assert!(cutoff_psi(CutoffKind::UnitPlateau, &tight).is_err());
    }

    #[test]
    fn spacetime_plancherel_and_round_trip() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let window = TimeWindow::standard(64, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let values: Vec<Complex64> = (0..grid.point_count() * window.samples())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let field = SpaceTimeField::new(grid, window, values).unwrap();
        let spectrum = field.to_spectrum();
        assert!((field.l2() - spectrum.l2()).abs() < 1e-10 * field.l2());
        let back = spectrum.to_field();
        assert!(field.max_abs_diff(&back) < 1e-12);
    }

    #[test]
    fn atom_realizes_single_exponential() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let window = TimeWindow::standard(64, 0.25).unwrap();
        let atom = SpaceTimeSpectrum::atom(grid, window, &[1], 4, Complex64::ONE).unwrap();
        // lambda = 4 / L = 1: this is e^{2 pi i (x + t)}
        let field = atom.to_field();
        for j in (0..window.samples()).step_by(7) {
            let t = window.time_at(j);
            for x_idx in (0..grid.point_count()).step_by(3) {
                let x = grid.point_at(x_idx)[0];
                let expected = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (x + t));
                let got = field.slice(j)[x_idx];
                assert!((got - expected).norm() < 1e-12);
            }
        }
        let round = field.to_spectrum();
        assert!((round.l2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonlinear_w_closed_forms() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let window = TimeWindow::standard(256, 0.25).unwrap();
        let params = ModelParams::new(1.0, Sign::Plus, 2.0, 1).unwrap();

        let zero = SpaceTimeField::zeros(grid, window);
        let w = nonlinear_w(&zero, &Field::zeros(grid), &params).unwrap();
        assert_eq!(w.l2(), 0.0);

        // constant-in-time single mode, v0 = 0:
        // F1 = eps u |u|^alpha (1 - e^{-t/K})
        let amp = 0.3;
        let u_mode = Spectrum::single_mode(grid, &[1], Complex64::new(amp, 0.0))
            .unwrap()
            .to_field();
        let mut u = SpaceTimeField::zeros(grid, window);
        for j in 0..window.samples() {
            u.slice_mut(j).copy_from_slice(u_mode.values());
        }
        let w = nonlinear_w(&u, &Field::zeros(grid), &params).unwrap();
        for j in (0..window.samples()).step_by(13) {
            let t = window.time_at(j);
            let factor = amp * amp * (1.0 - (-t / params.relaxation).exp());
            for x in (0..grid.point_count()).step_by(5) {
                let expected = u_mode.values()[x] * factor;
                assert!((w.slice(j)[x] - expected).norm() < 1e-12, "t = {t}, x = {x}");
            }
        }

        // v0 = 1, K = 1, u constant in time: F0 = e^{-t} u
        let ones = Field::constant(grid, Complex64::ONE);
        let w = nonlinear_w(&u, &ones, &params).unwrap();
        for j in (0..window.samples()).step_by(29) {
            let t = window.time_at(j);
            let f0 = (-t).exp();
            let f1 = amp * amp * (1.0 - (-t).exp());
            for x in (0..grid.point_count()).step_by(7) {
                let expected = u_mode.values()[x] * (f0 + f1);
                assert!((w.slice(j)[x] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn duhamel_free_resonant_and_linear() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let window = TimeWindow::standard(128, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u0 = Spectrum::new(
            grid,
            (0..grid.point_count())
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap();

        // w = 0: the free orbit
        let free = duhamel_apply(&u0, &SpaceTimeField::zeros(grid, window)).unwrap();
        let orbit = free_orbit(&u0, &window);
        assert!(free.max_abs_diff(&orbit) < 1e-12);

        // resonant source w_hat(xi, t) = c e^{2 pi i t |xi|^2} at one mode:
        // u_hat(xi, t) = -i c t e^{2 pi i t |xi|^2}, exact here because the
        // trapezoid integrates a constant exactly
        let c = Complex64::new(0.7, -0.2);
        let mode = [2i64];
        let q = 4.0;
        let mut w = SpaceTimeField::zeros(grid, window);
        for j in 0..window.samples() {
            let t = window.time_at(j);
            let coeff = c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t * q);
            let spectrum = Spectrum::single_mode(grid, &mode, coeff).unwrap();
            w.slice_mut(j)
                .copy_from_slice(fourier_inverse(&spectrum).values());
        }
        let out = duhamel_apply(&Spectrum::zeros(grid), &w).unwrap();
        for j in (0..window.samples()).step_by(11) {
            let t = window.time_at(j);
            let expected = -Complex64::i()
                * c
                * t
                * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t * q);
            let got = fourier_forward(&out.field_at(j));
            let idx = grid.index_of(&mode).unwrap();
            assert!((got.coeffs()[idx] - expected).norm() < 1e-11, "t = {t}");
        }

        // linearity: Duhamel(u0, w1 + w2) = Duhamel(u0, w1) + Duhamel(0, w2)
        let mut w1 = SpaceTimeField::zeros(grid, window);
        for j in 0..window.samples() {
            for (x, z) in w1.slice_mut(j).iter_mut().enumerate() {
                *z = Complex64::new((x as f64 * 0.1).sin(), 0.3);
            }
        }
        let mut combined = w1.clone();
        for (a, b) in combined.values.iter_mut().zip(&w.values) {
            *a += b;
        }
        let lhs = duhamel_apply(&u0, &combined).unwrap();
        let d1 = duhamel_apply(&u0, &w1).unwrap();
        let d2 = duhamel_apply(&Spectrum::zeros(grid), &w).unwrap();
        let mut rhs = d1.clone();
        for (a, b) in rhs.values.iter_mut().zip(&d2.values) {
            *a += b;
        }
        assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn fixed_point_map_support_and_plateau() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let window = TimeWindow::standard(256, 0.2).unwrap();
        let params = ModelParams::new(1.0, Sign::Minus, 2.0, 1).unwrap();
        let u0 = Spectrum::single_mode(grid, &[1], Complex64::new(0.2, 0.0)).unwrap();
        let v0 = gaussian(grid, 0.1, 0.15);
        let u = free_orbit(&u0, &window);
        let phi = fixed_point_map(&u, &u0, &v0, &params).unwrap();

        // exact support in [-2 delta, 2 delta]
        for j in 0..window.samples() {
            let t = window.time_at(j);
            if t <= -2.0 * window.delta() || t >= 2.0 * window.delta() {
                assert!(phi.slice(j).iter().all(|z| z.norm() == 0.0), "t = {t}");
            }
        }

        // on the plateau [0, delta] the cutoff is 1: Phi equals the
        // unrestricted Duhamel expression
        let w = nonlinear_w(&u, &v0, &params).unwrap();
        let raw = duhamel_apply(&u0, &w).unwrap();
        for j in 0..window.samples() {
            let t = window.time_at(j);
            if t >= 0.0 && t <= window.delta() {
                let diff = phi
                    .slice(j)
                    .iter()
                    .zip(raw.slice(j))
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0f64, f64::max);
                assert!(diff < 1e-14, "t = {t}");
            }
        }
    }

    #[test]
    fn picard_zero_data_converges_immediately() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let window = TimeWindow::standard(128, 0.1).unwrap();
        let params = ModelParams::new(1.0, Sign::Plus, 2.0, 1).unwrap();
        let solution = picard_solve(
            &Spectrum::zeros(grid),
            &Field::zeros(grid),
            &params,
            &window,
            1.0,
            1e-12,
            5,
        )
        .unwrap();
        assert_eq!(solution.history.len(), 1);
        assert_eq!(solution.fixed_point.l2(), 0.0);
    }

    #[test]
    fn picard_contracts_and_matches_split_step() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let window = TimeWindow::standard(512, 0.05).unwrap();
        let params = ModelParams::new(1.0, Sign::Minus, 2.0, 1).unwrap();

        // gaussian data scaled to ||u0||_{H^1} = 0.1
        let shape = gaussian(grid, 1.0, 0.1);
        let h1 = sobolev_norm(1.0, &shape.to_spectrum()).unwrap();
        let mut u0_field = shape.clone();
        for z in u0_field.values_mut() {
            *z *= 0.1 / h1;
        }
        let u0 = u0_field.to_spectrum();
        let v0 = gaussian(grid, 0.1, 0.1);

        let solution = picard_solve(&u0, &v0, &params, &window, 1.0, 1e-11, 12).unwrap();
        assert!(solution.history.len() <= 12);
        for h in &solution.history {
            if let Some(r) = h.ratio {
                assert!(r < 1.0, "ratio {r} at k = {}", h.k);
            }
        }

        // fixed point vs split-step on [0, delta], stepping on the window grid
        let dt = window.dt();
        let steps = (window.delta() / dt).round() as usize;
        let state = SimState::new(0.0, u0_field, v0, params).unwrap();
        let trajectory = evolve(&state, steps as f64 * dt, dt, 1).unwrap();
        let j0 = window.zero_index();
        let mut worst = 0.0f64;
        for (m, snap) in trajectory.states.iter().enumerate() {
            let picard_u = solution.fixed_point.field_at(j0 + m);
            let mut diff = picard_u.clone();
            for (d, s) in diff.values_mut().iter_mut().zip(snap.u.values()) {
                *d -= s;
            }
            worst = worst.max(lebesgue_norm(2.0, &diff).unwrap());
        }
        assert!(worst < 5e-5, "picard-vs-split-step gap {worst}");
    }

    #[test]
    fn spacetime_serialization_round_trip() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let window = TimeWindow::standard(64, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut h = SpaceTimeSpectrum::zeros(grid, window);
        for c in h.coeffs_mut() {
            *c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let mut buf = Vec::new();
        write_spacetime_spectrum_csv(&mut buf, &h).unwrap();
        let back = read_spacetime_spectrum_csv(&buf[..]).unwrap();
        assert_eq!(h.coeffs(), back.coeffs());
        assert_eq!(back.window().delta(), window.delta());
    }

    // the homogeneous linear estimate: the cutoff free orbit is bounded in
    // X^{s,b} by the data's Sobolev norm, with one constant per
    // (s, b, delta) stable over fresh samples
    #[test]
    fn linear_estimate_constant_is_stable() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let window = TimeWindow::standard(256, 0.1).unwrap();
        let psi1 = cutoff_psi(CutoffKind::Existence, &window).unwrap();
        let (s, b) = (1.0, 0.375);

        let ratio_of = |seed: u64| -> f64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut u0 = Spectrum::zeros(grid);
            for index in 0..grid.point_count() {
                // band |xi| <= 3 keeps the free phase below the window's
                // time Nyquist
                if grid.mode_at(index)[0].abs() <= 3 {
                    u0.coeffs_mut()[index] =
                        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                }
            }
            let mut orbit = free_orbit(&u0, &window);
            orbit.scale_by_time_profile(&psi1.samples);
            xsb::xsb_norm(&orbit.to_spectrum(), s, b) / sobolev_norm(s, &u0).unwrap()
        };

        let fitted = (0..100).map(|k| ratio_of(1000 + k)).fold(0.0f64, f64::max);
        for k in 0..100u64 {
            let fresh = ratio_of(5000 + k);
            assert!(
                fresh <= 1.05 * fitted,
                "fresh ratio {fresh} exceeds 1.05 x fitted {fitted}"
            );
        }
    }

    #[test]
    fn decompose_zero_and_atoms() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let window = TimeWindow::standard(128, 0.25).unwrap();

        let zero = SpaceTimeSpectrum::zeros(grid, window);
        let terms = duhamel_decompose(&zero, 0.0, 0.5, 0.625).unwrap();
        for t in [
            &terms.linear,
            &terms.taylor,
            &terms.oscillating,
            &terms.anchored,
        ] {
            assert_eq!(t.l2(), 0.0);
        }

        // far atom: mu = 5 kills the near term
        let far = SpaceTimeSpectrum::atom(grid, window, &[0], 20, Complex64::ONE).unwrap();
        let terms = duhamel_decompose(&far, 0.0, 0.5, 0.625).unwrap();
        assert_eq!(terms.taylor.l2(), 0.0);
        assert!(terms.oscillating.l2() > 0.0);
        assert!(terms.anchored.l2() > 0.0);
        assert!(
            terms.report.rel_mismatch < 1e-8,
            "mismatch {}",
            terms.report.rel_mismatch
        );

        // resonant atom: mu = 0, only the near term fires; its first Taylor
        // contribution is -i t psi1(t) w_hat on the free phase
        let mode = [1i64];
        let res = SpaceTimeSpectrum::atom(grid, window, &mode, 4, Complex64::ONE).unwrap();
        let terms = duhamel_decompose(&res, 0.0, 0.5, 0.625).unwrap();
        assert_eq!(terms.oscillating.l2(), 0.0);
        assert_eq!(terms.anchored.l2(), 0.0);
        assert!(terms.taylor.l2() > 0.0);
        assert!(terms.report.rel_mismatch < 1e-10);
        let j = window.zero_index() + 2; // small positive t on the plateau
        let t = window.time_at(j);
        let got = fourier_forward(&terms.taylor.field_at(j));
        let idx = grid.index_of(&mode).unwrap();
        let leading =
            -Complex64::i() * t * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t);
        let rel = (got.coeffs()[idx] - leading).norm() / leading.norm();
        assert!(rel < 2.0 * std::f64::consts::PI * t, "rel = {rel}, t = {t}");
    }

    #[test]
    fn decompose_consistency_on_random_sparse_sources() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let window = TimeWindow::standard(128, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for round in 0..10 {
            let mut w = SpaceTimeSpectrum::zeros(grid, window);
            for _ in 0..6 {
                let mode = rng.random_range(0..grid.point_count());
                let jk = rng.random_range(0..window.samples());
                w.coeffs_mut()[jk * grid.point_count() + mode] =
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
            let terms = duhamel_decompose(&w, 0.0, 0.5, 0.625).unwrap();
            assert!(
                terms.report.rel_mismatch < 1e-8,
                "round {round}: mismatch {}",
                terms.report.rel_mismatch
            );
        }
    }
}
