//! Bourgain-space machinery on the truncated space-time lattice: X^{s,b}
//! norms, dyadic shells in frequency and modulation, dyadic frequency
//! pieces, the shell-supremum norm, the time-cutoff scaling check, and the
//! L^4 embedding check.
//!
//! The modulation of a lattice point (xi, lambda) is `mu = lambda - |xi|^2`,
//! its distance from the free paraboloid. On the standard window every
//! lambda is a dyadic rational, so shell membership tests are exact.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Result, SdError};
use crate::picard::{Bump, SpaceTimeSpectrum};
use crate::torus::{bracket, plan};

/// Dyadic shell label: `a` and `n` are 0 or powers of two. The shell holds
/// points with `n <= |xi| < 2n` and `a <= |mu| < 2a`; the 0-cells mean
/// `|xi| < 1` resp. `|mu| < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShellIndex {
    pub a: u64,
    pub n: u64,
}

impl ShellIndex {
    pub fn new(a: u64, n: u64) -> Result<Self> {
        let dyadic = |v: u64| v == 0 || v.is_power_of_two();
        if !dyadic(a) || !dyadic(n) {
            return Err(SdError::InvalidParameter(format!(
                "shell labels must be 0 or powers of two (got a = {a}, n = {n})"
            )));
        }
        Ok(ShellIndex { a, n })
    }

    /// Shell weight `(a + 1)^{1/2} (n + 1)^s`.
    pub fn weight(&self, s: f64) -> f64 {
        ((self.a + 1) as f64).sqrt() * ((self.n + 1) as f64).powf(s)
    }
}

/// Dyadic label of a nonnegative value: 0 when below 1, else the power of
/// two `2^m <= value < 2^{m+1}`.
fn dyadic_label(value: f64) -> u64 {
    if value < 1.0 {
        return 0;
    }
    let mut label = 1u64;
    while 2.0 * label as f64 <= value {
        label *= 2;
    }
    label
}

/// Shell containing a lattice point with `|xi|^2 = norm_sq` and modulation
/// `mu`.
pub fn shell_of(norm_sq: i64, mu: f64) -> ShellIndex {
    // frequency label via the exact integer square: n <= |xi| < 2n
    // iff n^2 <= |xi|^2 < 4 n^2
    let n = if norm_sq < 1 {
        0
    } else {
        let mut label = 1u64;
        while 4 * (label * label) as i64 <= norm_sq {
            label *= 2;
        }
        label
    };
    ShellIndex {
        a: dyadic_label(mu.abs()),
        n,
    }
}

fn modulation(h: &SpaceTimeSpectrum, mode: usize, jk: usize) -> f64 {
    h.window().lambda_at(jk) - h.grid().norm_sq_at(mode) as f64
}

/// `(sum <xi>^{2s} <lambda - |xi|^2>^{2b} |c|^2)^{1/2}` over the lattice.
pub fn xsb_norm(h: &SpaceTimeSpectrum, s: f64, b: f64) -> f64 {
    let grid = h.grid();
    let window = h.window();
    let p = grid.point_count();
    // per-mode spatial weights are reused across the lambda sweep
    let spatial: Vec<f64> = (0..p)
        .map(|mode| bracket((grid.norm_sq_at(mode) as f64).sqrt()).powf(2.0 * s))
        .collect();
    let mut total = 0.0;
    for jk in 0..window.samples() {
        let lambda = window.lambda_at(jk);
        for mode in 0..p {
            let c = h.coeffs()[jk * p + mode];
            if c == Complex64::ZERO {
                continue;
            }
            let mu = lambda - grid.norm_sq_at(mode) as f64;
            total += spatial[mode] * bracket(mu).powf(2.0 * b) * c.norm_sqr();
        }
    }
    total.sqrt()
}

/// Zero every coefficient outside the shell. Shells over all labels
/// partition the lattice.
pub fn shell_restrict(h: &SpaceTimeSpectrum, shell: ShellIndex) -> SpaceTimeSpectrum {
    let p = h.grid().point_count();
    let mut out = h.clone();
    for jk in 0..h.window().samples() {
        for mode in 0..p {
            let index = jk * p + mode;
            if out.coeffs()[index] == Complex64::ZERO {
                continue;
            }
            if shell_of(h.grid().norm_sq_at(mode), modulation(h, mode, jk)) != shell {
                out.coeffs_mut()[index] = Complex64::ZERO;
            }
        }
    }
    out
}

/// Mass per occupied shell, keyed by label.
pub fn shell_masses(h: &SpaceTimeSpectrum) -> HashMap<ShellIndex, f64> {
    let mut masses: HashMap<ShellIndex, f64> = HashMap::new();
    for (mode, jk, c) in h.nonzero() {
        let shell = shell_of(h.grid().norm_sq_at(mode), modulation(h, mode, jk));
        *masses.entry(shell).or_insert(0.0) += c.norm_sqr();
    }
    masses
}

/// Shell-supremum norm: `sup_{a,n} (a+1)^{1/2} (n+1)^s (shell mass)^{1/2}`.
pub fn triple_norm(h: &SpaceTimeSpectrum, s: f64) -> f64 {
    shell_masses(h)
        .iter()
        .map(|(shell, mass)| shell.weight(s) * mass.sqrt())
        .fold(0.0, f64::max)
}

/// Dyadic frequency piece: retains `m/2 < |xi| <= m` (for m = 1, the whole
/// cell `|xi| <= 1`). The pieces over m = 1, 2, 4, ... telescope to the
/// identity.
pub fn dyadic_piece(h: &SpaceTimeSpectrum, m: u64) -> Result<SpaceTimeSpectrum> {
    if m == 0 || !m.is_power_of_two() {
        return Err(SdError::InvalidParameter(format!(
            "dyadic piece needs m in {{1, 2, 4, ...}} (got {m})"
        )));
    }
    let p = h.grid().point_count();
    let m_sq = (m * m) as i64;
    let keep = |q: i64| -> bool {
        if m == 1 {
            q <= 1
        } else {
            4 * q > m_sq && q <= m_sq
        }
    };
    let mut out = h.clone();
    for jk in 0..h.window().samples() {
        for mode in 0..p {
            if !keep(h.grid().norm_sq_at(mode)) {
                out.coeffs_mut()[jk * p + mode] = Complex64::ZERO;
            }
        }
    }
    Ok(out)
}

/// Ratio tested by the time-cutoff scaling lemma:
///
///   ||psi_T h||_{X^{s,b'}} / (T^{b-b'} ||h||_{X^{s,b}}),
///
/// with psi_T(t) = psi(t/T) from the unit-plateau mollifier family. Valid
/// for 0 < T < 1 and -1/2 < b' <= b < 1/2; a zero h reports 0.
pub fn cutoff_scaling_ratio(
    h: &SpaceTimeSpectrum,
    t_scale: f64,
    s: f64,
    b: f64,
    b_prime: f64,
) -> Result<f64> {
    if !(t_scale > 0.0 && t_scale < 1.0) {
        return Err(SdError::InvalidParameter(format!(
            "cutoff scale must lie in (0, 1) (got {t_scale})"
        )));
    }
    if !(-0.5 < b_prime && b_prime <= b && b < 0.5) {
        return Err(SdError::InvalidParameter(format!(
            "need -1/2 < b' <= b < 1/2 (got b = {b}, b' = {b_prime})"
        )));
    }
    let denominator = t_scale.powf(b - b_prime) * xsb_norm(h, s, b);
    if denominator == 0.0 {
        return Ok(0.0);
    }
    let base = Bump::new((-2.0, 2.0), (-1.0, 1.0))?;
    let cut = base.rescaled(t_scale)?;
    let profile: Vec<f64> = h.window().times().iter().map(|&t| cut.eval(t)).collect();
    let mut field = h.to_field();
    field.scale_by_time_profile(&profile);
    Ok(xsb_norm(&field.to_spectrum(), s, b_prime) / denominator)
}

/// L^4 norm of the physical realization over one space period times the
/// time interval [0, 1], by fine-grid quadrature: spatial zero-padding to an
/// alias-free grid, trapezoid in time. Exact when all time frequencies are
/// integers (then the integrand has period one).
pub fn l4_space_time_norm(h: &SpaceTimeSpectrum) -> Result<f64> {
    let grid = h.grid();
    if grid.dim() != 1 {
        return Err(SdError::InvalidParameter(
            "the L^4 embedding check is one-dimensional".into(),
        ));
    }
    let window = h.window();
    let p = grid.point_count();
    let n = window.samples();
    let fine_x = 4 * p;
    let quad_t = (2 * n).max(256);

    // spatial synthesis per lambda slice on the fine grid
    let fft = plan(fine_x, true);
    let mut slices = vec![Complex64::ZERO; n * fine_x];
    let mut line = vec![Complex64::ZERO; fine_x];
    for jk in 0..n {
        line.fill(Complex64::ZERO);
        let mut occupied = false;
        for mode in 0..p {
            let c = h.coeffs()[jk * p + mode];
            if c == Complex64::ZERO {
                continue;
            }
            occupied = true;
            let xi = grid.mode_at(mode)[0];
            line[xi.rem_euclid(fine_x as i64) as usize] = c;
        }
        if occupied {
            fft.process(&mut line);
            slices[jk * fine_x..(jk + 1) * fine_x].copy_from_slice(&line);
        }
    }

    // time combination with trapezoid weights over [0, 1]
    let two_pi = 2.0 * std::f64::consts::PI;
    let lambdas: Vec<f64> = (0..n).map(|jk| window.lambda_at(jk)).collect();
    let mut mean_fourth = 0.0;
    for qt in 0..=quad_t {
        let t = qt as f64 / quad_t as f64;
        let phases: Vec<Complex64> = lambdas
            .iter()
            .map(|&l| Complex64::from_polar(1.0, two_pi * (l * t).fract()))
            .collect();
        let weight = if qt == 0 || qt == quad_t { 0.5 } else { 1.0 };
        let mut slice_sum = 0.0;
        for x in 0..fine_x {
            let mut value = Complex64::ZERO;
            for jk in 0..n {
                let base = slices[jk * fine_x + x];
                if base != Complex64::ZERO {
                    value += base * phases[jk];
                }
            }
            slice_sum += value.norm_sqr() * value.norm_sqr();
        }
        mean_fourth += weight * slice_sum / fine_x as f64;
    }
    mean_fourth /= quad_t as f64;
    Ok(mean_fourth.powf(0.25))
}

/// `||h||_{L^4(T x [0,1])} / ||h||_{X^{0,3/8}}`; errors on zero denominator.
pub fn l4_embedding_ratio(h: &SpaceTimeSpectrum) -> Result<f64> {
    let denominator = xsb_norm(h, 0.0, 0.375);
    if denominator == 0.0 {
        return Err(SdError::InvalidParameter(
            "the embedding ratio needs a nonzero input".into(),
        ));
    }
    Ok(l4_space_time_norm(h)? / denominator)
}

/// One row of a norm-sweep report.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    pub label: String,
    pub value: f64,
}

/// Cutoff-scaling sweep over a list of scales for one sample.
pub fn cutoff_scaling_sweep(
    h: &SpaceTimeSpectrum,
    scales: &[f64],
    s: f64,
    b: f64,
    b_prime: f64,
) -> Result<Vec<SweepRow>> {
    scales
        .iter()
        .map(|&t_scale| {
            Ok(SweepRow {
                s,
                b,
                b_prime,
                label: format!("T={t_scale}"),
                value: cutoff_scaling_ratio(h, t_scale, s, b, b_prime)?,
            })
        })
        .collect()
}
