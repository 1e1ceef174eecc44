//! Time integration of the coupled system: exact-exponential Debye step,
//! unitary kinetic and potential substeps, the Strang-split coupled stepper,
//! and the Maxwell-Debye physical rescaling.
//!
//! The kinetic substep multiplies mode `xi` by `e^{2 pi i t |xi|^2}`; both
//! substeps acting on `u` are grid isometries, so the L^2 norm of `u` is
//! conserved to round-off along any trajectory.

use num_complex::Complex64;

use crate::error::{Result, SdError};
use crate::torus::{dealias, lebesgue_norm, Field, Spectrum};

/// Sign of the coupling, `eps` in `K v_t + v = eps |u|^alpha`.
/// `Minus` is the focusing case.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_i64(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(SdError::InvalidParameter(format!(
                "coupling sign must be +1 or -1 (got {v})"
            ))),
        }
    }
}

/// Model parameters: relaxation time K > 0, coupling sign, nonlinearity
/// exponent alpha > 0 (the potential power is p = alpha + 2).
#[derive(Clone, Copy, Debug)]
pub struct ModelParams {
    pub relaxation: f64,
    pub coupling: Sign,
    pub alpha: f64,
    pub dim: u32,
}

impl ModelParams {
    pub fn new(relaxation: f64, coupling: Sign, alpha: f64, dim: u32) -> Result<Self> {
        if !(relaxation > 0.0) || !relaxation.is_finite() {
            return Err(SdError::InvalidParameter(format!(
                "relaxation time K must be positive (got {relaxation})"
            )));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(SdError::InvalidParameter(format!(
                "nonlinearity exponent alpha must be positive (got {alpha})"
            )));
        }
        Ok(ModelParams {
            relaxation,
            coupling,
            alpha,
            dim,
        })
    }

    pub fn power_p(&self) -> f64 {
        self.alpha + 2.0
    }
}

/// One snapshot of the coupled state (u complex, v real) at time t.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub v: Field,
    pub params: ModelParams,
}

impl SimState {
    pub fn new(t: f64, u: Field, v: Field, params: ModelParams) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(SdError::SizeMismatch(
                "u and v must live on the same grid".into(),
            ));
        }
        v.require_real()?;
        Ok(SimState { t, u, v, params })
    }
}

/// Time-ordered snapshots at a uniform save interval.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    pub scheme: &'static str,
    pub dt: f64,
    pub save_every: usize,
}

/// Unit complex number at `turns` full turns; the argument is reduced before
/// the trig call so large integer phases stay exact.
fn unit_phase(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * turns.fract())
}

/// Free kinetic group: multiply mode `xi` by `e^{2 pi i t |xi|^2}`.
pub fn free_evolution(spectrum: &Spectrum, t: f64) -> Spectrum {
    let grid = spectrum.grid();
    let mut out = spectrum.clone();
    for (index, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= unit_phase(t * grid.norm_sq_at(index) as f64);
    }
    out
}

/// Exact flow of `i u_t = u v` with `v` frozen: `u <- u e^{-i v dt}`,
/// a pointwise rotation, hence an isometry.
pub fn potential_rotation(u: &Field, v: &Field, dt: f64) -> Result<Field> {
    if u.grid() != v.grid() {
        return Err(SdError::SizeMismatch(
            "u and v must live on the same grid".into(),
        ));
    }
    v.require_real()?;
    let mut out = u.clone();
    for (z, w) in out.values_mut().iter_mut().zip(v.values()) {
        *z *= Complex64::from_polar(1.0, -w.re * dt);
    }
    Ok(out)
}

/// `(1 - e^{-z}) / z` with a series branch against cancellation.
fn phi(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z * (-0.5 + z * (1.0 / 6.0 + z * (-1.0 / 24.0 + z / 120.0)))
    } else {
        (-z).exp_m1() / -z
    }
}

/// Driving samples for one Debye substep.
pub enum DebyeSource<'a> {
    /// Source frozen at the left endpoint (order 1).
    Frozen(&'a [f64]),
    /// Linear-in-tau interpolant between the endpoint samples (order 2).
    Endpoints { start: &'a [f64], end: &'a [f64] },
}

/// Exponential-integrator step for `K v_t + v = eps * source`:
///
///   v(dt) = e^{-dt/K} v(0) + (eps/K) \int_0^dt e^{-(dt-tau)/K} source(tau) dtau
///
/// with the integral taken exactly against the frozen or linear-in-tau
/// interpolant of the source. Constant sources are integrated exactly by
/// both orders.
pub fn debye_step(v: &Field, source: DebyeSource, dt: f64, params: &ModelParams) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(SdError::InvalidParameter(format!(
            "debye_step needs dt > 0 (got {dt})"
        )));
    }
    v.require_real()?;
    let len = v.values().len();
    let check_len = |s: &[f64]| -> Result<()> {
        if s.len() != len {
            return Err(SdError::SizeMismatch(format!(
                "source has {} samples, field has {len}",
                s.len()
            )));
        }
        Ok(())
    };
    let z = dt / params.relaxation;
    let decay = (-z).exp();
    let eps = params.coupling.value();
    let mut out = v.clone();
    match source {
        DebyeSource::Frozen(s) => {
            check_len(s)?;
            let gain = eps * (1.0 - decay);
            for (w, &si) in out.values_mut().iter_mut().zip(s) {
                *w = Complex64::new(decay * w.re + gain * si, 0.0);
            }
        }
        DebyeSource::Endpoints { start, end } => {
            check_len(start)?;
            check_len(end)?;
            // weights from the exact integral of the linear interpolant
            let ph = phi(z);
            let w_start = eps * (ph - decay);
            let w_end = eps * (1.0 - ph);
            for ((w, &s0), &s1) in out.values_mut().iter_mut().zip(start).zip(end) {
                *w = Complex64::new(decay * w.re + w_start * s0 + w_end * s1, 0.0);
            }
        }
    }
    Ok(out)
}

/// `|u|^alpha` samples; the alpha = 2 case is the exact square.
pub fn nonlinearity_samples(u: &Field, alpha: f64) -> Vec<f64> {
    if alpha == 2.0 {
        u.values().iter().map(|z| z.norm_sqr()).collect()
    } else {
        u.values().iter().map(|z| z.norm().powf(alpha)).collect()
    }
}

/// Debye source for the stepper. For the polynomial case alpha = 2 the
/// source is run through the two-thirds filter; non-polynomial powers have
/// no finite alias band, so they are used as sampled (a mitigation only).
fn filtered_source(u: &Field, params: &ModelParams) -> Result<Vec<f64>> {
    let raw = nonlinearity_samples(u, params.alpha);
    if params.alpha == 2.0 {
        let field = Field::from_real(u.grid(), &raw)?;
        let cut = dealias(&field.to_spectrum()).to_field();
        Ok(cut.values().iter().map(|z| z.re).collect())
    } else {
        Ok(raw)
    }
}

/// One Strang step: half potential rotation, half Debye, full kinetic,
/// half Debye, half potential rotation with the updated v. Palindromic
/// composition of exact substep flows, so second order overall; both
/// u-substeps are isometries.
pub fn strang_step(state: &SimState, dt: f64) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(SdError::InvalidParameter(format!(
            "strang_step needs dt > 0 (got {dt})"
        )));
    }
    let params = state.params;
    let half = dt / 2.0;

    let u = potential_rotation(&state.u, &state.v, half)?;
    let source = filtered_source(&u, &params)?;
    let v = debye_step(
        &state.v,
        DebyeSource::Endpoints {
            start: &source,
            end: &source,
        },
        half,
        &params,
    )?;
    let u = free_evolution(&u.to_spectrum(), dt).to_field();
    let source = filtered_source(&u, &params)?;
    let v = debye_step(
        &v,
        DebyeSource::Endpoints {
            start: &source,
            end: &source,
        },
        half,
        &params,
    )?;
    let u = potential_rotation(&u, &v, half)?;

    Ok(SimState {
        t: state.t + dt,
        u,
        v,
        params,
    })
}

/// Abort threshold distinguishing focusing blow-up from overflow noise.
const BLOW_UP_LINF: f64 = 1e8;

fn check_finite(state: &SimState) -> Result<()> {
    let linf = state.u.max_abs();
    if !linf.is_finite() || linf > BLOW_UP_LINF || !state.v.max_abs().is_finite() {
        let l2 = lebesgue_norm(2.0, &state.u).unwrap_or(f64::NAN);
        return Err(SdError::BlowUp {
            t: state.t,
            l2,
            linf,
        });
    }
    Ok(())
}

/// Repeated Strang steps over `[t0, t0 + horizon]`, snapshotting every
/// `save_every` steps (initial and final states always included).
pub fn evolve(state: &SimState, horizon: f64, dt: f64, save_every: usize) -> Result<Trajectory> {
    if !(horizon > 0.0) || !(dt > 0.0) || dt > horizon {
        return Err(SdError::InvalidParameter(format!(
            "evolve needs 0 < dt <= horizon (got dt = {dt}, horizon = {horizon})"
        )));
    }
    if save_every == 0 {
        return Err(SdError::InvalidParameter(
            "save_every must be at least 1".into(),
        ));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    let mut current = state.clone();
    check_finite(&current)?;
    let mut states = vec![current.clone()];
    for step in 1..=steps {
        current = strang_step(&current, dt)?;
        check_finite(&current)?;
        if step % save_every == 0 || step == steps {
            states.push(current.clone());
        }
    }
    Ok(Trajectory {
        states,
        scheme: "strang2",
        dt,
        save_every,
    })
}

/// Physical constants of the Maxwell-Debye system.
#[derive(Clone, Copy, Debug)]
pub struct MaxwellParams {
    pub light_speed: f64,
    pub wave_vector: f64,
    pub eta0: f64,
    pub eta2: f64,
    pub omega0: f64,
}

impl MaxwellParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("light_speed", self.light_speed),
            ("wave_vector", self.wave_vector),
            ("eta0", self.eta0),
            ("omega0", self.omega0),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SdError::InvalidParameter(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        if self.eta2 == 0.0 || !self.eta2.is_finite() {
            return Err(SdError::InvalidParameter(format!(
                "eta2 must be nonzero (got {})",
                self.eta2
            )));
        }
        Ok(())
    }

    fn amplitude_u(&self) -> f64 {
        (self.omega0 * self.eta2.abs() / self.eta0).sqrt()
    }

    fn amplitude_v(&self) -> f64 {
        self.omega0 / self.eta0
    }

    /// Spatial dilation factor of the rescaling, recorded as metadata; the
    /// stored domain is always the unit torus, so the dilation is a pure
    /// relabeling and only the amplitudes act on the samples.
    pub fn dilation(&self) -> f64 {
        (self.light_speed / (self.wave_vector * self.eta0)).sqrt()
    }
}

/// Metadata emitted by the rescaling.
#[derive(Clone, Copy, Debug)]
pub struct RescaleMeta {
    pub amplitude_u: f64,
    pub amplitude_v: f64,
    pub dilation: f64,
}

fn scaled(field: &Field, factor: f64) -> Field {
    let mut out = field.clone();
    for z in out.values_mut() {
        *z *= factor;
    }
    out
}

/// Map a Maxwell-Debye envelope/response pair (A, nu) to model variables
/// (u, v): `u = sqrt(omega0 |eta2| / eta0) A`, `v = (omega0/eta0) nu`.
pub fn maxwell_rescale(
    envelope: &Field,
    response: &Field,
    params: &MaxwellParams,
) -> Result<(Field, Field, RescaleMeta)> {
    params.validate()?;
    let meta = RescaleMeta {
        amplitude_u: params.amplitude_u(),
        amplitude_v: params.amplitude_v(),
        dilation: params.dilation(),
    };
    Ok((
        scaled(envelope, meta.amplitude_u),
        scaled(response, meta.amplitude_v),
        meta,
    ))
}

/// Inverse of [`maxwell_rescale`].
pub fn maxwell_unscale(
    u: &Field,
    v: &Field,
    params: &MaxwellParams,
) -> Result<(Field, Field, RescaleMeta)> {
    params.validate()?;
    let meta = RescaleMeta {
        amplitude_u: params.amplitude_u(),
        amplitude_v: params.amplitude_v(),
        dilation: params.dilation(),
    };
    Ok((
        scaled(u, 1.0 / meta.amplitude_u),
        scaled(v, 1.0 / meta.amplitude_v),
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{sobolev_norm, TorusGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> TorusGrid {
        TorusGrid::new(1, 32).unwrap()
    }

    fn params(eps: Sign) -> ModelParams {
        ModelParams::new(1.0, eps, 2.0, 1).unwrap()
    }

    fn random_field(grid: TorusGrid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.point_count())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        Field::new(grid, values).unwrap()
    }

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
    fn free_evolution_phases() {
        let g = grid();
        let s = Spectrum::single_mode(g, &[1], Complex64::ONE).unwrap();
        let id = free_evolution(&s, 0.0);
        assert_eq!(id.coeffs(), s.coeffs());

        // xi = 1, t = 1/2: multiplier e^{i pi} = -1
        let half = free_evolution(&s, 0.5);
        let idx = g.index_of(&[1]).unwrap();
        assert!((half.coeffs()[idx] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        // t = 1 is the identity on the integer lattice
        let full = free_evolution(&random_field(g, 3).to_spectrum(), 1.0);
        let orig = random_field(g, 3).to_spectrum();
        let max = full
            .coeffs()
            .iter()
            .zip(orig.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-13);
    }

    #[test]
    fn free_evolution_group_law_and_reversal() {
        let g = grid();
        let s = random_field(g, 7).to_spectrum();
        let ab = free_evolution(&free_evolution(&s, 0.3), 0.4);
        let once = free_evolution(&s, 0.7);
        let max = ab
            .coeffs()
            .iter()
            .zip(once.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-13);

        let back = free_evolution(&free_evolution(&s, 0.37), -0.37);
        let max = back
            .coeffs()
            .iter()
            .zip(s.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-13);
    }

    #[test]
    fn potential_rotation_cases() {
        let g = grid();
        let u = random_field(g, 1);
        let zero = Field::zeros(g);
        let same = potential_rotation(&u, &zero, 0.1).unwrap();
        assert_eq!(same.values(), u.values());

        let dt = 0.25;
        let v = Field::constant(g, Complex64::new(std::f64::consts::PI / dt, 0.0));
        let flipped = potential_rotation(&u, &v, dt).unwrap();
        let max = flipped
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a + b).norm())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-12);

        let v = random_field(g, 2);
        let v_real = Field::from_real(g, &v.real_values()).unwrap();
        let rotated = potential_rotation(&u, &v_real, 0.3).unwrap();
        let before = lebesgue_norm(2.0, &u).unwrap();
        let after = lebesgue_norm(2.0, &rotated).unwrap();
        assert!((before - after).abs() < 1e-13 * before);

        assert!(potential_rotation(&u, &v, 0.3).is_err()); // complex v rejected
    }

    #[test]
    fn debye_step_closed_forms() {
        let g = grid();
        let p = params(Sign::Plus);
        let dt = 0.3;
        let decay = (-dt / p.relaxation).exp();

        let v = Field::constant(g, Complex64::new(1.5, 0.0));
        let zero_src = vec![0.0; g.point_count()];
        let out = debye_step(&v, DebyeSource::Frozen(&zero_src), dt, &p).unwrap();
        assert!((out.values()[0].re - 1.5 * decay).abs() < 1e-15);

        let v0 = Field::zeros(g);
        let ones = vec![1.0; g.point_count()];
        let out = debye_step(&v0, DebyeSource::Frozen(&ones), dt, &p).unwrap();
        assert!((out.values()[0].re - (1.0 - decay)).abs() < 1e-15);

        // v = 2, source 1, eps = -1, K = 1, dt = ln 2: hand integral gives 1/2
        let pm = params(Sign::Minus);
        let v = Field::constant(g, Complex64::new(2.0, 0.0));
        let out = debye_step(&v, DebyeSource::Frozen(&ones), 2.0f64.ln(), &pm).unwrap();
        assert!((out.values()[0].re - 0.5).abs() < 1e-14);

        // both orders agree on a constant source
        let o2 = debye_step(
            &v,
            DebyeSource::Endpoints {
                start: &ones,
                end: &ones,
            },
            2.0f64.ln(),
            &pm,
        )
        .unwrap();
        assert!((o2.values()[0].re - 0.5).abs() < 1e-14);

        assert!(debye_step(&v, DebyeSource::Frozen(&ones), 0.0, &pm).is_err());
    }

    #[test]
    fn debye_order2_integrates_linear_source_exactly() {
        // v' = (-v + s(t))/K with s linear: closed form vs integrator step
        let g = TorusGrid::new(1, 4).unwrap();
        let p = params(Sign::Plus);
        let k = p.relaxation;
        let dt = 0.4;
        let (s0, s1) = (0.7, 1.9);
        let slope = (s1 - s0) / dt;
        let v0 = 0.25;
        // exact: v(dt) = e^{-dt/k} v0 + (1/k)\int_0^dt e^{-(dt-tau)/k}(s0 + slope tau) dtau
        let exact = (-dt / k).exp() * v0
            + s0 * (1.0 - (-dt / k).exp())
            + slope * (dt - k * (1.0 - (-dt / k).exp()));
        let v = Field::constant(g, Complex64::new(v0, 0.0));
        let start = vec![s0; 4];
        let end = vec![s1; 4];
        let out = debye_step(&v, DebyeSource::Endpoints { start: &start, end: &end }, dt, &p)
            .unwrap();
        assert!(
            (out.values()[0].re - exact).abs() < 1e-14,
            "got {}, want {exact}",
            out.values()[0].re
        );
    }

    #[test]
    fn strang_decoupled_and_unitary() {
        let g = grid();
        let p = params(Sign::Plus);
        let v0 = gaussian(g, 0.8, 0.15);
        let state = SimState::new(0.0, Field::zeros(g), v0.clone(), p).unwrap();
        let dt = 0.05;
        let next = strang_step(&state, dt).unwrap();
        assert_eq!(next.u.max_abs(), 0.0);
        let factor = (-dt / p.relaxation).exp();
        let max = next
            .v
            .values()
            .iter()
            .zip(v0.values())
            .map(|(a, b)| (a.re - factor * b.re).abs())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-12);

        // single-mode u0, v0 = 0: one step preserves ||u||_2
        let u0 = Spectrum::single_mode(g, &[2], Complex64::new(0.4, 0.1))
            .unwrap()
            .to_field();
        let state = SimState::new(0.0, u0.clone(), Field::zeros(g), p).unwrap();
        let next = strang_step(&state, dt).unwrap();
        let before = lebesgue_norm(2.0, &u0).unwrap();
        let after = lebesgue_norm(2.0, &next.u).unwrap();
        assert!((before - after).abs() <= 1e-12 * before);
    }

    #[test]
    fn strang_self_convergence_order() {
        let g = grid();
        let p = params(Sign::Minus);
        let u0 = gaussian(g, 0.5, 0.12);
        let v0 = gaussian(g, 0.25, 0.12);
        let state = SimState::new(0.0, u0, v0, p).unwrap();
        let horizon = 0.2;

        let solve = |dt: f64| {
            let traj = evolve(&state, horizon, dt, 1 << 30).unwrap();
            traj.states.last().unwrap().u.clone()
        };
        let reference = solve(2.5e-4);
        let err = |dt: f64| {
            let u = solve(dt);
            u.values()
                .iter()
                .zip(reference.values())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let e1 = err(2e-3);
        let e2 = err(1e-3);
        let order = (e1 / e2).log2();
        assert!(order >= 1.8, "observed order {order} (e1 = {e1}, e2 = {e2})");
    }

    #[test]
    fn evolve_snapshot_count_and_decay() {
        let g = grid();
        let p = params(Sign::Plus);
        let v0 = gaussian(g, 1.0, 0.2);
        let state = SimState::new(0.0, Field::zeros(g), v0.clone(), p).unwrap();
        let dt = 0.01;
        let traj = evolve(&state, 10.0 * dt, dt, 1).unwrap();
        assert_eq!(traj.states.len(), 11);
        for snap in &traj.states {
            let factor = (-snap.t / p.relaxation).exp();
            let max = snap
                .v
                .values()
                .iter()
                .zip(v0.values())
                .map(|(a, b)| (a.re - factor * b.re).abs())
                .fold(0.0f64, f64::max);
            assert!(max < 1e-12, "t = {}", snap.t);
            assert!(snap.v.max_imag_abs() <= 1e-12);
        }
    }

    #[test]
    fn evolve_conserves_l2_and_h1_finite() {
        let g = grid();
        let p = params(Sign::Minus);
        let u0 = gaussian(g, 0.5, 0.12);
        let v0 = gaussian(g, 0.25, 0.12);
        let state = SimState::new(0.0, u0.clone(), v0, p).unwrap();
        let traj = evolve(&state, 1.0, 1e-2, 10).unwrap();
        let l2_0 = lebesgue_norm(2.0, &u0).unwrap();
        for snap in &traj.states {
            let l2 = lebesgue_norm(2.0, &snap.u).unwrap();
            assert!((l2 - l2_0).abs() <= 1e-10 * l2_0);
            let h1 = sobolev_norm(1.0, &snap.u.to_spectrum()).unwrap();
            assert!(h1.is_finite());
        }
    }

    #[test]
    fn evolve_detects_blow_up_scale() {
        let g = grid();
        let p = params(Sign::Minus);
        let u0 = gaussian(g, 2e8, 0.2);
        let state = SimState {
            t: 0.0,
            u: u0,
            v: Field::zeros(g),
            params: p,
        };
        match evolve(&state, 0.1, 0.01, 1) {
            Err(SdError::BlowUp { t, .. }) => assert_eq!(t, 0.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn maxwell_rescale_amplitudes_and_round_trip() {
        let g = grid();
        let a = random_field(g, 21);
        let nu = Field::from_real(g, &random_field(g, 22).real_values()).unwrap();

        let unit = MaxwellParams {
            light_speed: 1.0,
            wave_vector: 1.0,
            eta0: 1.0,
            eta2: 1.0,
            omega0: 1.0,
        };
        let (u, v, meta) = maxwell_rescale(&a, &nu, &unit).unwrap();
        assert_eq!(u.values(), a.values());
        assert_eq!(v.values(), nu.values());
        assert_eq!(meta.dilation, 1.0);

        let p = MaxwellParams {
            omega0: 4.0,
            ..unit
        };
        let (u, v, _) = maxwell_rescale(&a, &nu, &p).unwrap();
        assert!((u.values()[3] - 2.0 * a.values()[3]).norm() < 1e-14);
        assert!((v.values()[3] - 4.0 * nu.values()[3]).norm() < 1e-14);

        let p = MaxwellParams {
            light_speed: 2.5,
            wave_vector: 0.7,
            eta0: 1.3,
            eta2: -0.4,
            omega0: 3.0,
        };
        let (u, v, _) = maxwell_rescale(&a, &nu, &p).unwrap();
        let (a2, nu2, _) = maxwell_unscale(&u, &v, &p).unwrap();
        let max = a
            .values()
            .iter()
            .zip(a2.values())
            .chain(nu.values().iter().zip(nu2.values()))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-14);

        let bad = MaxwellParams {
            eta2: 0.0,
            ..unit
        };
        assert!(maxwell_rescale(&a, &nu, &bad).is_err());
    }
}
