//! Run orchestration: configuration parsing and validation, named initial
//! profiles, mode execution, and report emission. Every run writes a
//! manifest (config hash, version, grid, budgets) next to its results, and
//! identical config + seed reproduces all numeric reports byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::diagnostics;
use crate::error::{Result, SdError};
use crate::picard::{self, SpaceTimeSpectrum, TimeWindow};
use crate::propagators::{self, ModelParams, Sign, SimState};
use crate::strichartz;
use crate::torus::{self, Field, Spectrum, TorusGrid};
use crate::xsb;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Picard,
    Strichartz,
    Xsb,
    Classify,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Picard => "picard",
            Mode::Strichartz => "strichartz",
            Mode::Xsb => "xsb",
            Mode::Classify => "classify",
        }
    }

    fn parse(s: &str) -> Option<Mode> {
        match s {
            "simulate" => Some(Mode::Simulate),
            "picard" => Some(Mode::Picard),
            "strichartz" => Some(Mode::Strichartz),
            "xsb" => Some(Mode::Xsb),
            "classify" => Some(Mode::Classify),
            _ => None,
        }
    }
}

// ---- raw configuration (TOML) -------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    out_dir: Option<String>,
    seed: Option<u64>,
    grid: Option<GridSection>,
    model: Option<ModelSection>,
    initial: Option<InitialSection>,
    simulate: Option<SimulateSection>,
    picard: Option<PicardSection>,
    strichartz: Option<StrichartzSection>,
    xsb: Option<XsbSection>,
    classify: Option<ClassifySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    dim: Option<u32>,
    modes_per_axis: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    relaxation_k: Option<f64>,
    coupling_sign: Option<i64>,
    alpha: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    /// Joint profile mapping one name to the (u0, v0) pair.
    profile: Option<String>,
    /// Per-field profiles; exclusive with `profile`.
    u: Option<String>,
    v: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateSection {
    dt: Option<f64>,
    horizon: Option<f64>,
    save_every: Option<usize>,
    dump_fields: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PicardSection {
    delta: Option<f64>,
    tol: Option<f64>,
    kmax: Option<usize>,
    time_samples: Option<usize>,
    sobolev_s: Option<f64>,
    compare_split_step: Option<bool>,
    probe_doublings: Option<usize>,
    decompose: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrichartzSection {
    sweep: Option<Vec<u32>>,
    table_csv_max_n: Option<u32>,
    kp_trials: Option<u32>,
    kp_max_n: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct XsbSection {
    time_samples: Option<usize>,
    delta: Option<f64>,
    band: Option<i64>,
    samples: Option<usize>,
    sobolev_s: Option<f64>,
    b: Option<f64>,
    b_prime: Option<f64>,
    scales: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifySection {
    dims: Option<Vec<u32>>,
    alphas: Option<Vec<f64>>,
    sobolev_values: Option<Vec<f64>>,
}

// ---- validated configuration ---------------------------------------------

/// Fully validated run configuration.
#[derive(Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub grid: Option<TorusGrid>,
    pub model: Option<ModelParams>,
    pub initial: Option<InitialSpec>,
    pub simulate: Option<SimulateConfig>,
    pub picard: Option<PicardConfig>,
    pub strichartz: Option<StrichartzConfig>,
    pub xsb: Option<XsbConfig>,
    pub classify: Option<ClassifyConfig>,
    pub config_sha256: String,
}

#[derive(Debug, Clone)]
pub enum InitialSpec {
    Joint(ProfileSpec),
    PerField { u: ProfileSpec, v: ProfileSpec },
}

#[derive(Debug, Clone, Copy)]
pub struct SimulateConfig {
    pub dt: f64,
    pub horizon: f64,
    pub save_every: usize,
    pub dump_fields: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct PicardConfig {
    pub delta: f64,
    pub tol: f64,
    pub kmax: usize,
    pub time_samples: usize,
    pub sobolev_s: f64,
    pub compare_split_step: bool,
    pub probe_doublings: usize,
    pub decompose: bool,
}

#[derive(Debug, Clone)]
pub struct StrichartzConfig {
    pub sweep: Vec<u32>,
    pub table_csv_max_n: u32,
    pub kp_trials: u32,
    pub kp_max_n: u32,
}

#[derive(Debug, Clone)]
pub struct XsbConfig {
    pub time_samples: usize,
    pub delta: f64,
    pub band: i64,
    pub samples: usize,
    pub sobolev_s: f64,
    pub b: f64,
    pub b_prime: f64,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    pub dims: Vec<u32>,
    pub alphas: Vec<f64>,
    pub sobolev_values: Vec<f64>,
}

// ---- initial profiles -----------------------------------------------------

/// Named deterministic initial-data profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Zero,
    SingleMode { mode: Vec<i64>, amplitude: f64 },
    GaussianBump { width: f64, amplitude: f64 },
    RandomBandlimited { seed: u64, band: i64, s_decay: f64 },
}

impl ProfileSpec {
    /// Parse `name` or `name(key=value, ...)`; mode components are
    /// slash-separated (`xi=1/0/-2`).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, args) = match text.find('(') {
            None => (text, Vec::new()),
            Some(open) => {
                if !text.ends_with(')') {
                    return Err(SdError::Parse(format!(
                        "profile '{text}' is missing its closing parenthesis"
                    )));
                }
                let inner = &text[open + 1..text.len() - 1];
                let args: Vec<(String, String)> = inner
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|pair| {
                        let (k, v) = pair.split_once('=').ok_or_else(|| {
                            SdError::Parse(format!("profile argument '{pair}' needs key=value"))
                        })?;
                        Ok((k.trim().to_string(), v.trim().to_string()))
                    })
                    .collect::<Result<_>>()?;
                (&text[..open], args)
            }
        };
        let lookup = |key: &str| -> Option<&str> {
            args.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
        };
        let parse_f64 = |key: &str| -> Result<f64> {
            lookup(key)
                .ok_or_else(|| SdError::Parse(format!("profile '{name}' needs '{key}='")))?
                .parse()
                .map_err(|e| SdError::Parse(format!("profile '{name}': bad {key}: {e}")))
        };
        match name.trim() {
            "zero" => Ok(ProfileSpec::Zero),
            "single_mode" => {
                let mode = lookup("xi")
                    .ok_or_else(|| SdError::Parse("single_mode needs 'xi='".into()))?
                    .split('/')
                    .map(|c| {
                        c.trim()
                            .parse::<i64>()
                            .map_err(|e| SdError::Parse(format!("bad mode component '{c}': {e}")))
                    })
                    .collect::<Result<Vec<i64>>>()?;
                Ok(ProfileSpec::SingleMode {
                    mode,
                    amplitude: parse_f64("amplitude")?,
                })
            }
            "gaussian_bump" => Ok(ProfileSpec::GaussianBump {
                width: parse_f64("width")?,
                amplitude: parse_f64("amplitude")?,
            }),
            "random_bandlimited" => {
                let seed: u64 = lookup("seed")
                    .ok_or_else(|| SdError::Parse("random_bandlimited needs 'seed='".into()))?
                    .parse()
                    .map_err(|e| SdError::Parse(format!("bad seed: {e}")))?;
                let band: i64 = lookup("band")
                    .ok_or_else(|| SdError::Parse("random_bandlimited needs 'band='".into()))?
                    .parse()
                    .map_err(|e| SdError::Parse(format!("bad band: {e}")))?;
                Ok(ProfileSpec::RandomBandlimited {
                    seed,
                    band,
                    s_decay: parse_f64("s_decay")?,
                })
            }
            other => Err(SdError::Parse(format!("unknown profile '{other}'"))),
        }
    }
}

/// Centered periodized gaussian bump, real-valued.
fn gaussian_field(grid: TorusGrid, amplitude: f64, width: f64) -> Field {
    let values = (0..grid.point_count())
        .map(|i| {
            let point = grid.point_at(i);
            let mut value = 0.0;
            // three periodic images per axis cover widths up to ~0.2
            match grid.dim() {
                1 => {
                    for shift in [-1.0, 0.0, 1.0] {
                        let dx = point[0] - 0.5 + shift;
                        value += (-dx * dx / (2.0 * width * width)).exp();
                    }
                }
                _ => {
                    let mut radial = 0.0;
                    for axis in 0..grid.dim() {
                        let mut best: f64 = f64::MAX;
                        for shift in [-1.0, 0.0, 1.0] {
                            let dx = (point[axis] - 0.5 + shift).abs();
                            best = best.min(dx);
                        }
                        radial += best * best;
                    }
                    value = (-radial / (2.0 * width * width)).exp();
                }
            }
            Complex64::new(amplitude * value, 0.0)
        })
        .collect();
    Field::new(grid, values).expect("length matches grid")
}

fn random_bandlimited_spectrum(
    grid: TorusGrid,
    seed: u64,
    band: i64,
    s_decay: f64,
    hermitian: bool,
) -> Spectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum = Spectrum::zeros(grid);
    for index in 0..grid.point_count() {
        let mode = grid.mode_at(index);
        if mode.iter().any(|&c| c.abs() > band) {
            continue;
        }
        let radius = (grid.norm_sq_at(index) as f64).sqrt();
        let decay = torus::bracket(radius).powf(-s_decay);
        let re = rng.random::<f64>() - 0.5;
        let im = rng.random::<f64>() - 0.5;
        spectrum.coeffs_mut()[index] = Complex64::new(re, im) * decay;
    }
    if hermitian {
        // symmetrize so the field is real: c(-xi) = conj(c(xi))
        let original = spectrum.clone();
        for index in 0..grid.point_count() {
            let mode = grid.mode_at(index);
            let negated: Vec<i64> = (0..grid.dim()).map(|a| -mode[a]).collect();
            if let Some(other) = grid.index_of(&negated) {
                let c = original.coeffs()[index];
                let d = original.coeffs()[other];
                spectrum.coeffs_mut()[index] = 0.5 * (c + d.conj());
            } else {
                spectrum.coeffs_mut()[index] = Complex64::ZERO;
            }
        }
    }
    spectrum
}

/// Map a joint profile to the (u0, v0) pair.
pub fn initial_profile(spec: &ProfileSpec, grid: TorusGrid) -> Result<(Field, Field)> {
    match spec {
        ProfileSpec::Zero => Ok((Field::zeros(grid), Field::zeros(grid))),
        ProfileSpec::SingleMode { mode, amplitude } => {
            let u = Spectrum::single_mode(grid, mode, Complex64::new(*amplitude, 0.0))?.to_field();
            Ok((u, Field::zeros(grid)))
        }
        ProfileSpec::GaussianBump { width, amplitude } => Ok((
            gaussian_field(grid, *amplitude, *width),
            gaussian_field(grid, 0.5 * amplitude, *width),
        )),
        ProfileSpec::RandomBandlimited {
            seed,
            band,
            s_decay,
        } => {
            let u = random_bandlimited_spectrum(grid, *seed, *band, *s_decay, false).to_field();
            let v = random_bandlimited_spectrum(grid, seed.wrapping_add(1), *band, *s_decay, true)
                .to_field();
            Ok((u, v))
        }
    }
}

/// Map a per-field profile to one field; `real` symmetrizes so the result
/// is real-valued (required for v).
pub fn field_profile(spec: &ProfileSpec, grid: TorusGrid, real: bool) -> Result<Field> {
    match spec {
        ProfileSpec::Zero => Ok(Field::zeros(grid)),
        ProfileSpec::SingleMode { mode, amplitude } => {
            if real {
                // hermitian pair so the sample values are a cosine
                let mut spectrum = Spectrum::zeros(grid);
                let index = grid.index_of(mode).ok_or_else(|| {
                    SdError::InvalidParameter(format!("mode {mode:?} outside the lattice"))
                })?;
                spectrum.coeffs_mut()[index] = Complex64::new(0.5 * amplitude, 0.0);
                let negated: Vec<i64> = mode.iter().map(|&c| -c).collect();
                let other = grid.index_of(&negated).ok_or_else(|| {
                    SdError::InvalidParameter(format!("mode {negated:?} outside the lattice"))
                })?;
                spectrum.coeffs_mut()[other] += Complex64::new(0.5 * amplitude, 0.0);
                Ok(spectrum.to_field())
            } else {
                Ok(
                    Spectrum::single_mode(grid, mode, Complex64::new(*amplitude, 0.0))?
                        .to_field(),
                )
            }
        }
        ProfileSpec::GaussianBump { width, amplitude } => {
            Ok(gaussian_field(grid, *amplitude, *width))
        }
        ProfileSpec::RandomBandlimited {
            seed,
            band,
            s_decay,
        } => Ok(random_bandlimited_spectrum(grid, *seed, *band, *s_decay, real).to_field()),
    }
}

// ---- validation -----------------------------------------------------------

struct Check {
    problems: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            problems: Vec::new(),
        }
    }

    fn require<T: Copy>(&mut self, value: Option<T>, field: &str) -> Option<T> {
        if value.is_none() {
            self.problems.push(format!("{field}: required but unset"));
        }
        value
    }

    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.problems.push(format!("{field}: {}", message.into()));
    }

    fn finish(self) -> Result<()> {
        if self.problems.is_empty() {
            Ok(())
        } else {
            Err(SdError::Config(self.problems))
        }
    }
}

/// Parse and validate a config file; CLI overrides take precedence. Every
/// violated field is reported, not just the first.
pub fn load_config(
    path: &Path,
    mode: Mode,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunConfig> {
    let bytes = fs::read(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| SdError::Config(vec![format!("config is not UTF-8: {e}")]))?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| SdError::Config(vec![format!("parse error: {e}")]))?;
    let config_sha256 = {
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>()
    };

    let mut check = Check::new();

    if let Some(declared) = raw.mode.as_deref() {
        match Mode::parse(declared) {
            Some(m) if m == mode => {}
            Some(m) => check.fail(
                "mode",
                format!("config declares '{}', subcommand is '{}'", m.name(), mode.name()),
            ),
            None => check.fail("mode", format!("unknown mode '{declared}'")),
        }
    }

    let out_dir = match (out_override, raw.out_dir.as_deref()) {
        (Some(path), _) => Some(path.to_path_buf()),
        (None, Some(dir)) => Some(PathBuf::from(dir)),
        (None, None) => {
            check.fail("out_dir", "required but unset (config key or --out)");
            None
        }
    };

    let seed = match (seed_override, raw.seed) {
        (Some(s), _) => Some(s),
        (None, Some(s)) => Some(s),
        (None, None) => {
            check.fail("seed", "required but unset (config key or --seed)");
            None
        }
    };

    let needs_grid = matches!(mode, Mode::Simulate | Mode::Picard | Mode::Xsb);
    let needs_model = matches!(mode, Mode::Simulate | Mode::Picard);

    let grid = if needs_grid {
        let section = raw.grid.as_ref();
        let dim = check.require(section.and_then(|g| g.dim), "grid.dim");
        let m = check.require(section.and_then(|g| g.modes_per_axis), "grid.modes_per_axis");
        match (dim, m) {
            (Some(dim), Some(m)) => match TorusGrid::new(dim, m) {
                Ok(grid) => Some(grid),
                Err(e) => {
                    check.fail("grid", e.to_string());
                    None
                }
            },
            _ => None,
        }
    } else {
        None
    };

    let model = if needs_model {
        let section = raw.model.as_ref();
        let k = check.require(section.and_then(|m| m.relaxation_k), "model.relaxation_k");
        let sign = check.require(section.and_then(|m| m.coupling_sign), "model.coupling_sign");
        let alpha = check.require(section.and_then(|m| m.alpha), "model.alpha");
        match (k, sign, alpha, grid) {
            (Some(k), Some(sign), Some(alpha), grid) => {
                let sign = match Sign::from_i64(sign) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        check.fail("model.coupling_sign", e.to_string());
                        None
                    }
                };
                match sign {
                    Some(sign) => {
                        match ModelParams::new(k, sign, alpha, grid.map(|g| g.dim() as u32).unwrap_or(1)) {
                            Ok(p) => Some(p),
                            Err(e) => {
                                check.fail("model", e.to_string());
                                None
                            }
                        }
                    }
                    None => None,
                }
            }
            _ => None,
        }
    } else {
        None
    };

    let initial = if needs_model {
        match raw.initial.as_ref() {
            None => {
                check.fail("initial", "required but unset");
                None
            }
            Some(section) => match (&section.profile, &section.u, &section.v) {
                (Some(joint), None, None) => match ProfileSpec::parse(joint) {
                    Ok(spec) => Some(InitialSpec::Joint(spec)),
                    Err(e) => {
                        check.fail("initial.profile", e.to_string());
                        None
                    }
                },
                (None, Some(u), Some(v)) => {
                    let u = ProfileSpec::parse(u).map_err(|e| {
                        check.fail("initial.u", e.to_string());
                    });
                    let v = ProfileSpec::parse(v).map_err(|e| {
                        check.fail("initial.v", e.to_string());
                    });
                    match (u, v) {
                        (Ok(u), Ok(v)) => Some(InitialSpec::PerField { u, v }),
                        _ => None,
                    }
                }
                _ => {
                    check.fail(
                        "initial",
                        "set either 'profile' or both 'u' and 'v', not a mixture",
                    );
                    None
                }
            },
        }
    } else {
        None
    };

    let simulate = if mode == Mode::Simulate {
        let section = raw.simulate.as_ref();
        let dt = check.require(section.and_then(|s| s.dt), "simulate.dt");
        let horizon = check.require(section.and_then(|s| s.horizon), "simulate.horizon");
        let save_every = section.and_then(|s| s.save_every).unwrap_or(1);
        let dump_fields = section.and_then(|s| s.dump_fields).unwrap_or(false);
        if save_every == 0 {
            check.fail("simulate.save_every", "must be at least 1");
        }
        match (dt, horizon) {
            (Some(dt), Some(horizon)) => {
                if !(dt > 0.0 && horizon > 0.0 && dt <= horizon) {
                    check.fail("simulate", format!("need 0 < dt <= horizon (dt = {dt}, horizon = {horizon})"));
                    None
                } else {
                    Some(SimulateConfig {
                        dt,
                        horizon,
                        save_every,
                        dump_fields,
                    })
                }
            }
            _ => None,
        }
    } else {
        None
    };

    let picard_cfg = if mode == Mode::Picard {
        let section = raw.picard.as_ref();
        let delta = check.require(section.and_then(|p| p.delta), "picard.delta");
        let tol = check.require(section.and_then(|p| p.tol), "picard.tol");
        let kmax = check.require(section.and_then(|p| p.kmax), "picard.kmax");
        let time_samples =
            check.require(section.and_then(|p| p.time_samples), "picard.time_samples");
        let sobolev_s = section.and_then(|p| p.sobolev_s).unwrap_or(1.0);
        let compare = section.and_then(|p| p.compare_split_step).unwrap_or(true);
        let probe = section.and_then(|p| p.probe_doublings).unwrap_or(0);
        let decompose = section.and_then(|p| p.decompose).unwrap_or(false);
        match (delta, tol, kmax, time_samples) {
            (Some(delta), Some(tol), Some(kmax), Some(time_samples)) => Some(PicardConfig {
                delta,
                tol,
                kmax,
                time_samples,
                sobolev_s,
                compare_split_step: compare,
                probe_doublings: probe,
                decompose,
            }),
            _ => None,
        }
    } else {
        None
    };

    let strichartz_cfg = if mode == Mode::Strichartz {
        let section = raw.strichartz.as_ref();
        let sweep = match section.and_then(|s| s.sweep.clone()) {
            Some(sweep) if !sweep.is_empty() => Some(sweep),
            _ => {
                check.fail("strichartz.sweep", "required nonempty list");
                None
            }
        };
        sweep.map(|sweep| StrichartzConfig {
            sweep,
            table_csv_max_n: section.and_then(|s| s.table_csv_max_n).unwrap_or(32),
            kp_trials: section.and_then(|s| s.kp_trials).unwrap_or(50),
            kp_max_n: section.and_then(|s| s.kp_max_n).unwrap_or(8),
        })
    } else {
        None
    };

    let xsb_cfg = if mode == Mode::Xsb {
        let section = raw.xsb.as_ref();
        let time_samples = check.require(section.and_then(|x| x.time_samples), "xsb.time_samples");
        let band = check.require(section.and_then(|x| x.band), "xsb.band");
        let samples = check.require(section.and_then(|x| x.samples), "xsb.samples");
        if let Some(grid) = grid {
            if grid.dim() != 1 {
                check.fail("grid.dim", "xsb mode is one-dimensional");
            }
        }
        match (time_samples, band, samples) {
            (Some(time_samples), Some(band), Some(samples)) => Some(XsbConfig {
                time_samples,
                delta: section.and_then(|x| x.delta).unwrap_or(0.25),
                band,
                samples,
                sobolev_s: section.and_then(|x| x.sobolev_s).unwrap_or(0.0),
                b: section.and_then(|x| x.b).unwrap_or(0.375),
                b_prime: section.and_then(|x| x.b_prime).unwrap_or(0.125),
                scales: section.and_then(|x| x.scales.clone()).unwrap_or_else(|| {
                    (1..=6).map(|k| 0.5f64.powi(k)).collect()
                }),
            }),
            _ => None,
        }
    } else {
        None
    };

    let classify_cfg = if mode == Mode::Classify {
        let section = raw.classify.as_ref();
        let dims = section.and_then(|c| c.dims.clone());
        let alphas = section.and_then(|c| c.alphas.clone());
        let ss = section.and_then(|c| c.sobolev_values.clone());
        if dims.is_none() {
            check.fail("classify.dims", "required but unset");
        }
        if alphas.is_none() {
            check.fail("classify.alphas", "required but unset");
        }
        if ss.is_none() {
            check.fail("classify.sobolev_values", "required but unset");
        }
        match (dims, alphas, ss) {
            (Some(dims), Some(alphas), Some(sobolev_values)) => Some(ClassifyConfig {
                dims,
                alphas,
                sobolev_values,
            }),
            _ => None,
        }
    } else {
        None
    };

    check.finish()?;

    Ok(RunConfig {
        mode,
        out_dir: out_dir.expect("validated"),
        seed: seed.expect("validated"),
        grid,
        model,
        initial,
        simulate,
        picard: picard_cfg,
        strichartz: strichartz_cfg,
        xsb: xsb_cfg,
        classify: classify_cfg,
        config_sha256,
    })
}

// ---- execution ------------------------------------------------------------

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn manifest(config: &RunConfig) -> String {
    let mut budgets = BTreeMap::new();
    budgets.insert("convolution_points", 1e8);
    budgets.insert("representation_cutoff", 256.0);
    budgets.insert("eisenstein_brute_force", 1e8);
    budgets.insert("eisenstein_factorization", 1e12);
    budgets.insert("blow_up_linf", 1e8);
    let grid = config
        .grid
        .map(|g| format!("T^{} with {} modes per axis", g.dim(), g.modes_per_axis()))
        .unwrap_or_else(|| "-".to_string());
    serde_json::to_string_pretty(&serde_json::json!({
        "tool": "sdlab",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": config.mode.name(),
        "config_sha256": config.config_sha256,
        "seed": config.seed,
        "grid": grid,
        "budgets": budgets,
    }))
    .expect("manifest serializes")
    + "\n"
}

fn initial_fields(config: &RunConfig) -> Result<(Field, Field)> {
    let grid = config.grid.expect("validated for this mode");
    match config.initial.as_ref().expect("validated for this mode") {
        InitialSpec::Joint(spec) => initial_profile(spec, grid),
        InitialSpec::PerField { u, v } => Ok((
            field_profile(u, grid, false)?,
            field_profile(v, grid, true)?,
        )),
    }
}

fn run_simulate(config: &RunConfig) -> Result<()> {
    let params = config.model.expect("validated");
    let (u0, v0) = initial_fields(config)?;
    let sim = config.simulate.as_ref().expect("validated");
    let state = SimState::new(0.0, u0, v0, params)?;
    let trajectory = propagators::evolve(&state, sim.horizon, sim.dt, sim.save_every)?;
    let records = diagnostics::balance_records(&trajectory)?;

    let mut trajectory_csv = String::from("t,l2_u,h1_u,l2_v,grad_energy,coupling,potential_p\n");
    for (snap, record) in trajectory.states.iter().zip(&records) {
        let l2_v = torus::lebesgue_norm(2.0, &snap.v)?;
        writeln!(
            trajectory_csv,
            "{},{},{},{},{},{},{}",
            record.t,
            record.l2_squared.sqrt(),
            record.h1,
            l2_v,
            record.grad_energy,
            record.coupling,
            record.potential_p
        )
        .expect("writing to string");
    }
    write_text(&config.out_dir.join("trajectory.csv"), &trajectory_csv)?;

    let residuals = diagnostics::h1_balance_residual(&trajectory)?;
    let mut balance_csv = String::from("t,grad_energy,coupling,potential_p,residual\n");
    for (index, record) in records.iter().enumerate() {
        let residual = if index == 0 || index + 1 == records.len() {
            String::new()
        } else {
            residuals.values[index - 1].1.to_string()
        };
        writeln!(
            balance_csv,
            "{},{},{},{},{residual}",
            record.t, record.grad_energy, record.coupling, record.potential_p
        )
        .expect("writing to string");
    }
    write_text(&config.out_dir.join("balance.csv"), &balance_csv)?;

    let integrated = diagnostics::integrated_balance_residual(&trajectory)?;
    write_text(
        &config.out_dir.join("integrated_balance.json"),
        &(serde_json::to_string_pretty(&serde_json::json!({
            "residual": integrated.residual,
            "telescoped_form_gap": integrated.telescoped_form_gap,
            "max_h1_residual": residuals.max_abs,
        }))
        .expect("serializes")
            + "\n"),
    )?;

    if sim.dump_fields {
        for (index, snap) in trajectory.states.iter().enumerate() {
            let mut buf = Vec::new();
            torus::write_field_csv(&mut buf, &snap.u)?;
            write_text(
                &config.out_dir.join(format!("u_{index:05}.csv")),
                &String::from_utf8(buf).expect("csv is utf-8"),
            )?;
            let mut buf = Vec::new();
            torus::write_field_csv(&mut buf, &snap.v)?;
            write_text(
                &config.out_dir.join(format!("v_{index:05}.csv")),
                &String::from_utf8(buf).expect("csv is utf-8"),
            )?;
        }
    }
    Ok(())
}

fn run_picard(config: &RunConfig) -> Result<()> {
    let params = config.model.expect("validated");
    let (u0_field, v0) = initial_fields(config)?;
    let u0 = u0_field.to_spectrum();
    let pc = config.picard.as_ref().expect("validated");
    let window = TimeWindow::standard(pc.time_samples, pc.delta)?;

    let solution = picard::picard_solve(
        &u0,
        &v0,
        &params,
        &window,
        pc.sobolev_s,
        pc.tol,
        pc.kmax,
    )?;

    let mut history_csv = String::from("k,diff_norm,ratio\n");
    for h in &solution.history {
        writeln!(
            history_csv,
            "{},{},{}",
            h.k,
            h.diff_norm,
            h.ratio.map(|r| r.to_string()).unwrap_or_default()
        )
        .expect("writing to string");
    }
    write_text(&config.out_dir.join("history.csv"), &history_csv)?;

    // fixed point serialization: header (grid, window), coefficient block
    let spectrum = solution.fixed_point.to_spectrum();
    let mut fixed_csv = Vec::new();
    picard::write_spacetime_spectrum_csv(&mut fixed_csv, &spectrum)?;
    write_text(
        &config.out_dir.join("fixed_point.csv"),
        &String::from_utf8(fixed_csv).expect("csv is utf-8"),
    )?;

    if pc.decompose {
        let w = picard::nonlinear_w(&solution.fixed_point, &v0, &params)?;
        let terms = picard::duhamel_decompose(&w.to_spectrum(), pc.sobolev_s, 0.5, 0.625)?;
        write_text(
            &config.out_dir.join("decompose.json"),
            &(serde_json::to_string_pretty(&serde_json::json!({
                "s": terms.report.s,
                "b": terms.report.b,
                "b_prime": terms.report.b_prime,
                "term_norms": terms.report.term_norms,
                "sum_norm": terms.report.sum_norm,
                "source_norm_b_prime_minus_one": terms.report.source_norm,
                "rel_mismatch": terms.report.rel_mismatch,
                "quadrature_gap": terms.report.quadrature_gap,
                "quadrature_flagged": terms.report.quadrature_flagged,
            }))
            .expect("serializes")
                + "\n"),
        )?;
    }

    if pc.compare_split_step {
        let dt = window.dt();
        let steps = (window.delta() / dt).round().max(1.0) as usize;
        let state = SimState::new(0.0, u0_field.clone(), v0.clone(), params)?;
        let trajectory = propagators::evolve(&state, steps as f64 * dt, dt, 1)?;
        let j0 = window.zero_index();
        let mut comparison_csv = String::from("t,l2_difference\n");
        let mut worst = 0.0f64;
        for (m, snap) in trajectory.states.iter().enumerate() {
            let mut diff = solution.fixed_point.field_at(j0 + m);
            for (d, s) in diff.values_mut().iter_mut().zip(snap.u.values()) {
                *d -= s;
            }
            let gap = torus::lebesgue_norm(2.0, &diff)?;
            worst = worst.max(gap);
            writeln!(comparison_csv, "{},{gap}", snap.t).expect("writing to string");
        }
        write_text(&config.out_dir.join("comparison.csv"), &comparison_csv)?;
        write_text(
            &config.out_dir.join("comparison.json"),
            &(serde_json::to_string_pretty(&serde_json::json!({
                "max_l2_difference": worst,
                "dt": dt,
                "steps": steps,
            }))
            .expect("serializes")
                + "\n"),
        )?;
    }

    if pc.probe_doublings > 0 {
        let records = picard::existence_probe(
            &u0,
            &v0,
            &params,
            &window,
            pc.sobolev_s,
            pc.tol,
            pc.kmax,
            pc.probe_doublings,
        )?;
        let mut probe_csv = String::from("delta,converged,iterations,last_ratio\n");
        for r in &records {
            writeln!(
                probe_csv,
                "{},{},{},{}",
                r.delta,
                r.converged,
                r.iterations,
                r.last_ratio.map(|x| x.to_string()).unwrap_or_default()
            )
            .expect("writing to string");
        }
        write_text(&config.out_dir.join("probe.csv"), &probe_csv)?;
    }
    Ok(())
}

fn run_strichartz(config: &RunConfig) -> Result<()> {
    let sc = config.strichartz.as_ref().expect("validated");
    let mut sweep_points = Vec::new();
    for &n in &sc.sweep {
        let table = strichartz::representation_counts(n)?;
        sweep_points.push((n, table.max_count()));
        if n <= sc.table_csv_max_n {
            let mut csv = String::from("n,j,count\n");
            for (key_n, j, count) in table.sorted_entries() {
                writeln!(csv, "{key_n},{j},{count}").expect("writing to string");
            }
            write_text(&config.out_dir.join(format!("counts_{n:04}.csv")), &csv)?;
        }
    }
    let fit = strichartz::growth_fit(&sweep_points);
    let fit_json = match &fit {
        Ok(fit) => serde_json::json!({
            "sweep": sweep_points.iter().map(|&(n, c)| serde_json::json!({"n": n, "max_count": c})).collect::<Vec<_>>(),
            "constant": fit.constant,
            "residuals": fit.residuals,
            "monotone_increasing": fit.monotone_increasing,
        }),
        Err(e) => serde_json::json!({
            "sweep": sweep_points.iter().map(|&(n, c)| serde_json::json!({"n": n, "max_count": c})).collect::<Vec<_>>(),
            "error": e.to_string(),
        }),
    };
    write_text(
        &config.out_dir.join("growth_fit.json"),
        &(serde_json::to_string_pretty(&fit_json).expect("serializes") + "\n"),
    )?;

    let mut kp_csv = String::from("n,p,lower_bound,candidate\n");
    for &n in sc.sweep.iter().filter(|&&n| n <= sc.kp_max_n) {
        let section = strichartz::ParaboloidSection::one_dim(n)?;
        for p in [4u32, 6] {
            let bound = strichartz::kp_lower_bound(&section, p, sc.kp_trials, config.seed)?;
            writeln!(kp_csv, "{n},{p},{},{:?}", bound.value, bound.candidate)
                .expect("writing to string");
        }
    }
    write_text(&config.out_dir.join("kp_bounds.csv"), &kp_csv)?;

    let evidence = strichartz::KpEvidence::builtin();
    let mut adm_csv = String::from("d,p,verdict\n");
    for d in 2..=5u32 {
        for p in [3.0, 4.0, 5.0, 6.0, 8.0] {
            let report = strichartz::admissible_check(d, p, &evidence)?;
            writeln!(adm_csv, "{d},{p},{:?}", report.verdict).expect("writing to string");
        }
    }
    write_text(&config.out_dir.join("admissible.csv"), &adm_csv)?;
    Ok(())
}

fn random_sparse_spectrum(
    grid: TorusGrid,
    window: TimeWindow,
    band: i64,
    rng: &mut ChaCha8Rng,
) -> SpaceTimeSpectrum {
    let mut h = SpaceTimeSpectrum::zeros(grid, window);
    let p = grid.point_count();
    let atoms = rng.random_range(3..12);
    for _ in 0..atoms {
        let xi = rng.random_range(-band..=band);
        let Some(mode) = grid.index_of(&[xi]) else {
            continue;
        };
        let near = (xi * xi) * window.length() as i64;
        let spread = rng.random_range(-16i64..=16);
        let half = (window.samples() / 2) as i64;
        let k = (near + spread).clamp(-half, half - 1);
        let jk = (k + half) as usize;
        h.coeffs_mut()[jk * p + mode] =
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    h
}

fn run_xsb(config: &RunConfig) -> Result<()> {
    let xc = config.xsb.as_ref().expect("validated");
    let grid = config.grid.expect("validated");
    let window = TimeWindow::standard(xc.time_samples, xc.delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut rows: Vec<xsb::SweepRow> = Vec::new();

    // time-cutoff scaling sweep: atoms on the paraboloid plus random
    // sparse samples; report the max ratio per scale
    for &scale in &xc.scales {
        let mut worst = 0.0f64;
        for xi in 0..=xc.band {
            let k = (xi * xi) * window.length() as i64;
            let half = (window.samples() / 2) as i64;
            if k >= half {
                continue;
            }
            let atom = SpaceTimeSpectrum::atom(grid, window, &[xi], k, Complex64::ONE)?;
            worst = worst.max(xsb::cutoff_scaling_ratio(
                &atom,
                scale,
                xc.sobolev_s,
                xc.b,
                xc.b_prime,
            )?);
        }
        for _ in 0..(xc.samples / 10).max(1) {
            let h = random_sparse_spectrum(grid, window, xc.band, &mut rng);
            if h.l2() == 0.0 {
                continue;
            }
            worst = worst.max(xsb::cutoff_scaling_ratio(
                &h,
                scale,
                xc.sobolev_s,
                xc.b,
                xc.b_prime,
            )?);
        }
        rows.push(xsb::SweepRow {
            s: xc.sobolev_s,
            b: xc.b,
            b_prime: xc.b_prime,
            label: format!("T={scale}"),
            value: worst,
        });
    }

    // shell-supremum versus X-norm domination over random samples
    let mut worst_quotient = 0.0f64;
    for _ in 0..xc.samples {
        let h = random_sparse_spectrum(grid, window, xc.band, &mut rng);
        let x = xsb::xsb_norm(&h, xc.sobolev_s, 0.5);
        if x > 0.0 {
            worst_quotient = worst_quotient.max(xsb::triple_norm(&h, xc.sobolev_s) / x);
        }
    }
    rows.push(xsb::SweepRow {
        s: xc.sobolev_s,
        b: 0.5,
        b_prime: f64::NAN,
        label: "shell_sup_over_xsb_max".to_string(),
        value: worst_quotient,
    });

    // embedding ratio over random samples
    let mut worst_embedding = 0.0f64;
    for _ in 0..xc.samples {
        let h = random_sparse_spectrum(grid, window, xc.band, &mut rng);
        if h.l2() == 0.0 {
            continue;
        }
        worst_embedding = worst_embedding.max(xsb::l4_embedding_ratio(&h)?);
    }
    rows.push(xsb::SweepRow {
        s: 0.0,
        b: 0.375,
        b_prime: f64::NAN,
        label: "l4_embedding_max".to_string(),
        value: worst_embedding,
    });

    let mut csv = String::from(
        "# cutoff-scaling rows cover -1/2 < b' <= b < 1/2 only\ns,b,b_prime,t_or_shell,value\n",
    );
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            row.s, row.b, row.b_prime, row.label, row.value
        )
        .expect("writing to string");
    }
    write_text(&config.out_dir.join("norms.csv"), &csv)?;

    // shell masses of one sample, sorted by label
    let h = random_sparse_spectrum(grid, window, xc.band, &mut rng);
    let masses = xsb::shell_masses(&h);
    let mut shells: Vec<(xsb::ShellIndex, f64)> = masses.into_iter().collect();
    shells.sort_by_key(|(shell, _)| *shell);
    let mut csv = String::from("a,n,mass\n");
    for (shell, mass) in shells {
        writeln!(csv, "{},{},{mass}", shell.a, shell.n).expect("writing to string");
    }
    write_text(&config.out_dir.join("shells.csv"), &csv)?;
    Ok(())
}

fn run_classify(config: &RunConfig) -> Result<()> {
    let cc = config.classify.as_ref().expect("validated");
    let table = diagnostics::verdict_table_csv(&cc.dims, &cc.alphas, &cc.sobolev_values)?;
    write_text(&config.out_dir.join("verdicts.csv"), &table)?;

    let mut csv =
        String::from("n,alpha,theta0,theta1,theta,theta0_lt_1,theta1_lt_1,theta_lt_1\n");
    for &n in &cc.dims {
        for &alpha in &cc.alphas {
            let e = diagnostics::apriori_exponents(n, alpha)?;
            writeln!(
                csv,
                "{n},{alpha},{},{},{},{},{},{}",
                e.theta0, e.theta1, e.theta, e.theta0_lt_1, e.theta1_lt_1, e.theta_lt_1
            )
            .expect("writing to string");
        }
    }
    write_text(&config.out_dir.join("exponents.csv"), &csv)?;
    Ok(())
}

/// Execute a validated configuration: create the output directory, write
/// the manifest, run the mode, and leave the reports on disk.
pub fn execute(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out_dir)?;
    write_text(&config.out_dir.join("manifest.json"), &manifest(config))?;
    match config.mode {
        Mode::Simulate => run_simulate(config),
        Mode::Picard => run_picard(config),
        Mode::Strichartz => run_strichartz(config),
        Mode::Xsb => run_xsb(config),
        Mode::Classify => run_classify(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_parsing() {
        assert_eq!(ProfileSpec::parse("zero").unwrap(), ProfileSpec::Zero);
        assert_eq!(
            ProfileSpec::parse("single_mode(xi=1, amplitude=0.1)").unwrap(),
            ProfileSpec::SingleMode {
                mode: vec![1],
                amplitude: 0.1
            }
        );
        assert_eq!(
            ProfileSpec::parse("single_mode(xi=1/0/-2, amplitude=0.5)").unwrap(),
            ProfileSpec::SingleMode {
                mode: vec![1, 0, -2],
                amplitude: 0.5
            }
        );
        assert_eq!(
            ProfileSpec::parse("gaussian_bump(width=0.1, amplitude=0.5)").unwrap(),
            ProfileSpec::GaussianBump {
                width: 0.1,
                amplitude: 0.5
            }
        );
        assert!(matches!(
            ProfileSpec::parse("random_bandlimited(seed=7, band=4, s_decay=1.5)").unwrap(),
            ProfileSpec::RandomBandlimited {
                seed: 7,
                band: 4,
                ..
            }
        ));
        assert!(ProfileSpec::parse("vortex").is_err());
        assert!(ProfileSpec::parse("gaussian_bump(width=0.1").is_err());
        assert!(ProfileSpec::parse("gaussian_bump(width=0.1)").is_err()); // amplitude missing
    }

    #[test]
    fn profiles_build_deterministic_fields() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let (u, v) = initial_profile(&ProfileSpec::Zero, grid).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        assert_eq!(v.max_abs(), 0.0);

        let (u, v) = initial_profile(
            &ProfileSpec::SingleMode {
                mode: vec![1],
                amplitude: 0.1,
            },
            grid,
        )
        .unwrap();
        let coeffs = u.to_spectrum();
        let idx = grid.index_of(&[1]).unwrap();
        assert!((coeffs.coeffs()[idx] - 0.1).norm() < 1e-14);
        assert_eq!(v.max_abs(), 0.0);

        let spec = ProfileSpec::RandomBandlimited {
            seed: 7,
            band: 4,
            s_decay: 1.5,
        };
        let (u1, v1) = initial_profile(&spec, grid).unwrap();
        let (u2, v2) = initial_profile(&spec, grid).unwrap();
        assert_eq!(u1.values(), u2.values());
        assert_eq!(v1.values(), v2.values());
        v1.require_real().unwrap();

        // band limitation holds
        let coeffs = u1.to_spectrum();
        for (i, c) in coeffs.coeffs().iter().enumerate() {
            if grid.mode_at(i)[0].abs() > 4 {
                assert!(c.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_profile_pair() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let (u, v) = initial_profile(
            &ProfileSpec::GaussianBump {
                width: 0.1,
                amplitude: 0.5,
            },
            grid,
        )
        .unwrap();
        assert!((u.max_abs() - 0.5).abs() < 1e-10);
        assert!((v.max_abs() - 0.25).abs() < 1e-10);
        v.require_real().unwrap();
    }
}
