//! Pseudo-spectral laboratory for the periodic Schrodinger-Debye system
//!
//!   i u_t + "Laplacian" u = u v,      K v_t + v = eps |u|^alpha
//!
//! on the unit torus T^n (n = 1, 2, 3), with the kinetic group realized as the
//! Fourier multiplier `e^{2 pi i t |xi|^2}`. The crate provides the split-step
//! integrator, a Duhamel fixed-point solver on a periodic time window,
//! Bourgain-space (X^{s,b}) norm machinery, exponential-sum restriction
//! constants with the lattice counting behind them, conservation/balance
//! diagnostics, and a well-posedness classifier.

pub mod diagnostics;
pub mod error;
pub mod picard;
pub mod propagators;
pub mod run;
pub mod strichartz;
pub mod torus;
pub mod xsb;

pub use error::{Result, SdError};
