//! Design and analysis tools for monolithic optical parametric oscillators.
//!
//! The crate covers the full chain from crystal to homodyne trace:
//!
//! - [`dispersion`]: linear thermo-optic index model of the nonlinear crystal.
//! - [`phasematch`]: sinc² conversion efficiency versus temperature.
//! - [`cavity`]: resonance comb, free spectral range, linewidth and escape efficiency.
//! - [`coresonance`]: temperatures that are resonant and phase matched at once.
//! - [`squeezing`]: quadrature variances of a lossy sub-threshold OPO with phase jitter.
//! - [`analysis`]: spectrum-analyzer traces, shot-noise normalization and model fits.
//! - [`locksim`]: discrete-time simulation of the cavity / pump-probe / LO lock cascade.
//! - [`config`]: TOML configuration with unit-suffixed keys.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cavity;
pub mod config;
pub mod coresonance;
pub mod dispersion;
mod error;
pub mod locksim;
pub mod optimize;
pub mod phasematch;
pub mod squeezing;

pub use analysis::{FitResult, NormalizedPoint, Observation, SpectrumTrace};
pub use cavity::{CavitySpec, ResonancePoint};
pub use config::ToolkitConfig;
pub use coresonance::CoResonancePoint;
pub use dispersion::{CrystalSpec, IndexModel, Wave};
pub use error::{Error, Result};
pub use locksim::{LockConfig, LockPlant, LockRun, LockSummary, ModulationConfig, ServoConfig};
pub use squeezing::{Quadrature, SqueezingParams};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
