//! Second-harmonic conversion efficiency versus crystal temperature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::{CrystalSpec, Wave};
use crate::{Error, Result};

/// Half-argument at which sinc²(u) = (sin u / u)² falls to 1/2.
pub const SINC2_HALF_MAX_ARG: f64 = 1.391_557_378_251_51;

/// Convention used to turn the sinc² curve into a temperature width.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum WidthCriterion {
    /// Full width at half maximum of sinc².
    #[default]
    HalfMax,
    /// Full width of the region `|Δk l| ≤ π`.
    PiBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchPoint {
    pub temperature_c: f64,
    pub delta_k: f64,
    pub eta: f64,
}

/// `(sin u / u)²`, exact at `u = 0`.
pub fn sinc2(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        // sinc(u) = 1 - u²/6 + u⁴/120
        let s = 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
        s * s
    } else {
        let s = u.sin() / u;
        s * s
    }
}

/// Residual wave-vector mismatch in 1/m.
pub fn delta_k(spec: &CrystalSpec, temperature_c: f64) -> f64 {
    (spec.delta_n(Wave::SecondHarmonic, temperature_c)
        - spec.delta_n(Wave::Fundamental, temperature_c))
        * 4.0
        * PI
        / spec.wavelength_m
}

/// Conversion efficiency normalized to 1 at perfect phase matching.
pub fn conversion_efficiency(spec: &CrystalSpec, temperature_c: f64) -> f64 {
    sinc2(delta_k(spec, temperature_c) * spec.length_m / 2.0)
}

pub fn phase_match_point(spec: &CrystalSpec, temperature_c: f64) -> PhaseMatchPoint {
    let dk = delta_k(spec, temperature_c);
    PhaseMatchPoint {
        temperature_c,
        delta_k: dk,
        eta: sinc2(dk * spec.length_m / 2.0),
    }
}

/// Full temperature width of the phase-matching curve in kelvin.
///
/// A doubly resonant cavity doubles the effective interaction length and so
/// halves the width.
pub fn phase_matching_width(
    spec: &CrystalSpec,
    criterion: WidthCriterion,
    doubly_resonant: bool,
) -> Result<f64> {
    let ddn = (spec.dn_dt_sh - spec.dn_dt_fund).abs();
    if ddn == 0.0 || !ddn.is_finite() {
        return Err(Error::invalid(
            "dn/dT",
            "equal coefficients give an unbounded phase-matching width",
        ));
    }
    let pi_bound = spec.wavelength_m / (2.0 * spec.length_m * ddn);
    let width = match criterion {
        WidthCriterion::PiBound => pi_bound,
        WidthCriterion::HalfMax => pi_bound * 2.0 * SINC2_HALF_MAX_ARG / PI,
    };
    Ok(if doubly_resonant { width / 2.0 } else { width })
}
