//! Simultaneous cavity resonance and phase matching by temperature alone.
//!
//! The resonance comb (spacing `ΔT_FSR`) slides under the sinc² phase-matching
//! envelope. When the envelope is wider than the comb spacing at least one
//! resonance always lands near the top of it; how near is bounded by
//! [`worst_case_best_eta`].

use serde::{Deserialize, Serialize};

use crate::cavity::{self, CavitySpec};
use crate::dispersion::CrystalSpec;
use crate::phasematch;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoResonancePoint {
    pub temperature_c: f64,
    pub mode_index: i64,
    pub eta_at_resonance: f64,
}

/// One row of a temperature scan: cavity transmission and conversion efficiency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub temperature_c: f64,
    pub transmission: f64,
    pub eta: f64,
}

/// Every resonance in `[t_lo, t_hi]` annotated with its conversion efficiency,
/// best first. Equal efficiencies are ordered by temperature, lowest first.
pub fn co_resonant_points(
    crystal: &CrystalSpec,
    t_lo: f64,
    t_hi: f64,
) -> Result<Vec<CoResonancePoint>> {
    let mut points: Vec<CoResonancePoint> = cavity::resonance_temperatures(crystal, t_lo, t_hi)?
        .into_iter()
        .map(|r| CoResonancePoint {
            temperature_c: r.temperature_c,
            mode_index: r.mode_index,
            eta_at_resonance: phasematch::conversion_efficiency(crystal, r.temperature_c),
        })
        .collect();
    points.sort_by(|a, b| {
        b.eta_at_resonance
            .total_cmp(&a.eta_at_resonance)
            .then(a.temperature_c.total_cmp(&b.temperature_c))
    });
    Ok(points)
}

/// Efficiency at a temperature offset from the phase-matching peak.
fn eta_at_offset(crystal: &CrystalSpec, offset_k: f64) -> f64 {
    phasematch::conversion_efficiency(crystal, crystal.t_ref_c + offset_k)
}

/// Best efficiency reachable when a resonance sits at `t_ref + offset` (and
/// hence at every `offset + k·ΔT_FSR`).
pub fn best_eta_for_offset(crystal: &CrystalSpec, offset_k: f64) -> Result<f64> {
    let fsr = cavity::fsr_temperature(crystal)?;
    let nearest = offset_k - (offset_k / fsr).round() * fsr;
    // Side lobes of sinc² only matter for combs sparser than the main lobe, so
    // look a few teeth out on either side.
    let lobe = first_zero_offset(crystal);
    let reach = ((2.0 * lobe) / fsr).ceil().clamp(1.0, 64.0) as i64;
    Ok((-reach..=reach)
        .map(|k| eta_at_offset(crystal, nearest + k as f64 * fsr))
        .fold(0.0, f64::max))
}

/// Temperature offset of the first zero of the sinc² envelope.
fn first_zero_offset(crystal: &CrystalSpec) -> f64 {
    let per_kelvin = (phasematch::delta_k(crystal, crystal.t_ref_c + 1.0)
        - phasematch::delta_k(crystal, crystal.t_ref_c))
    .abs()
        * crystal.length_m
        / 2.0;
    std::f64::consts::PI / per_kelvin
}

/// Lower bound on the best co-resonant efficiency over all comb positions.
///
/// While half a comb spacing stays inside the main lobe, the nearest
/// resonance is at most `ΔT_FSR / 2` from the peak and the bound is
/// `η(ΔT_FSR / 2)`. Sparser combs fall back to a search over offsets.
pub fn worst_case_best_eta(crystal: &CrystalSpec) -> Result<f64> {
    let fsr = cavity::fsr_temperature(crystal)?;
    if !fsr.is_finite() {
        return Err(Error::invalid("ΔT_FSR", "must be finite"));
    }
    let lobe = first_zero_offset(crystal);
    if fsr / 2.0 <= 0.5 * lobe {
        return Ok(eta_at_offset(crystal, fsr / 2.0));
    }
    // Best η is symmetric in the offset and periodic in ΔT_FSR.
    let steps = 4000;
    let mut worst = f64::INFINITY;
    for i in 0..=steps {
        let offset = fsr / 2.0 * i as f64 / steps as f64;
        worst = worst.min(best_eta_for_offset(crystal, offset)?);
    }
    Ok(worst)
}

/// Transmission and efficiency on a uniform temperature grid. Both endpoints
/// are always included.
pub fn scan_table(
    crystal: &CrystalSpec,
    cavity_spec: &CavitySpec,
    t_lo: f64,
    t_hi: f64,
    step_k: f64,
) -> Result<Vec<ScanRow>> {
    if !(step_k > 0.0 && step_k.is_finite()) {
        return Err(Error::invalid("scan step", "must be positive"));
    }
    if !(t_lo.is_finite() && t_hi.is_finite()) || t_lo > t_hi {
        return Err(Error::invalid("scan range", "t_min must not exceed t_max"));
    }
    let n = ((t_hi - t_lo) / step_k).floor() as usize;
    let mut temps: Vec<f64> = (0..=n).map(|i| t_lo + i as f64 * step_k).collect();
    if temps.last().is_some_and(|&t| t_hi - t > step_k * 1e-9) {
        temps.push(t_hi);
    }
    Ok(temps
        .into_iter()
        .map(|t| ScanRow {
            temperature_c: t,
            transmission: cavity::transmission(crystal, cavity_spec, t),
            eta: phasematch::conversion_efficiency(crystal, t),
        })
        .collect())
}
