//! Quadrature noise of a sub-threshold degenerate OPO.
//!
//! Variances are in shot-noise units (vacuum = 1). With `x = √(P/P_th)`,
//! escape efficiency `η = T/(T+L)` and detection efficiency `κ`:
//!
//! ```text
//! R± = 1 ± κ η · 4x / ((1 ∓ x)² + (f/f0)²)
//! ```
//!
//! A residual locking phase error `θ̃` mixes the two quadratures:
//! `R'± = R± cos²θ̃ + R∓ sin²θ̃`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Squeezed,
    AntiSqueezed,
}

impl Quadrature {
    fn sign(self) -> f64 {
        match self {
            Quadrature::Squeezed => -1.0,
            Quadrature::AntiSqueezed => 1.0,
        }
    }

    pub fn conjugate(self) -> Self {
        match self {
            Quadrature::Squeezed => Quadrature::AntiSqueezed,
            Quadrature::AntiSqueezed => Quadrature::Squeezed,
        }
    }
}

/// Everything the noise model consumes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingParams {
    /// Propagation efficiency outside the OPO.
    pub kappa: f64,
    pub oc_t: f64,
    pub loss_l: f64,
    /// Cavity half width at half maximum, Hz.
    pub f0_hz: f64,
    /// Effective phase-lock error, radians.
    pub theta_tilde_rad: f64,
    pub p_threshold_w: f64,
}

impl SqueezingParams {
    /// OPO No.1: T = 11.8 %, L = 0.8 %, κ = 0.968, f0 = 82 MHz, θ̃ = 2°, P_th = 283 mW.
    pub fn opo1() -> Self {
        Self {
            kappa: 0.968,
            oc_t: 0.118,
            loss_l: 0.008,
            f0_hz: 82e6,
            theta_tilde_rad: 2.0f64.to_radians(),
            p_threshold_w: 0.283,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::invalid(
                "kappa",
                format!("{} not in (0, 1]", self.kappa),
            ));
        }
        if !(self.oc_t > 0.0
            && self.loss_l >= 0.0
            && self.oc_t.is_finite()
            && self.loss_l.is_finite())
        {
            return Err(Error::invalid("escape efficiency", "needs T > 0 and L ≥ 0"));
        }
        if !(self.f0_hz > 0.0 && self.f0_hz.is_finite()) {
            return Err(Error::invalid("f0", "cavity linewidth must be positive"));
        }
        if !(self.theta_tilde_rad.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("theta_tilde", "must satisfy |θ̃| < π/2"));
        }
        if !(self.p_threshold_w > 0.0 && self.p_threshold_w.is_finite()) {
            return Err(Error::invalid("threshold power", "must be positive"));
        }
        Ok(())
    }

    /// `T / (T + L)`.
    pub fn escape_efficiency(&self) -> f64 {
        self.oc_t / (self.oc_t + self.loss_l)
    }

    /// Total detection efficiency `κ T/(T+L)` multiplying the OPO term.
    pub fn total_efficiency(&self) -> f64 {
        self.kappa * self.escape_efficiency()
    }
}

/// Pump power together with its normalized amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpState {
    pub power_w: f64,
    pub x: f64,
}

impl PumpState {
    pub fn new(power_w: f64, p_threshold_w: f64) -> Result<Self> {
        Ok(Self {
            power_w,
            x: pump_to_x(power_w, p_threshold_w)?,
        })
    }
}

/// Normalized pump amplitude `x = √(P / P_th)`; rejects pumping at or above threshold.
pub fn pump_to_x(power_w: f64, p_threshold_w: f64) -> Result<f64> {
    if !(p_threshold_w > 0.0) {
        return Err(Error::invalid("threshold power", "must be positive"));
    }
    if !(power_w >= 0.0) {
        return Err(Error::invalid(
            "pump power",
            format!("{power_w} W is negative"),
        ));
    }
    if power_w >= p_threshold_w {
        return Err(Error::AboveThreshold {
            power_w,
            threshold_w: p_threshold_w,
        });
    }
    Ok((power_w / p_threshold_w).sqrt())
}

fn check_x(x: f64) -> Result<()> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "normalized pump amplitude {x} is outside [0, 1)"
        )));
    }
    Ok(())
}

/// Quadrature variance without phase noise. `x` must lie in `[0, 1)`.
pub fn variance(quad: Quadrature, x: f64, f_hz: f64, params: &SqueezingParams) -> f64 {
    debug_assert!((0.0..1.0).contains(&x), "x = {x}");
    let s = quad.sign();
    let nu = f_hz / params.f0_hz;
    let denom = (1.0 - s * x).powi(2) + nu * nu;
    1.0 + s * params.total_efficiency() * 4.0 * x / denom
}

/// Quadrature variance including the phase-lock mixture.
pub fn variance_with_phase_noise(
    quad: Quadrature,
    x: f64,
    f_hz: f64,
    params: &SqueezingParams,
) -> f64 {
    let (s, c) = params.theta_tilde_rad.sin_cos();
    variance(quad, x, f_hz, params) * c * c + variance(quad.conjugate(), x, f_hz, params) * s * s
}

pub fn to_db(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("cannot express {r} in dB")));
    }
    Ok(10.0 * r.log10())
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10 log10` for values the model guarantees to be positive.
fn db(r: f64) -> f64 {
    10.0 * r.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub power_w: f64,
    pub x: f64,
    pub sq_db: f64,
    pub antisq_db: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub freq_hz: f64,
    pub sq_db: f64,
    pub antisq_db: f64,
}

/// Squeezing and anti-squeezing (with phase noise) versus pump power at a fixed frequency.
pub fn pump_sweep(params: &SqueezingParams, powers_w: &[f64], f_hz: f64) -> Result<Vec<SweepRow>> {
    params.validate()?;
    let above: Vec<f64> = powers_w
        .iter()
        .copied()
        .filter(|&p| p >= params.p_threshold_w)
        .collect();
    if !above.is_empty() {
        return Err(Error::PowersAboveThreshold {
            powers_w: above,
            threshold_w: params.p_threshold_w,
        });
    }
    powers_w
        .iter()
        .map(|&p| {
            let x = pump_to_x(p, params.p_threshold_w)?;
            Ok(SweepRow {
                power_w: p,
                x,
                sq_db: db(variance_with_phase_noise(
                    Quadrature::Squeezed,
                    x,
                    f_hz,
                    params,
                )),
                antisq_db: db(variance_with_phase_noise(
                    Quadrature::AntiSqueezed,
                    x,
                    f_hz,
                    params,
                )),
            })
        })
        .collect()
}

/// Noise spectrum at a fixed pump amplitude.
pub fn spectrum(params: &SqueezingParams, x: f64, freqs_hz: &[f64]) -> Result<Vec<SpectrumRow>> {
    params.validate()?;
    check_x(x)?;
    Ok(freqs_hz
        .iter()
        .map(|&f| SpectrumRow {
            freq_hz: f,
            sq_db: db(variance_with_phase_noise(
                Quadrature::Squeezed,
                x,
                f,
                params,
            )),
            antisq_db: db(variance_with_phase_noise(
                Quadrature::AntiSqueezed,
                x,
                f,
                params,
            )),
        })
        .collect())
}

/// Frequency at which the squeezed variance has recovered halfway to shot noise, `(1 + x) f0`.
pub fn squeezing_bandwidth(x: f64, f0_hz: f64) -> f64 {
    (1.0 + x) * f0_hz
}

/// Overall detection efficiency outside the OPO. Mode overlap enters as the
/// square of the homodyne fringe visibility.
pub fn propagation_efficiency(
    visibility: f64,
    path_efficiency: f64,
    detector_qe: f64,
) -> Result<f64> {
    for (name, v) in [
        ("visibility", visibility),
        ("path efficiency", path_efficiency),
        ("detector quantum efficiency", detector_qe),
    ] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::invalid(name, format!("{v} not in (0, 1]")));
        }
    }
    Ok(visibility * visibility * path_efficiency * detector_qe)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GainSign {
    Amplify,
    Deamplify,
}

/// Classical parametric gain `1 / (1 ∓ x)²` seen by a seed beam.
pub fn parametric_gain(x: f64, sign: GainSign) -> Result<f64> {
    check_x(x)?;
    Ok(match sign {
        GainSign::Amplify => 1.0 / (1.0 - x).powi(2),
        GainSign::Deamplify => 1.0 / (1.0 + x).powi(2),
    })
}

/// Threshold power inferred from a measured amplification gain at a known pump power.
pub fn threshold_from_gain(measured_gain: f64, pump_power_w: f64) -> Result<f64> {
    if !(measured_gain > 1.0 && measured_gain.is_finite()) {
        return Err(Error::Domain(format!(
            "amplification gain {measured_gain} must exceed 1"
        )));
    }
    if !(pump_power_w > 0.0) {
        return Err(Error::invalid("pump power", "must be positive"));
    }
    let x = 1.0 - 1.0 / measured_gain.sqrt();
    let p_th = pump_power_w / (x * x);
    if !p_th.is_finite() {
        return Err(Error::Domain(
            "gain too close to 1 to resolve threshold".into(),
        ));
    }
    Ok(p_th)
}
