//! Discrete-time simulation of the three-stage locking cascade.
//!
//! 1. The cavity is held on resonance by a Pound–Drever–Hall error signal
//!    fed back to the crystal temperature (first-order thermal plant, set
//!    point quantized to the controller resolution).
//! 2. Once the cavity is locked, the pump–probe relative phase is locked
//!    using a low-frequency dither on the same reflected-probe detector.
//! 3. Finally the probe–LO phase is locked on the homodyne output.
//!
//! Each loop measures a nonlinear discriminant, divides it by its
//! small-signal slope (so PID gains are loop-gain numbers rather than
//! detector-dependent constants), adds seeded white noise, and drives a
//! first-order actuator. A stage engages only after the previous one has
//! held its filtered error under the capture threshold for the hold time.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cavity;
use crate::dispersion::CrystalSpec;
use crate::{Error, Result};

/// PID loop and actuator settings.
///
/// Gains act on the slope-normalized error (kelvin for the cavity loop,
/// radians for the phase loops): `kp` is dimensionless, `ki` in 1/s, `kd` in s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServoConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub sample_dt: f64,
    pub actuator_time_constant: f64,
    /// Largest command magnitude; larger requests are clipped and flagged.
    pub actuator_range: f64,
    /// Command quantum (0.001 K for the temperature controller).
    pub actuator_resolution: f64,
}

impl ServoConfig {
    /// Peltier temperature loop. PI gains from lambda tuning on the
    /// 1 s thermal pole with a 1 s closed-loop time constant.
    pub fn thermal() -> Self {
        Self {
            kp: 1.0,
            ki: 1.0,
            kd: 0.0,
            sample_dt: 0.05,
            actuator_time_constant: 1.0,
            actuator_range: 5.0,
            actuator_resolution: 0.001,
        }
    }

    /// PZT phase loop: 1 ms actuator, 2 ms closed-loop time constant.
    pub fn pzt() -> Self {
        Self {
            kp: 0.5,
            ki: 500.0,
            kd: 0.0,
            sample_dt: 1e-4,
            actuator_time_constant: 1e-3,
            actuator_range: 20.0,
            actuator_resolution: 1e-6,
        }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        let positive = [
            ("sample_dt", self.sample_dt),
            ("actuator_time_constant", self.actuator_time_constant),
            ("actuator_range", self.actuator_range),
            ("actuator_resolution", self.actuator_resolution),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{field} must be positive")));
            }
        }
        if !(self.kp.is_finite() && self.ki.is_finite() && self.kd.is_finite()) {
            return Err(Error::invalid(name, "gains must be finite"));
        }
        if self.sample_dt > self.actuator_time_constant / 10.0 {
            return Err(Error::invalid(
                name,
                format!(
                    "sample_dt {} does not resolve the {} s actuator (need dt <= tau/10)",
                    self.sample_dt, self.actuator_time_constant
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig {
    pub pdh_mod_freq_hz: f64,
    pub pdh_mod_depth_rad: f64,
    pub phase_mod_freq_hz: f64,
    pub phase_mod_depth_rad: f64,
    /// Demodulation phase of the PDH mixer; `None` picks the phase with the
    /// steepest discriminant.
    pub demod_phase_rad: Option<f64>,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self {
            pdh_mod_freq_hz: 36.7e6,
            pdh_mod_depth_rad: 1.08,
            phase_mod_freq_hz: 130e3,
            phase_mod_depth_rad: 0.2,
            demod_phase_rad: None,
        }
    }
}

impl ModulationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pdh_mod_freq_hz", self.pdh_mod_freq_hz),
            ("pdh_mod_depth_rad", self.pdh_mod_depth_rad),
            ("phase_mod_freq_hz", self.phase_mod_freq_hz),
            ("phase_mod_depth_rad", self.phase_mod_depth_rad),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    "modulation",
                    format!("{name} must be positive"),
                ));
            }
        }
        Ok(())
    }

    /// Frequency-ordering checks against the cavity linewidth. The PDH
    /// sidebands should sit outside the resonance and the phase dither far
    /// inside it; violations are reported rather than rejected.
    pub fn diagnostics(&self, f0_hz: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.pdh_mod_freq_hz <= f0_hz {
            out.push(format!(
                "PDH modulation at {:.1} MHz is inside the cavity HWHM of {:.1} MHz; \
                 the discriminant is weaker and the demodulation phase matters",
                self.pdh_mod_freq_hz / 1e6,
                f0_hz / 1e6
            ));
        }
        if self.phase_mod_freq_hz >= f0_hz / 10.0 {
            out.push(format!(
                "phase dither at {:.3} MHz is not well below the cavity HWHM of {:.1} MHz",
                self.phase_mod_freq_hz / 1e6,
                f0_hz / 1e6
            ));
        }
        out
    }

    /// Demodulation phase to use for a cavity of half width `f0_hz`.
    pub fn demod_phase(&self, f0_hz: f64) -> f64 {
        self.demod_phase_rad
            .unwrap_or_else(|| optimal_demod_phase(f0_hz, self.pdh_mod_freq_hz))
    }
}

/// Reflection coefficient of the cavity at `detuning`.
fn reflection(detuning: f64, f0: f64) -> Complex64 {
    Complex64::new(-f0, detuning) / Complex64::new(f0, detuning)
}

/// Beat term `F(δ) F*(δ+Ω) − F*(δ) F(δ−Ω)` of the PDH signal.
fn pdh_beat(detuning: f64, f0: f64, mod_freq: f64) -> Complex64 {
    let f = reflection(detuning, f0);
    f * reflection(detuning + mod_freq, f0).conj() - f.conj() * reflection(detuning - mod_freq, f0)
}

/// Mixer phase that maximizes the discriminant slope at resonance.
pub fn optimal_demod_phase(f0_hz: f64, mod_freq_hz: f64) -> f64 {
    let h = f0_hz * 1e-6;
    let d = (pdh_beat(h, f0_hz, mod_freq_hz) - pdh_beat(-h, f0_hz, mod_freq_hz)) / (2.0 * h);
    d.re.atan2(d.im)
}

/// PDH error signal (dimensionless) at `detuning_hz` for a cavity of half
/// width `f0_hz`. Odd in the detuning and zero on resonance.
pub fn pdh_error(detuning_hz: f64, f0_hz: f64, modulation: &ModulationConfig) -> f64 {
    let psi = modulation.demod_phase(f0_hz);
    let beta = modulation.pdh_mod_depth_rad;
    let scale = 2.0 * libm::j0(beta) * libm::j1(beta);
    let rot = Complex64::from_polar(1.0, psi);
    let raw = |d: f64| (pdh_beat(d, f0_hz, modulation.pdh_mod_freq_hz) * rot).im;
    // Symmetrize so the odd symmetry holds bit-for-bit.
    scale * 0.5 * (raw(detuning_hz) - raw(-detuning_hz))
}

/// Dither-lock discriminant of a relative phase, `2 J1(β) sin φ`.
pub fn phase_error(relative_phase_rad: f64, mod_depth_rad: f64) -> f64 {
    2.0 * libm::j1(mod_depth_rad) * relative_phase_rad.sin()
}

/// RMS deviation of a phase record from its mean.
pub fn residual_phase_to_theta(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::invalid("phase series", "is empty"));
    }
    let n = series.len() as f64;
    // Shift by the first sample so a constant record gives exactly zero.
    let origin = series[0];
    let mean = series.iter().map(|p| p - origin).sum::<f64>() / n;
    Ok((series
        .iter()
        .map(|p| (p - origin - mean).powi(2))
        .sum::<f64>()
        / n)
        .sqrt())
}

/// White-noise amplitudes added to the slope-normalized error signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub cavity_k: f64,
    pub pump_probe_rad: f64,
    pub probe_lo_rad: f64,
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            cavity_k: 0.0,
            pump_probe_rad: 0.0,
            probe_lo_rad: 0.0,
        }
    }
}

impl Default for NoiseConfig {
    /// Sensor noise chosen so that the default cascade leaves roughly two
    /// degrees of RMS probe–LO phase error.
    fn default() -> Self {
        Self {
            cavity_k: 1e-5,
            pump_probe_rad: 0.1,
            probe_lo_rad: 0.22,
        }
    }
}

/// Lock-detector settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureConfig {
    pub cavity_threshold_k: f64,
    pub pump_probe_threshold_rad: f64,
    pub probe_lo_threshold_rad: f64,
    /// Smoothing time of the detector's low-pass on the error signal.
    pub filter_time_s: f64,
    /// How long the filtered error must stay under threshold.
    pub hold_time_s: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            cavity_threshold_k: 2e-3,
            pump_probe_threshold_rad: 0.1,
            probe_lo_threshold_rad: 0.1,
            filter_time_s: 0.05,
            hold_time_s: 0.2,
        }
    }
}

/// Starting offsets from the lock points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialOffsets {
    pub temperature_k: f64,
    pub pump_probe_rad: f64,
    pub probe_lo_rad: f64,
}

impl InitialOffsets {
    pub fn locked() -> Self {
        Self {
            temperature_k: 0.0,
            pump_probe_rad: 0.0,
            probe_lo_rad: 0.0,
        }
    }
}

impl Default for InitialOffsets {
    fn default() -> Self {
        Self {
            temperature_k: 3e-3,
            pump_probe_rad: 0.6,
            probe_lo_rad: -0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockConfig {
    pub cavity_loop: ServoConfig,
    pub pump_probe_loop: ServoConfig,
    pub probe_lo_loop: ServoConfig,
    pub modulation: ModulationConfig,
    pub noise: NoiseConfig,
    pub capture: CaptureConfig,
    pub initial: InitialOffsets,
    /// Spacing of recorded samples; the simulation itself runs at the
    /// fastest loop rate.
    pub record_interval_s: f64,
}

impl Default for LockConfig {
    fn default() -> Self {
        Self {
            cavity_loop: ServoConfig::thermal(),
            pump_probe_loop: ServoConfig::pzt(),
            probe_lo_loop: ServoConfig::pzt(),
            modulation: ModulationConfig::default(),
            noise: NoiseConfig::default(),
            capture: CaptureConfig::default(),
            initial: InitialOffsets::default(),
            record_interval_s: 0.01,
        }
    }
}

impl LockConfig {
    fn loops(&self) -> [&ServoConfig; 3] {
        [
            &self.cavity_loop,
            &self.pump_probe_loop,
            &self.probe_lo_loop,
        ]
    }

    pub fn base_dt(&self) -> f64 {
        self.loops()
            .iter()
            .map(|l| l.sample_dt)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity_loop.validate("cavity loop")?;
        self.pump_probe_loop.validate("pump-probe loop")?;
        self.probe_lo_loop.validate("probe-LO loop")?;
        self.modulation.validate()?;
        let base = self.base_dt();
        for l in self.loops() {
            let ratio = l.sample_dt / base;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                return Err(Error::invalid(
                    "sample_dt",
                    "loop sample intervals must be integer multiples of the fastest one",
                ));
            }
        }
        let n = &self.noise;
        if ![n.cavity_k, n.pump_probe_rad, n.probe_lo_rad]
            .iter()
            .all(|v| *v >= 0.0 && v.is_finite())
        {
            return Err(Error::invalid("noise", "amplitudes must be non-negative"));
        }
        let c = &self.capture;
        if ![
            c.cavity_threshold_k,
            c.pump_probe_threshold_rad,
            c.probe_lo_threshold_rad,
            c.filter_time_s,
        ]
        .iter()
        .all(|v| *v > 0.0)
            || !(c.hold_time_s >= 0.0)
        {
            return Err(Error::invalid(
                "capture",
                "thresholds and filter time must be positive",
            ));
        }
        if !(self.record_interval_s > 0.0) {
            return Err(Error::invalid("record_interval_s", "must be positive"));
        }
        Ok(())
    }

    pub fn max_time_constant(&self) -> f64 {
        self.loops()
            .iter()
            .map(|l| l.actuator_time_constant)
            .fold(0.0, f64::max)
    }
}

/// Cavity properties the simulator needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockPlant {
    /// Resonance temperature the loop locks to.
    pub t_res_c: f64,
    pub f0_hz: f64,
    /// Probe detuning per kelvin of crystal temperature.
    pub detuning_per_kelvin: f64,
}

impl LockPlant {
    /// Locks to the resonance nearest the phase-matching temperature.
    pub fn new(crystal: &CrystalSpec, f0_hz: f64) -> Result<Self> {
        crystal.validate()?;
        if !(f0_hz > 0.0) {
            return Err(Error::invalid("f0", "must be positive"));
        }
        let fsr = cavity::fsr_temperature(crystal)?;
        let res =
            cavity::resonance_temperatures(crystal, crystal.t_ref_c - fsr, crystal.t_ref_c + fsr)?;
        let t_res_c = res
            .iter()
            .map(|r| r.temperature_c)
            .min_by(|a, b| {
                (a - crystal.t_ref_c)
                    .abs()
                    .total_cmp(&(b - crystal.t_ref_c).abs())
            })
            .ok_or_else(|| Error::Domain("no resonance within one FSR of the reference".into()))?;
        Ok(Self {
            t_res_c,
            f0_hz,
            detuning_per_kelvin: cavity::detuning_per_kelvin(crystal)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    AcquiringCavity,
    AcquiringPumpProbe,
    AcquiringProbeLo,
    Locked,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub time_s: f64,
    pub temperature_c: f64,
    pub detuning_hz: f64,
    pub relative_phase_pump_probe: f64,
    pub relative_phase_probe_lo: f64,
    pub stage: Stage,
    /// Some actuator command was clipped during the last step.
    pub saturated: bool,
}

/// One recorded sample of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockSample {
    pub state: PlantState,
    /// Actuator commands of the three loops.
    pub commands: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockSummary {
    pub acquired: bool,
    pub cavity_acquired_s: Option<f64>,
    pub pump_probe_acquired_s: Option<f64>,
    pub probe_lo_acquired_s: Option<f64>,
    pub residual_rms_detuning_hz: Option<f64>,
    pub residual_rms_phase_rad: Option<f64>,
    pub residual_rms_phase_pump_probe_rad: Option<f64>,
    pub theta_tilde_rad: Option<f64>,
    pub theta_tilde_deg: Option<f64>,
    pub saturated: bool,
    pub steps: u64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockRun {
    pub samples: Vec<LockSample>,
    pub summary: LockSummary,
}

#[derive(Clone, Debug)]
struct Loop {
    servo: ServoConfig,
    /// Samples of the base step per controller update.
    ratio: u64,
    /// Actuator relaxation per base step.
    relax: f64,
    detector_alpha: f64,
    threshold: f64,
    noise: f64,
    slope: f64,
    engaged: bool,
    /// The latest command was clipped.
    clipped: bool,
    integral: f64,
    previous_error: Option<f64>,
    command: f64,
    actuator: f64,
    disturbance: f64,
    filtered: f64,
    below_since: Option<f64>,
    acquired_at: Option<f64>,
}

impl Loop {
    fn new(
        servo: &ServoConfig,
        base_dt: f64,
        capture: &CaptureConfig,
        threshold: f64,
        noise: f64,
        slope: f64,
        disturbance: f64,
    ) -> Self {
        Self {
            ratio: (servo.sample_dt / base_dt).round() as u64,
            relax: 1.0 - (-base_dt / servo.actuator_time_constant).exp(),
            detector_alpha: 1.0 - (-servo.sample_dt / capture.filter_time_s).exp(),
            servo: servo.clone(),
            threshold,
            noise,
            slope,
            engaged: false,
            clipped: false,
            integral: 0.0,
            previous_error: None,
            command: 0.0,
            actuator: 0.0,
            disturbance,
            filtered: 0.0,
            below_since: None,
            acquired_at: None,
        }
    }

    fn output(&self) -> f64 {
        self.disturbance + self.actuator
    }

    /// Runs the controller on a normalized error; returns true if the
    /// command had to be clipped.
    fn control(&mut self, error: f64) -> bool {
        let dt = self.servo.sample_dt;
        let derivative = self.previous_error.map_or(0.0, |p| (error - p) / dt);
        self.previous_error = Some(error);
        let integral = self.integral + error * dt;
        let request =
            -(self.servo.kp * error + self.servo.ki * integral + self.servo.kd * derivative);
        let range = self.servo.actuator_range;
        let saturated = request.abs() > range;
        if !saturated {
            // Conditional integration: freeze the integrator while clipped.
            self.integral = integral;
        }
        let clipped = request.clamp(-range, range);
        let q = self.servo.actuator_resolution;
        self.command = (clipped / q).round() * q;
        saturated
    }

    fn detect(&mut self, error: f64, now: f64, hold: f64) {
        self.filtered += self.detector_alpha * (error - self.filtered);
        if self.acquired_at.is_some() {
            return;
        }
        if self.filtered.abs() < self.threshold {
            let since = *self.below_since.get_or_insert(now);
            if now - since >= hold - 1e-12 {
                self.acquired_at = Some(now);
            }
        } else {
            self.below_since = None;
        }
    }
}

/// Steps the cascade one base sample at a time.
pub struct LockSimulator {
    plant: LockPlant,
    config: LockConfig,
    demod: ModulationConfig,
    loops: [Loop; 3],
    base_dt: f64,
    step_index: u64,
    state: PlantState,
    rng: ChaCha8Rng,
}

impl LockSimulator {
    pub fn new(plant: LockPlant, config: LockConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let base_dt = config.base_dt();
        let mut demod = config.modulation.clone();
        demod.demod_phase_rad = Some(config.modulation.demod_phase(plant.f0_hz));

        let h = plant.f0_hz * 1e-6;
        let pdh_slope = (pdh_error(h, plant.f0_hz, &demod) - pdh_error(-h, plant.f0_hz, &demod))
            / (2.0 * h)
            * plant.detuning_per_kelvin;
        let phase_slope = phase_error(1e-9, config.modulation.phase_mod_depth_rad) / 1e-9;
        if !(pdh_slope.abs() > 0.0 && pdh_slope.is_finite()) || phase_slope.abs() < 1e-12 {
            return Err(Error::invalid(
                "modulation",
                "demodulation leaves no error-signal slope",
            ));
        }

        let cap = &config.capture;
        let init = &config.initial;
        let loops = [
            Loop::new(
                &config.cavity_loop,
                base_dt,
                cap,
                cap.cavity_threshold_k,
                config.noise.cavity_k,
                pdh_slope,
                init.temperature_k,
            ),
            Loop::new(
                &config.pump_probe_loop,
                base_dt,
                cap,
                cap.pump_probe_threshold_rad,
                config.noise.pump_probe_rad,
                phase_slope,
                init.pump_probe_rad,
            ),
            Loop::new(
                &config.probe_lo_loop,
                base_dt,
                cap,
                cap.probe_lo_threshold_rad,
                config.noise.probe_lo_rad,
                phase_slope,
                init.probe_lo_rad,
            ),
        ];
        let mut sim = Self {
            state: PlantState {
                time_s: 0.0,
                temperature_c: plant.t_res_c,
                detuning_hz: 0.0,
                relative_phase_pump_probe: 0.0,
                relative_phase_probe_lo: 0.0,
                stage: Stage::AcquiringCavity,
                saturated: false,
            },
            plant,
            config,
            demod,
            loops,
            base_dt,
            step_index: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        sim.loops[0].engaged = true;
        sim.sync_state();
        Ok(sim)
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn commands(&self) -> [f64; 3] {
        [
            self.loops[0].command,
            self.loops[1].command,
            self.loops[2].command,
        ]
    }

    fn sync_state(&mut self) {
        let offset = self.loops[0].output();
        self.state.temperature_c = self.plant.t_res_c + offset;
        self.state.detuning_hz = offset * self.plant.detuning_per_kelvin;
        self.state.relative_phase_pump_probe = self.loops[1].output();
        self.state.relative_phase_probe_lo = self.loops[2].output();
    }

    /// Slope-normalized discriminant readings before noise.
    fn errors(&self) -> [f64; 3] {
        let f0 = self.plant.f0_hz;
        let detuning = self.state.detuning_hz;
        let depth = self.config.modulation.phase_mod_depth_rad;
        // The pump-probe signal rides on the probe light reflected by the
        // cavity, so it fades when the cavity is off resonance.
        let on_resonance = 1.0 / (1.0 + (detuning / f0).powi(2));
        [
            pdh_error(detuning, f0, &self.demod) / self.loops[0].slope,
            phase_error(self.state.relative_phase_pump_probe, depth) * on_resonance
                / self.loops[1].slope,
            phase_error(self.state.relative_phase_probe_lo, depth) / self.loops[2].slope,
        ]
    }

    /// Advances one base sample.
    pub fn step(&mut self) -> &PlantState {
        let now = self.state.time_s;
        let errors = self.errors();
        let hold = self.config.capture.hold_time_s;
        for (i, clean) in errors.into_iter().enumerate() {
            let lp = &mut self.loops[i];
            if self.step_index % lp.ratio != 0 {
                continue;
            }
            let noise = if lp.noise > 0.0 {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                lp.noise * z
            } else {
                0.0
            };
            let measured = clean + noise;
            if lp.engaged {
                lp.clipped = lp.control(measured);
                lp.detect(measured, now, hold);
            }
        }
        // Hand over to the next stage once the current one is acquired.
        for i in 0..2 {
            if self.loops[i].acquired_at.is_some() && !self.loops[i + 1].engaged {
                self.loops[i + 1].engaged = true;
            }
        }
        for lp in &mut self.loops {
            lp.actuator += (lp.command - lp.actuator) * lp.relax;
        }
        self.step_index += 1;
        self.state.time_s = self.step_index as f64 * self.base_dt;
        self.state.saturated = self.loops.iter().any(|l| l.clipped);
        self.state.stage = match self.loops.iter().position(|l| l.acquired_at.is_none()) {
            Some(0) => Stage::AcquiringCavity,
            Some(1) => Stage::AcquiringPumpProbe,
            Some(_) => Stage::AcquiringProbeLo,
            None => Stage::Locked,
        };
        self.sync_state();
        &self.state
    }

    fn sample(&self) -> LockSample {
        LockSample {
            state: self.state,
            commands: self.commands(),
        }
    }
}

/// Welford accumulator for post-acquisition statistics.
#[derive(Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
        self.sum_sq += v * v;
    }

    fn rms(&self) -> Option<f64> {
        (self.n > 0).then(|| (self.sum_sq / self.n as f64).sqrt())
    }

    fn std(&self) -> Option<f64> {
        (self.n > 0).then(|| (self.m2 / self.n as f64).max(0.0).sqrt())
    }
}

/// Runs the cascade for `duration_s`. Failure to lock is reported in the
/// summary, not as an error.
pub fn simulate_lock(
    plant: &LockPlant,
    config: &LockConfig,
    duration_s: f64,
    seed: u64,
) -> Result<LockRun> {
    config.validate()?;
    let min_duration = 10.0 * config.max_time_constant();
    if !(duration_s >= min_duration) {
        return Err(Error::invalid(
            "duration",
            format!("{duration_s} s is shorter than 10 actuator time constants ({min_duration} s)"),
        ));
    }
    let mut sim = LockSimulator::new(plant.clone(), config.clone(), seed)?;
    let steps = (duration_s / sim.base_dt).round() as u64;
    let record_every = ((config.record_interval_s / sim.base_dt).round() as u64).max(1);

    let mut samples = Vec::with_capacity((steps / record_every + 2) as usize);
    samples.push(sim.sample());
    let mut detuning = Moments::default();
    let mut phase_plo = Moments::default();
    let mut phase_pp = Moments::default();
    let mut saturated = false;

    for k in 1..=steps {
        let state = *sim.step();
        saturated |= state.saturated;
        if state.stage == Stage::Locked {
            detuning.push(state.detuning_hz);
            phase_plo.push(state.relative_phase_probe_lo);
            phase_pp.push(state.relative_phase_pump_probe);
        }
        if k % record_every == 0 || k == steps {
            samples.push(sim.sample());
        }
    }

    let acquired = sim.loops.iter().all(|l| l.acquired_at.is_some());
    let theta = phase_plo.std();
    let summary = LockSummary {
        acquired,
        cavity_acquired_s: sim.loops[0].acquired_at,
        pump_probe_acquired_s: sim.loops[1].acquired_at,
        probe_lo_acquired_s: sim.loops[2].acquired_at,
        residual_rms_detuning_hz: detuning.rms(),
        residual_rms_phase_rad: theta,
        residual_rms_phase_pump_probe_rad: phase_pp.std(),
        theta_tilde_rad: theta,
        theta_tilde_deg: theta.map(f64::to_degrees),
        saturated,
        steps,
        warnings: config.modulation.diagnostics(plant.f0_hz),
    };
    Ok(LockRun { samples, summary })
}

/// Default plant: 10 mm PPKTP, cavity half width 82 MHz.
pub fn default_plant() -> LockPlant {
    LockPlant::new(&CrystalSpec::ppktp_860nm(), 82e6).expect("built-in crystal is valid")
}

/// Wraps a phase into (−π, π].
pub fn wrap_phase(phase: f64) -> f64 {
    let wrapped = (phase + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped == -PI {
        PI
    } else {
        wrapped
    }
}
