//! TOML configuration.
//!
//! Every physical quantity carries its unit in the key name. All sections
//! are optional; missing values fall back to OPO No.1. Unknown keys are
//! rejected.
//!
//! ```toml
//! output_dir = "out"
//!
//! [crystal]
//! length_mm = 10.0
//! wavelength_nm = 860.0
//! n0_fund = 1.84
//! n0_sh = 1.96
//! dn_dt_fund_per_k = 3.57e-5
//! dn_dt_sh_per_k = 5.10e-5
//! t_ref_c = 40.0
//! poling_period_um = 4.3
//!
//! [cavity]
//! output_coupler_t = 0.118
//! intra_cavity_loss = 0.008
//!
//! [squeezing]
//! visibility = 0.986
//! path_efficiency = 0.998
//! detector_qe = 0.998
//! f0_mhz = 82.0
//! theta_tilde_deg = 2.0
//! p_threshold_mw = 283.0
//! measurement_freq_mhz = 2.0
//!
//! [report]
//! label = "No.1"
//! squeezing_pump_mw = 130.0
//! bandwidth_pump_mw = 130.0
//!
//! [locksim]
//! duration_s = 20.0
//! seed = 1
//!
//! [locksim.cavity_loop]
//! temperature_resolution_k = 0.001
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::report::ReportInput;
use crate::cavity::{self, CavitySpec};
use crate::dispersion::CrystalSpec;
use crate::locksim::{
    CaptureConfig, InitialOffsets, LockConfig, LockPlant, ModulationConfig, NoiseConfig,
    ServoConfig,
};
use crate::squeezing::{self, SqueezingParams};
use crate::{Error, Result};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "MONOPO_OUTPUT_DIR";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    output_dir: Option<PathBuf>,
    #[serde(default)]
    crystal: CrystalFile,
    #[serde(default)]
    cavity: CavityFile,
    #[serde(default)]
    squeezing: SqueezingFile,
    #[serde(default)]
    report: ReportFile,
    #[serde(default)]
    locksim: LocksimFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrystalFile {
    length_mm: Option<f64>,
    wavelength_nm: Option<f64>,
    n0_fund: Option<f64>,
    n0_sh: Option<f64>,
    dn_dt_fund_per_k: Option<f64>,
    dn_dt_sh_per_k: Option<f64>,
    t_ref_c: Option<f64>,
    poling_period_um: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CavityFile {
    output_coupler_t: Option<f64>,
    intra_cavity_loss: Option<f64>,
    hr_transmittance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SqueezingFile {
    kappa: Option<f64>,
    visibility: Option<f64>,
    path_efficiency: Option<f64>,
    detector_qe: Option<f64>,
    f0_mhz: Option<f64>,
    theta_tilde_deg: Option<f64>,
    p_threshold_mw: Option<f64>,
    measurement_freq_mhz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportFile {
    label: Option<String>,
    squeezing_pump_mw: Option<f64>,
    bandwidth_pump_mw: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocksimFile {
    duration_s: Option<f64>,
    seed: Option<u64>,
    record_interval_s: Option<f64>,
    #[serde(default)]
    cavity_loop: ThermalLoopFile,
    #[serde(default)]
    pump_probe_loop: PhaseLoopFile,
    #[serde(default)]
    probe_lo_loop: PhaseLoopFile,
    #[serde(default)]
    modulation: ModulationFile,
    #[serde(default)]
    noise: NoiseFile,
    #[serde(default)]
    capture: CaptureFile,
    #[serde(default)]
    initial: InitialFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThermalLoopFile {
    kp: Option<f64>,
    ki_per_s: Option<f64>,
    kd_s: Option<f64>,
    sample_dt_s: Option<f64>,
    actuator_time_constant_s: Option<f64>,
    actuator_range_k: Option<f64>,
    temperature_resolution_k: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseLoopFile {
    kp: Option<f64>,
    ki_per_s: Option<f64>,
    kd_s: Option<f64>,
    sample_dt_s: Option<f64>,
    actuator_time_constant_s: Option<f64>,
    actuator_range_rad: Option<f64>,
    actuator_resolution_rad: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModulationFile {
    pdh_mod_freq_mhz: Option<f64>,
    pdh_mod_depth_rad: Option<f64>,
    phase_mod_freq_khz: Option<f64>,
    phase_mod_depth_rad: Option<f64>,
    demod_phase_deg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    cavity_k: Option<f64>,
    pump_probe_rad: Option<f64>,
    probe_lo_rad: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaptureFile {
    cavity_threshold_k: Option<f64>,
    pump_probe_threshold_rad: Option<f64>,
    probe_lo_threshold_rad: Option<f64>,
    filter_time_s: Option<f64>,
    hold_time_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialFile {
    temperature_offset_k: Option<f64>,
    pump_probe_rad: Option<f64>,
    probe_lo_rad: Option<f64>,
}

/// Pump levels and label used when the device is summarized in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub label: String,
    pub squeezing_pump_w: f64,
    pub bandwidth_pump_w: f64,
}

/// Fully resolved configuration in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolkitConfig {
    pub crystal: CrystalSpec,
    pub cavity: CavitySpec,
    pub squeezing: SqueezingParams,
    pub measurement_freq_hz: f64,
    pub report: ReportSettings,
    pub lock: LockConfig,
    pub lock_duration_s: f64,
    pub lock_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        Self::from_toml_str("").expect("empty config resolves to the defaults")
    }
}

fn servo(base: ServoConfig, f: &ThermalLoopFile) -> ServoConfig {
    ServoConfig {
        kp: f.kp.unwrap_or(base.kp),
        ki: f.ki_per_s.unwrap_or(base.ki),
        kd: f.kd_s.unwrap_or(base.kd),
        sample_dt: f.sample_dt_s.unwrap_or(base.sample_dt),
        actuator_time_constant: f
            .actuator_time_constant_s
            .unwrap_or(base.actuator_time_constant),
        actuator_range: f.actuator_range_k.unwrap_or(base.actuator_range),
        actuator_resolution: f
            .temperature_resolution_k
            .unwrap_or(base.actuator_resolution),
    }
}

fn phase_servo(base: ServoConfig, f: &PhaseLoopFile) -> ServoConfig {
    ServoConfig {
        kp: f.kp.unwrap_or(base.kp),
        ki: f.ki_per_s.unwrap_or(base.ki),
        kd: f.kd_s.unwrap_or(base.kd),
        sample_dt: f.sample_dt_s.unwrap_or(base.sample_dt),
        actuator_time_constant: f
            .actuator_time_constant_s
            .unwrap_or(base.actuator_time_constant),
        actuator_range: f.actuator_range_rad.unwrap_or(base.actuator_range),
        actuator_resolution: f
            .actuator_resolution_rad
            .unwrap_or(base.actuator_resolution),
    }
}

impl ToolkitConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn resolve(file: FileConfig) -> Result<Self> {
        let c = &file.crystal;
        let d = CrystalSpec::ppktp_860nm();
        let crystal = CrystalSpec {
            length_m: c.length_mm.map_or(d.length_m, |v| v * 1e-3),
            wavelength_m: c.wavelength_nm.map_or(d.wavelength_m, |v| v * 1e-9),
            n0_fund: c.n0_fund.unwrap_or(d.n0_fund),
            n0_sh: c.n0_sh.unwrap_or(d.n0_sh),
            dn_dt_fund: c.dn_dt_fund_per_k.unwrap_or(d.dn_dt_fund),
            dn_dt_sh: c.dn_dt_sh_per_k.unwrap_or(d.dn_dt_sh),
            t_ref_c: c.t_ref_c.unwrap_or(d.t_ref_c),
            poling_period_m: c.poling_period_um.map_or(d.poling_period_m, |v| v * 1e-6),
        };
        crystal.validate()?;

        let dq = SqueezingParams::opo1();
        let cavity = CavitySpec {
            output_coupler_t: file.cavity.output_coupler_t.unwrap_or(dq.oc_t),
            intra_cavity_loss: file.cavity.intra_cavity_loss.unwrap_or(dq.loss_l),
            hr_transmittance: file.cavity.hr_transmittance.unwrap_or(0.0),
        };
        cavity.validate()?;

        let s = &file.squeezing;
        let factors = [s.visibility, s.path_efficiency, s.detector_qe];
        let kappa = match (s.kappa, factors.iter().any(Option::is_some)) {
            (Some(_), true) => {
                return Err(Error::Config(
                    "give either squeezing.kappa or its factors (visibility, path_efficiency, detector_qe), not both"
                        .into(),
                ))
            }
            (Some(k), false) => k,
            (None, true) => squeezing::propagation_efficiency(
                s.visibility.unwrap_or(1.0),
                s.path_efficiency.unwrap_or(1.0),
                s.detector_qe.unwrap_or(1.0),
            )?,
            (None, false) => dq.kappa,
        };
        let params = SqueezingParams {
            kappa,
            oc_t: cavity.output_coupler_t,
            loss_l: cavity.intra_cavity_loss,
            f0_hz: s
                .f0_mhz
                .map_or_else(|| cavity::cavity_hwhm(&crystal, &cavity), |v| v * 1e6),
            theta_tilde_rad: s
                .theta_tilde_deg
                .map_or(dq.theta_tilde_rad, f64::to_radians),
            p_threshold_w: s.p_threshold_mw.map_or(dq.p_threshold_w, |v| v * 1e-3),
        };
        params.validate()?;
        let measurement_freq_hz = s.measurement_freq_mhz.map_or(2e6, |v| v * 1e6);
        if !(measurement_freq_hz >= 0.0 && measurement_freq_hz.is_finite()) {
            return Err(Error::invalid(
                "measurement_freq_mhz",
                "must be non-negative",
            ));
        }

        let r = &file.report;
        let report = ReportSettings {
            label: r.label.clone().unwrap_or_else(|| "OPO".into()),
            squeezing_pump_w: r.squeezing_pump_mw.map_or(0.130, |v| v * 1e-3),
            bandwidth_pump_w: r
                .bandwidth_pump_mw
                .or(r.squeezing_pump_mw)
                .map_or(0.130, |v| v * 1e-3),
        };

        let l = &file.locksim;
        let dm = ModulationConfig::default();
        let dn = NoiseConfig::default();
        let dc = CaptureConfig::default();
        let di = InitialOffsets::default();
        let lock = LockConfig {
            cavity_loop: servo(ServoConfig::thermal(), &l.cavity_loop),
            pump_probe_loop: phase_servo(ServoConfig::pzt(), &l.pump_probe_loop),
            probe_lo_loop: phase_servo(ServoConfig::pzt(), &l.probe_lo_loop),
            modulation: ModulationConfig {
                pdh_mod_freq_hz: l
                    .modulation
                    .pdh_mod_freq_mhz
                    .map_or(dm.pdh_mod_freq_hz, |v| v * 1e6),
                pdh_mod_depth_rad: l
                    .modulation
                    .pdh_mod_depth_rad
                    .unwrap_or(dm.pdh_mod_depth_rad),
                phase_mod_freq_hz: l
                    .modulation
                    .phase_mod_freq_khz
                    .map_or(dm.phase_mod_freq_hz, |v| v * 1e3),
                phase_mod_depth_rad: l
                    .modulation
                    .phase_mod_depth_rad
                    .unwrap_or(dm.phase_mod_depth_rad),
                demod_phase_rad: l.modulation.demod_phase_deg.map(f64::to_radians),
            },
            noise: NoiseConfig {
                cavity_k: l.noise.cavity_k.unwrap_or(dn.cavity_k),
                pump_probe_rad: l.noise.pump_probe_rad.unwrap_or(dn.pump_probe_rad),
                probe_lo_rad: l.noise.probe_lo_rad.unwrap_or(dn.probe_lo_rad),
            },
            capture: CaptureConfig {
                cavity_threshold_k: l
                    .capture
                    .cavity_threshold_k
                    .unwrap_or(dc.cavity_threshold_k),
                pump_probe_threshold_rad: l
                    .capture
                    .pump_probe_threshold_rad
                    .unwrap_or(dc.pump_probe_threshold_rad),
                probe_lo_threshold_rad: l
                    .capture
                    .probe_lo_threshold_rad
                    .unwrap_or(dc.probe_lo_threshold_rad),
                filter_time_s: l.capture.filter_time_s.unwrap_or(dc.filter_time_s),
                hold_time_s: l.capture.hold_time_s.unwrap_or(dc.hold_time_s),
            },
            initial: InitialOffsets {
                temperature_k: l.initial.temperature_offset_k.unwrap_or(di.temperature_k),
                pump_probe_rad: l.initial.pump_probe_rad.unwrap_or(di.pump_probe_rad),
                probe_lo_rad: l.initial.probe_lo_rad.unwrap_or(di.probe_lo_rad),
            },
            record_interval_s: l.record_interval_s.unwrap_or(0.01),
        };
        lock.validate()?;

        Ok(Self {
            crystal,
            cavity,
            squeezing: params,
            measurement_freq_hz,
            report,
            lock,
            lock_duration_s: l.duration_s.unwrap_or(20.0),
            lock_seed: l.seed.unwrap_or(1),
            output_dir: file.output_dir,
        })
    }

    /// Output directory after applying an environment override.
    pub fn output_dir_with(&self, env_override: Option<&str>) -> Option<PathBuf> {
        match env_override {
            Some(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
            _ => self.output_dir.clone(),
        }
    }

    pub fn report_input(&self) -> ReportInput {
        ReportInput {
            label: self.report.label.clone(),
            params: self.squeezing.clone(),
            measurement_freq_hz: self.measurement_freq_hz,
            squeezing_pump_w: self.report.squeezing_pump_w,
            bandwidth_pump_w: self.report.bandwidth_pump_w,
        }
    }

    pub fn lock_plant(&self) -> Result<LockPlant> {
        LockPlant::new(&self.crystal, self.squeezing.f0_hz)
    }
}
