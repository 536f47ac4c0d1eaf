//! Resonances of the monolithic cavity formed by the crystal's coated end faces.
//!
//! The cavity resonates whenever `2 l n(T) = m λ`. Scanning the crystal
//! temperature therefore sweeps a comb of resonances whose spacing in
//! temperature is [`fsr_temperature`]. Linewidths use the high-finesse
//! approximation `F ≈ 2π / (T + L)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::{CrystalSpec, IndexModel, Wave};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Mirror and loss budget of the cavity, all as power fractions per pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub output_coupler_t: f64,
    pub intra_cavity_loss: f64,
    /// Residual transmittance of the high reflector.
    #[serde(default)]
    pub hr_transmittance: f64,
}

impl CavitySpec {
    pub fn new(output_coupler_t: f64, intra_cavity_loss: f64) -> Self {
        Self {
            output_coupler_t,
            intra_cavity_loss,
            hr_transmittance: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.output_coupler_t;
        let l = self.intra_cavity_loss;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::invalid(
                "output coupler transmittance",
                format!("{t} not in (0, 1)"),
            ));
        }
        if !(0.0..1.0).contains(&l) {
            return Err(Error::invalid(
                "intra-cavity loss",
                format!("{l} not in [0, 1)"),
            ));
        }
        if t + l >= 1.0 {
            return Err(Error::invalid("cavity losses", "T + L must stay below 1"));
        }
        if !(0.0..1.0).contains(&self.hr_transmittance) {
            return Err(Error::invalid(
                "high-reflector transmittance",
                "not in [0, 1)",
            ));
        }
        Ok(())
    }

    /// Total round-trip power loss used by the linewidth formulas.
    pub fn round_trip_loss(&self) -> f64 {
        self.output_coupler_t + self.intra_cavity_loss + self.hr_transmittance
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonancePoint {
    pub temperature_c: f64,
    pub mode_index: i64,
}

/// Temperature change that moves the comb by one free spectral range, in kelvin.
pub fn fsr_temperature(crystal: &CrystalSpec) -> Result<f64> {
    if crystal.dn_dt_fund == 0.0 {
        return Err(Error::invalid(
            "dn/dT (fundamental)",
            "zero coefficient gives no temperature tuning",
        ));
    }
    Ok(crystal.wavelength_m / (2.0 * crystal.length_m * crystal.dn_dt_fund.abs()))
}

/// Free spectral range `c / (2 n l)` in hertz, at the reference temperature.
pub fn fsr_frequency(crystal: &CrystalSpec) -> f64 {
    SPEED_OF_LIGHT / (2.0 * crystal.n0_fund * crystal.length_m)
}

/// Cavity half width at half maximum in hertz.
pub fn cavity_hwhm(crystal: &CrystalSpec, cavity: &CavitySpec) -> f64 {
    fsr_frequency(crystal) * cavity.round_trip_loss() / (4.0 * PI)
}

/// Full width at half maximum of a resonance, expressed in crystal temperature.
pub fn temperature_linewidth(crystal: &CrystalSpec, cavity: &CavitySpec) -> Result<f64> {
    Ok(fsr_temperature(crystal)? * cavity.round_trip_loss() / (2.0 * PI))
}

/// Resonance frequency shift per kelvin, `fsr_frequency / fsr_temperature`.
pub fn detuning_per_kelvin(crystal: &CrystalSpec) -> Result<f64> {
    Ok(fsr_frequency(crystal) / fsr_temperature(crystal)?)
}

/// Fraction of intra-cavity light leaving through the output coupler, `T / (T + L)`.
pub fn escape_efficiency(cavity: &CavitySpec) -> Result<f64> {
    let t = cavity.output_coupler_t;
    if !(t > 0.0) {
        return Err(Error::invalid(
            "output coupler transmittance",
            "must be positive",
        ));
    }
    Ok(t / (t + cavity.intra_cavity_loss))
}

/// All resonances with `t_lo ≤ T ≤ t_hi`, sorted by temperature.
///
/// Closed form for the linear index model: the mode order is linear in T.
pub fn resonance_temperatures(
    crystal: &CrystalSpec,
    t_lo: f64,
    t_hi: f64,
) -> Result<Vec<ResonancePoint>> {
    check_range(t_lo, t_hi)?;
    let fsr = fsr_temperature(crystal)?;
    let m_ref = crystal.mode_order(crystal.t_ref_c);
    // Signed temperature step per unit of mode order.
    let step = fsr * crystal.dn_dt_fund.signum();
    let (a, b) = (crystal.mode_order(t_lo), crystal.mode_order(t_hi));
    let (m_min, m_max) = (a.min(b).ceil() as i64, a.max(b).floor() as i64);

    let mut points: Vec<ResonancePoint> = (m_min..=m_max)
        .map(|m| ResonancePoint {
            temperature_c: crystal.t_ref_c + (m as f64 - m_ref) * step,
            mode_index: m,
        })
        .filter(|p| p.temperature_c >= t_lo && p.temperature_c <= t_hi)
        .collect();
    points.sort_by(|p, q| p.temperature_c.total_cmp(&q.temperature_c));
    Ok(points)
}

/// Tolerance of [`resonance_temperatures_with`] in kelvin.
pub const RESONANCE_TOLERANCE_K: f64 = 1e-6;

/// Resonances for an arbitrary index model, found by bracketing integer
/// crossings of the mode order on a uniform grid and refining by bisection.
///
/// `grid_points` must be large enough that the mode order is monotone
/// between neighbouring grid points.
pub fn resonance_temperatures_with<M: IndexModel + ?Sized>(
    model: &M,
    length_m: f64,
    wavelength_m: f64,
    t_lo: f64,
    t_hi: f64,
    grid_points: usize,
) -> Result<Vec<ResonancePoint>> {
    check_range(t_lo, t_hi)?;
    let order = |t: f64| 2.0 * length_m * model.index(Wave::Fundamental, t) / wavelength_m;
    let n = grid_points.max(2);
    let mut points = Vec::new();
    let mut t_prev = t_lo;
    let mut o_prev = order(t_lo);
    if o_prev == o_prev.round() {
        points.push(ResonancePoint {
            temperature_c: t_lo,
            mode_index: o_prev as i64,
        });
    }
    for i in 1..n {
        let t = t_lo + (t_hi - t_lo) * i as f64 / (n - 1) as f64;
        let o = order(t);
        let (lo_o, hi_o) = (o_prev.min(o), o_prev.max(o));
        // Integers in (lo_o, hi_o], so a crossing exactly on a grid node is
        // counted once.
        let first = if o_prev < o {
            lo_o.floor() as i64 + 1
        } else {
            lo_o.ceil() as i64
        };
        let last = if o_prev < o {
            hi_o.floor() as i64
        } else {
            hi_o.ceil() as i64 - 1
        };
        for m in first..=last {
            let target = m as f64;
            let (mut a, mut b) = (t_prev, t);
            let increasing = o > o_prev;
            while b - a > RESONANCE_TOLERANCE_K * 0.5 {
                let mid = 0.5 * (a + b);
                if (order(mid) < target) == increasing {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            points.push(ResonancePoint {
                temperature_c: 0.5 * (a + b),
                mode_index: m,
            });
        }
        t_prev = t;
        o_prev = o;
    }
    points.sort_by(|p, q| p.temperature_c.total_cmp(&q.temperature_c));
    Ok(points)
}

fn check_range(t_lo: f64, t_hi: f64) -> Result<()> {
    if !(t_lo.is_finite() && t_hi.is_finite()) || t_lo > t_hi {
        return Err(Error::invalid(
            "temperature range",
            format!("[{t_lo}, {t_hi}] is not an ordered finite interval"),
        ));
    }
    Ok(())
}

/// Round-trip phase `4π l n(T) / λ` of the fundamental.
pub fn round_trip_phase(crystal: &CrystalSpec, temperature_c: f64) -> f64 {
    2.0 * PI * crystal.mode_order(temperature_c)
}

/// Airy transmission normalized to unit peak.
pub fn transmission(crystal: &CrystalSpec, cavity: &CavitySpec, temperature_c: f64) -> f64 {
    let r = ((1.0 - cavity.output_coupler_t)
        * (1.0 - cavity.intra_cavity_loss)
        * (1.0 - cavity.hr_transmittance))
        .sqrt();
    // Reduce the order to its fractional part before taking the phase so
    // that the ~1e5 rad round-trip phase does not eat precision.
    let order = crystal.mode_order(temperature_c);
    let half_phase = PI * (order - order.round());
    let coeff = 4.0 * r / ((1.0 - r) * (1.0 - r));
    1.0 / (1.0 + coeff * half_phase.sin().powi(2))
}

pub fn transmission_profile(
    crystal: &CrystalSpec,
    cavity: &CavitySpec,
    temperatures_c: &[f64],
) -> Vec<f64> {
    temperatures_c
        .iter()
        .map(|&t| transmission(crystal, cavity, t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn no1() -> CavitySpec {
        CavitySpec::new(0.118, 0.008)
    }

    #[test]
    fn fsr_temperature_examples() {
        let c = CrystalSpec::ppktp_860nm();
        let fsr = fsr_temperature(&c).unwrap();
        assert_relative_eq!(fsr, 1.204, epsilon = 1e-3);
        let mut long = c.clone();
        long.length_m *= 2.0;
        assert_relative_eq!(
            fsr_temperature(&long).unwrap(),
            fsr / 2.0,
            max_relative = 1e-14
        );
        let mut steep = c.clone();
        steep.dn_dt_fund *= 2.0;
        assert_relative_eq!(fsr_temperature(&steep).unwrap(), 0.602, epsilon = 1e-3);
        let mut flat = c;
        flat.dn_dt_fund = 0.0;
        assert!(fsr_temperature(&flat).is_err());
    }

    #[test]
    fn fsr_frequency_examples() {
        let mut c = CrystalSpec::ppktp_860nm();
        assert_relative_eq!(fsr_frequency(&c), 8.147e9, max_relative = 1e-4);
        c.length_m = 20e-3;
        assert_relative_eq!(fsr_frequency(&c), 4.073e9, max_relative = 1e-4);
        c.length_m = 10e-3;
        c.n0_fund = 1.0;
        assert_relative_eq!(fsr_frequency(&c), 14.99e9, max_relative = 1e-3);
    }

    #[test]
    fn linewidth_examples() {
        let c = CrystalSpec::ppktp_860nm();
        assert_relative_eq!(cavity_hwhm(&c, &no1()), 81.7e6, max_relative = 1e-3);
        assert_relative_eq!(
            cavity_hwhm(&c, &CavitySpec::new(0.082, 0.008)),
            58.35e6,
            max_relative = 1e-3
        );
        assert_eq!(cavity_hwhm(&c, &CavitySpec::new(0.0, 0.0)), 0.0);

        assert_relative_eq!(
            temperature_linewidth(&c, &no1()).unwrap(),
            0.02415,
            epsilon = 1e-4
        );
        assert_relative_eq!(
            temperature_linewidth(&c, &CavitySpec::new(0.044, 0.008)).unwrap(),
            0.0100,
            epsilon = 1e-4
        );
        let hwhm_fraction = cavity_hwhm(&c, &no1()) / fsr_frequency(&c);
        let temp_fraction =
            temperature_linewidth(&c, &no1()).unwrap() / 2.0 / fsr_temperature(&c).unwrap();
        assert_relative_eq!(hwhm_fraction, temp_fraction, max_relative = 1e-12);
    }

    #[test]
    fn escape_efficiency_examples() {
        assert_relative_eq!(escape_efficiency(&no1()).unwrap(), 0.9365, epsilon = 1e-4);
        assert_eq!(escape_efficiency(&CavitySpec::new(0.05, 0.0)).unwrap(), 1.0);
        assert_relative_eq!(
            escape_efficiency(&CavitySpec::new(0.082, 0.008)).unwrap(),
            0.9111,
            epsilon = 1e-4
        );
        assert!(escape_efficiency(&CavitySpec::new(0.0, 0.008)).is_err());
    }

    #[test]
    fn cavity_validation() {
        assert!(no1().validate().is_ok());
        assert!(CavitySpec::new(1.0, 0.0).validate().is_err());
        assert!(CavitySpec::new(0.6, 0.5).validate().is_err());
        assert!(CavitySpec::new(0.1, -0.1).validate().is_err());
    }

    #[test]
    fn comb_is_uniform() {
        let c = CrystalSpec::ppktp_860nm();
        let fsr = fsr_temperature(&c).unwrap();
        let pts = resonance_temperatures(&c, 38.5, 41.5).unwrap();
        assert!((2..=3).contains(&pts.len()));
        let pts = resonance_temperatures(&c, 20.0, 60.0).unwrap();
        for w in pts.windows(2) {
            let gap = w[1].temperature_c - w[0].temperature_c;
            assert!(((gap - fsr) / fsr).abs() < 1e-9, "{gap}");
            assert_eq!(w[1].mode_index, w[0].mode_index + 1);
        }
        for p in &pts {
            let order = c.mode_order(p.temperature_c);
            assert!((order - p.mode_index as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn comb_with_negative_dn_dt() {
        let mut c = CrystalSpec::ppktp_860nm();
        c.dn_dt_fund = -3.57e-5;
        let pts = resonance_temperatures(&c, 35.0, 45.0).unwrap();
        assert!(pts.len() >= 8);
        assert!(pts
            .windows(2)
            .all(|w| w[0].temperature_c < w[1].temperature_c));
        assert!(pts
            .windows(2)
            .all(|w| w[1].mode_index == w[0].mode_index - 1));
    }

    #[test]
    fn degenerate_ranges() {
        let c = CrystalSpec::ppktp_860nm();
        assert!(resonance_temperatures(&c, 40.0, 40.0).unwrap().len() <= 1);
        let aligned = c.with_comb_offset(0.0);
        let at = resonance_temperatures(&aligned, 40.0, 40.0).unwrap();
        assert!(at.len() <= 1);
        assert!(resonance_temperatures(&c, 41.0, 40.0).is_err());
        // Window narrower than one FSR between two resonances.
        let r = resonance_temperatures(&aligned, 40.1, 40.9).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn phase_matching_window_holds_two_resonances() {
        let c = CrystalSpec::ppktp_860nm();
        let hm = crate::phasematch::phase_matching_width(
            &c,
            crate::phasematch::WidthCriterion::HalfMax,
            false,
        )
        .unwrap();
        for offset in [0.0, 0.2, 0.45, 0.6, 0.9, 1.1] {
            let shifted = c.with_comb_offset(offset);
            let pts = resonance_temperatures(&shifted, c.t_ref_c - hm / 2.0, c.t_ref_c + hm / 2.0)
                .unwrap();
            assert!(pts.len() >= 2, "offset {offset}");
        }
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        let c = CrystalSpec::ppktp_860nm();
        // 50 °C sits on a resonance to within rounding; keep the ends clear.
        let closed = resonance_temperatures(&c, 30.3, 50.3).unwrap();
        let numeric =
            resonance_temperatures_with(&c, c.length_m, c.wavelength_m, 30.3, 50.3, 4001).unwrap();
        assert_eq!(closed.len(), numeric.len());
        for (a, b) in closed.iter().zip(&numeric) {
            assert_eq!(a.mode_index, b.mode_index);
            assert!((a.temperature_c - b.temperature_c).abs() < RESONANCE_TOLERANCE_K);
        }
    }

    struct Quadratic;
    impl IndexModel for Quadratic {
        fn index(&self, _: Wave, t: f64) -> f64 {
            1.84 + 3.0e-5 * (t - 40.0) + 2.0e-7 * (t - 40.0).powi(2)
        }
    }

    #[test]
    fn bisection_handles_nonlinear_model() {
        let pts = resonance_temperatures_with(&Quadratic, 10e-3, 860e-9, 30.0, 60.0, 2001).unwrap();
        assert!(pts.len() > 10);
        for p in &pts {
            let order = 2.0 * 10e-3 * Quadratic.index(Wave::Fundamental, p.temperature_c) / 860e-9;
            // One tolerance step in temperature moves the order by ~1e-6 * dorder/dT.
            assert!((order - p.mode_index as f64).abs() < 1e-3);
        }
        // The comb tightens as dn/dT grows.
        let first = pts[1].temperature_c - pts[0].temperature_c;
        let last = pts[pts.len() - 1].temperature_c - pts[pts.len() - 2].temperature_c;
        assert!(last < first);
    }

    #[test]
    fn transmission_peaks_and_troughs() {
        let c = CrystalSpec::ppktp_860nm();
        let cav = no1();
        let fsr = fsr_temperature(&c).unwrap();
        let pts = resonance_temperatures(&c, 38.0, 42.0).unwrap();
        for p in &pts {
            assert_relative_eq!(transmission(&c, &cav, p.temperature_c), 1.0, epsilon = 1e-9);
        }
        let mid = pts[0].temperature_c + fsr / 2.0;
        let trough = transmission(&c, &cav, mid);
        let tl = cav.round_trip_loss();
        assert!(trough < 0.01);
        let r = ((1.0 - cav.output_coupler_t) * (1.0 - cav.intra_cavity_loss)).sqrt();
        assert_relative_eq!(trough, ((1.0 - r) / (1.0 + r)).powi(2), max_relative = 1e-9);
        assert_relative_eq!(trough, tl * tl / 16.0, max_relative = 0.15);
    }

    #[test]
    fn transmission_maxima_match_resonances() {
        let c = CrystalSpec::ppktp_860nm();
        let cav = no1();
        let step = 1e-5;
        let temps: Vec<f64> = (0..=400_000).map(|i| 38.0 + i as f64 * step).collect();
        let prof = transmission_profile(&c, &cav, &temps);
        let maxima: Vec<f64> = (1..prof.len() - 1)
            .filter(|&i| prof[i] > prof[i - 1] && prof[i] >= prof[i + 1] && prof[i] > 0.5)
            .map(|i| temps[i])
            .collect();
        let res = resonance_temperatures(&c, 38.0, 42.0).unwrap();
        assert_eq!(maxima.len(), res.len());
        for (m, r) in maxima.iter().zip(&res) {
            assert!((m - r.temperature_c).abs() <= step);
        }
        let fsr = fsr_temperature(&c).unwrap();
        for w in maxima.windows(2) {
            assert!((w[1] - w[0] - fsr).abs() <= 2.0 * step);
        }
    }

    proptest! {
        #[test]
        fn escape_efficiency_monotone(t in 0.01f64..0.5, l in 0.0f64..0.3, d in 1e-4f64..0.1) {
            prop_assume!(t + l + d < 1.0);
            let base = escape_efficiency(&CavitySpec::new(t, l)).unwrap();
            prop_assert!(escape_efficiency(&CavitySpec::new(t, l + d)).unwrap() < base);
            prop_assert!(escape_efficiency(&CavitySpec::new(t + d, l)).unwrap() > base || l == 0.0);
        }
    }
}
