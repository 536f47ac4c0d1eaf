//! Thermo-optic refractive index of the nonlinear crystal along its Z (c) axis.
//!
//! Indices are linearized around the phase-matching temperature:
//! `n(T) = n0 + dn/dT · (T − T_ref)`. Anything that needs a different
//! dispersion law can implement [`IndexModel`] instead.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which of the two interacting waves an index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wave {
    Fundamental,
    SecondHarmonic,
}

/// Temperature-dependent refractive index.
pub trait IndexModel {
    fn index(&self, wave: Wave, temperature_c: f64) -> f64;
}

/// Geometry and thermo-optic data of a periodically poled crystal.
///
/// All quantities are SI except temperatures, which are in °C.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    pub length_m: f64,
    /// Vacuum wavelength of the fundamental.
    pub wavelength_m: f64,
    pub n0_fund: f64,
    pub n0_sh: f64,
    pub dn_dt_fund: f64,
    pub dn_dt_sh: f64,
    /// Temperature of exact phase matching.
    pub t_ref_c: f64,
    /// Stored for reference; the residual mismatch already accounts for poling.
    pub poling_period_m: f64,
}

impl CrystalSpec {
    /// 10 mm PPKTP crystal at 860 nm, phase matched near 40 °C.
    pub fn ppktp_860nm() -> Self {
        Self {
            length_m: 10e-3,
            wavelength_m: 860e-9,
            n0_fund: 1.84,
            n0_sh: 1.96,
            dn_dt_fund: 3.57e-5,
            dn_dt_sh: 5.10e-5,
            t_ref_c: 40.0,
            poling_period_m: 4.3e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(Error::invalid("crystal length", "must be positive"));
        }
        if !(self.wavelength_m > 0.0 && self.wavelength_m.is_finite()) {
            return Err(Error::invalid("wavelength", "must be positive"));
        }
        for (name, n) in [("n0_fund", self.n0_fund), ("n0_sh", self.n0_sh)] {
            if !(n > 1.0 && n < 3.0) {
                return Err(Error::invalid(name, format!("{n} is outside (1, 3)")));
            }
        }
        if !self.dn_dt_fund.is_finite() || !self.dn_dt_sh.is_finite() || !self.t_ref_c.is_finite() {
            return Err(Error::invalid(
                "thermo-optic coefficients",
                "must be finite",
            ));
        }
        if self.dn_dt_sh == self.dn_dt_fund {
            return Err(Error::invalid(
                "dn/dT",
                "fundamental and second-harmonic coefficients are equal",
            ));
        }
        Ok(())
    }

    fn n0(&self, wave: Wave) -> f64 {
        match wave {
            Wave::Fundamental => self.n0_fund,
            Wave::SecondHarmonic => self.n0_sh,
        }
    }

    pub fn dn_dt(&self, wave: Wave) -> f64 {
        match wave {
            Wave::Fundamental => self.dn_dt_fund,
            Wave::SecondHarmonic => self.dn_dt_sh,
        }
    }

    pub fn refractive_index(&self, wave: Wave, temperature_c: f64) -> f64 {
        self.n0(wave) + self.delta_n(wave, temperature_c)
    }

    /// Index deviation from the phase-matching point.
    pub fn delta_n(&self, wave: Wave, temperature_c: f64) -> f64 {
        self.dn_dt(wave) * (temperature_c - self.t_ref_c)
    }

    /// Longitudinal mode order `2 l n(T) / λ` of the fundamental; integer on resonance.
    pub fn mode_order(&self, temperature_c: f64) -> f64 {
        2.0 * self.length_m * self.refractive_index(Wave::Fundamental, temperature_c)
            / self.wavelength_m
    }

    /// Returns a copy whose fundamental index is nudged (by far less than any
    /// realistic tolerance) so that a cavity resonance sits exactly at
    /// `t_ref_c + offset_k`.
    ///
    /// Where the comb lands relative to the phase-matching peak is set by
    /// sub-ppm details of `n0_fund` and the length, so treating it as a free
    /// parameter is the honest option.
    pub fn with_comb_offset(&self, offset_k: f64) -> Self {
        let t = self.t_ref_c + offset_k;
        let m = self.mode_order(t).round();
        let n_needed = m * self.wavelength_m / (2.0 * self.length_m);
        let mut out = self.clone();
        out.n0_fund = n_needed - self.dn_dt_fund * offset_k;
        out
    }
}

impl Default for CrystalSpec {
    fn default() -> Self {
        Self::ppktp_860nm()
    }
}

impl IndexModel for CrystalSpec {
    fn index(&self, wave: Wave, temperature_c: f64) -> f64 {
        self.refractive_index(wave, temperature_c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn index_at_reference_is_n0() {
        let c = CrystalSpec::ppktp_860nm();
        assert_eq!(c.refractive_index(Wave::Fundamental, c.t_ref_c), c.n0_fund);
        assert_eq!(c.refractive_index(Wave::SecondHarmonic, c.t_ref_c), c.n0_sh);
    }

    #[test]
    fn index_examples() {
        let c = CrystalSpec::ppktp_860nm();
        assert_relative_eq!(
            c.refractive_index(Wave::Fundamental, c.t_ref_c + 10.0),
            1.840357,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            c.refractive_index(Wave::SecondHarmonic, c.t_ref_c + 1.0),
            c.n0_sh + 5.10e-5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn delta_n_examples() {
        let c = CrystalSpec::ppktp_860nm();
        assert_eq!(c.delta_n(Wave::Fundamental, c.t_ref_c), 0.0);
        assert_eq!(c.delta_n(Wave::SecondHarmonic, c.t_ref_c), 0.0);
        assert_relative_eq!(c.delta_n(Wave::Fundamental, c.t_ref_c + 1.0), 3.57e-5);
        assert_relative_eq!(
            c.delta_n(Wave::SecondHarmonic, c.t_ref_c - 2.0),
            -1.02e-4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rejects_equal_coefficients() {
        let mut c = CrystalSpec::ppktp_860nm();
        c.dn_dt_sh = c.dn_dt_fund;
        assert!(c.validate().is_err());
        let mut c = CrystalSpec::ppktp_860nm();
        c.n0_fund = 3.2;
        assert!(c.validate().is_err());
        let mut c = CrystalSpec::ppktp_860nm();
        c.length_m = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn comb_offset_places_a_resonance() {
        let c = CrystalSpec::ppktp_860nm();
        for offset in [-0.4, 0.0, 0.37, 0.6] {
            let shifted = c.with_comb_offset(offset);
            let order = shifted.mode_order(c.t_ref_c + offset);
            assert!((order - order.round()).abs() < 1e-9, "{offset}: {order}");
            assert!((shifted.n0_fund - c.n0_fund).abs() < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn delta_n_is_linear(dt in -50.0f64..50.0, a in -4.0f64..4.0) {
            let c = CrystalSpec::ppktp_860nm();
            for wave in [Wave::Fundamental, Wave::SecondHarmonic] {
                let one = c.delta_n(wave, c.t_ref_c + dt);
                let scaled = c.delta_n(wave, c.t_ref_c + a * dt);
                prop_assert!((scaled - a * one).abs() <= 1e-12 * (1.0 + one.abs()));
            }
        }

        #[test]
        fn delta_n_difference(t in -20.0f64..100.0) {
            let c = CrystalSpec::ppktp_860nm();
            let diff = c.delta_n(Wave::SecondHarmonic, t) - c.delta_n(Wave::Fundamental, t);
            let closed = (c.dn_dt_sh - c.dn_dt_fund) * (t - c.t_ref_c);
            prop_assert!((diff - closed).abs() <= 1e-18 + 1e-14 * closed.abs());
        }
    }
}
