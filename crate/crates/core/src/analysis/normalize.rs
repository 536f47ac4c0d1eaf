//! Shot-noise normalization with optional dark-noise subtraction.
//!
//! Traces are converted from dBm to linear power before any arithmetic;
//! the absolute dBm reference cancels in the ratio. Reference traces
//! (shot, dark) are linearly interpolated onto the signal's frequency grid.
//! A zero-span reference contributes its mean power at its one frequency.

use serde::{Deserialize, Serialize};

use super::trace::SpectrumTrace;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub frequency_hz: f64,
    /// Noise power in shot-noise units.
    pub relative_power: f64,
    pub dark_corrected: bool,
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Linear power of `trace` at `f`, without extrapolation.
fn reference_power(trace: &SpectrumTrace, f: f64, role: &str) -> Result<f64> {
    let pts = &trace.points;
    if trace.is_zero_span() || pts.len() == 1 {
        if pts[0].frequency_hz != f {
            return Err(Error::NoOverlap(format!(
                "{role} trace was taken at {} Hz, signal point at {f} Hz",
                pts[0].frequency_hz
            )));
        }
        let mean = pts.iter().map(|p| dbm_to_mw(p.power_dbm)).sum::<f64>() / pts.len() as f64;
        return Ok(mean);
    }
    let (first, last) = (pts[0].frequency_hz, pts[pts.len() - 1].frequency_hz);
    if f < first || f > last {
        return Err(Error::NoOverlap(format!(
            "{f} Hz lies outside the {role} trace span [{first}, {last}] Hz"
        )));
    }
    let i = pts.partition_point(|p| p.frequency_hz < f);
    if pts[i].frequency_hz == f {
        return Ok(dbm_to_mw(pts[i].power_dbm));
    }
    let (a, b) = (&pts[i - 1], &pts[i]);
    let w = (f - a.frequency_hz) / (b.frequency_hz - a.frequency_hz);
    Ok((1.0 - w) * dbm_to_mw(a.power_dbm) + w * dbm_to_mw(b.power_dbm))
}

/// Signal power divided by shot-noise power, point by point on the signal grid.
///
/// With `subtract_dark`, `R = (P_sig − P_dark) / (P_shot − P_dark)`.
pub fn normalize(
    signal: &SpectrumTrace,
    shot: &SpectrumTrace,
    dark: Option<&SpectrumTrace>,
    subtract_dark: bool,
) -> Result<Vec<NormalizedPoint>> {
    signal.validate()?;
    shot.validate()?;
    let dark = match (subtract_dark, dark) {
        (true, Some(d)) => {
            d.validate()?;
            Some(d)
        }
        (true, None) => {
            return Err(Error::invalid(
                "dark trace",
                "dark subtraction requested without a dark trace",
            ))
        }
        (false, _) => None,
    };

    signal
        .points
        .iter()
        .map(|p| {
            let f = p.frequency_hz;
            let sig = dbm_to_mw(p.power_dbm);
            let shot_p = reference_power(shot, f, "shot-noise")?;
            let relative_power = match dark {
                Some(d) => {
                    let dark_p = reference_power(d, f, "dark-noise")?;
                    if shot_p <= dark_p {
                        return Err(Error::Domain(format!(
                            "shot noise does not exceed dark noise at {f} Hz"
                        )));
                    }
                    (sig - dark_p) / (shot_p - dark_p)
                }
                None => sig / shot_p,
            };
            if !(relative_power > 0.0) {
                return Err(Error::Domain(format!(
                    "signal at {f} Hz is not above the dark noise"
                )));
            }
            Ok(NormalizedPoint {
                frequency_hz: f,
                relative_power,
                dark_corrected: dark.is_some(),
            })
        })
        .collect()
}

/// Inverse of [`normalize`]: absolute signal powers in dBm.
pub fn denormalize(
    points: &[NormalizedPoint],
    shot: &SpectrumTrace,
    dark: Option<&SpectrumTrace>,
) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let shot_p = reference_power(shot, p.frequency_hz, "shot-noise")?;
            let lin = match (p.dark_corrected, dark) {
                (true, Some(d)) => {
                    let dark_p = reference_power(d, p.frequency_hz, "dark-noise")?;
                    p.relative_power * (shot_p - dark_p) + dark_p
                }
                (true, None) => {
                    return Err(Error::invalid(
                        "dark trace",
                        "dark-corrected points need the dark trace",
                    ))
                }
                (false, _) => p.relative_power * shot_p,
            };
            Ok(mw_to_dbm(lin))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::trace::TracePoint;
    use proptest::prelude::*;

    fn trace(points: &[(f64, f64)]) -> SpectrumTrace {
        SpectrumTrace::new(
            points
                .iter()
                .map(|&(f, p)| TracePoint {
                    frequency_hz: f,
                    power_dbm: p,
                })
                .collect(),
            30e3,
            300.0,
            "t",
        )
        .unwrap()
    }

    #[test]
    fn identical_traces_give_unity() {
        let s = trace(&[(1e6, -80.0), (2e6, -81.0), (3e6, -79.0)]);
        let pts = normalize(&s, &s, None, false).unwrap();
        assert!(pts
            .iter()
            .all(|p| (p.relative_power - 1.0).abs() < 1e-12 && !p.dark_corrected));
    }

    #[test]
    fn dark_subtraction_example() {
        // Signal 8 dB under shot noise, dark noise 23 dB under shot noise.
        let shot = trace(&[(2e6, -70.0)]);
        let sig = trace(&[(2e6, -78.0)]);
        let dark = trace(&[(2e6, -93.0)]);
        let pts = normalize(&sig, &shot, Some(&dark), true).unwrap();
        let oracle = (10f64.powf(-0.8) - 10f64.powf(-2.3)) / (1.0 - 10f64.powf(-2.3));
        assert!((pts[0].relative_power - oracle).abs() < 1e-12);
        let db = 10.0 * pts[0].relative_power.log10();
        assert!((db + 8.12).abs() < 0.01, "{db}");
        let raw = normalize(&sig, &shot, Some(&dark), false).unwrap();
        assert!((10.0 * raw[0].relative_power.log10() + 8.0).abs() < 1e-9);
    }

    #[test]
    fn dark_equal_to_shot_is_rejected() {
        let shot = trace(&[(2e6, -70.0)]);
        let sig = trace(&[(2e6, -78.0)]);
        assert!(normalize(&sig, &shot, Some(&shot), true).is_err());
        assert!(normalize(&sig, &shot, None, true).is_err());
    }

    #[test]
    fn interpolates_reference_onto_signal_grid() {
        let shot = trace(&[(1e6, -70.0), (3e6, -70.0)]);
        let sig = trace(&[(1.5e6, -73.0), (2.5e6, -73.0)]);
        let pts = normalize(&sig, &shot, None, false).unwrap();
        for p in pts {
            assert!((10.0 * p.relative_power.log10() + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_extrapolation() {
        let shot = trace(&[(1e6, -70.0), (3e6, -70.0)]);
        let sig = trace(&[(0.5e6, -73.0), (2.5e6, -73.0)]);
        assert!(matches!(
            normalize(&sig, &shot, None, false),
            Err(Error::NoOverlap(_))
        ));
    }

    #[test]
    fn zero_span_reference_uses_mean_power() {
        let shot = trace(&[(2e6, -70.0), (2e6, -70.0), (2e6, -70.0)]);
        let sig = trace(&[(2e6, -78.0), (2e6, -77.0)]);
        let pts = normalize(&sig, &shot, None, false).unwrap();
        assert_eq!(pts.len(), 2);
        assert!((10.0 * pts[1].relative_power.log10() + 7.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn round_trip_and_dark_direction(
            shot_dbm in -90.0f64..-60.0,
            rel_db in prop::collection::vec(-12.0f64..20.0, 1..20),
            dark_below in 3.0f64..40.0,
        ) {
            let n = rel_db.len();
            let freqs: Vec<f64> = (0..n).map(|i| 1e6 + i as f64 * 1e5).collect();
            let shot = trace(&freqs.iter().map(|&f| (f, shot_dbm)).collect::<Vec<_>>());
            let dark = trace(&freqs.iter().map(|&f| (f, shot_dbm - dark_below)).collect::<Vec<_>>());
            // Keep the signal above the dark floor.
            let sig_pts: Vec<(f64, f64)> = freqs
                .iter()
                .zip(&rel_db)
                .map(|(&f, &r)| (f, shot_dbm + r.max(-dark_below + 0.5)))
                .collect();
            let sig = trace(&sig_pts);

            for use_dark in [false, true] {
                let pts = normalize(&sig, &shot, Some(&dark), use_dark).unwrap();
                let back = denormalize(&pts, &shot, Some(&dark)).unwrap();
                for (b, p) in back.iter().zip(&sig.points) {
                    let lin_b = 10f64.powf(b / 10.0);
                    let lin_p = 10f64.powf(p.power_dbm / 10.0);
                    prop_assert!(((lin_b - lin_p) / lin_p).abs() < 1e-9);
                }
            }

            let raw = normalize(&sig, &shot, None, false).unwrap();
            let corr = normalize(&sig, &shot, Some(&dark), true).unwrap();
            for (r, c) in raw.iter().zip(&corr) {
                if r.relative_power < 1.0 - 1e-12 {
                    prop_assert!(c.relative_power < r.relative_power);
                } else if r.relative_power > 1.0 + 1e-12 {
                    prop_assert!(c.relative_power > r.relative_power);
                }
            }
        }
    }
}
