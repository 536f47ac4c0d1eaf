//! Measured quadrature levels for `monopo fit`.
//!
//! ```text
//! pump_mw,freq_hz,quadrature,level_db
//! 130,2000000,sq,-8.0
//! 130,2000000,antisq,13.9
//! ```
//!
//! `quadrature` is `sq` or `antisq`; `level_db` is relative to shot noise.
//! The header line and `#` comments are optional.

use std::io::BufRead;

use monopo_core::{Error, Observation, Quadrature, Result};

pub const COLUMNS: &str = "pump_mw,freq_hz,quadrature,level_db";

fn number(field: &str, line: usize, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("bad {what} `{}`", field.trim()),
        })
}

pub fn load<R: BufRead>(source: R) -> Result<Vec<Observation>> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') || text == COLUMNS {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 fields ({COLUMNS}), found {}", fields.len()),
            });
        }
        let quadrature = match fields[2].trim() {
            "sq" | "squeezed" => Quadrature::Squeezed,
            "antisq" | "anti_squeezed" => Quadrature::AntiSqueezed,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("quadrature must be `sq` or `antisq`, found `{other}`"),
                })
            }
        };
        let pump_mw = number(fields[0], line_no, "pump_mw")?;
        if pump_mw < 0.0 {
            return Err(Error::Parse {
                line: line_no,
                message: "pump_mw must be non-negative".into(),
            });
        }
        out.push(Observation {
            pump_power_w: pump_mw * 1e-3,
            frequency_hz: number(fields[1], line_no, "freq_hz")?,
            quadrature,
            variance: 10f64.powf(number(fields[3], line_no, "level_db")? / 10.0),
        });
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows() {
        let src =
            "# run 1\npump_mw,freq_hz,quadrature,level_db\n130,2e6,sq,-8\n130,2e6,antisq,13.9\n";
        let obs = load(src.as_bytes()).unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[0].quadrature, Quadrature::Squeezed);
        assert!((obs[0].pump_power_w - 0.13).abs() < 1e-15);
        assert!((obs[0].variance - 10f64.powf(-0.8)).abs() < 1e-15);
    }

    #[test]
    fn reports_bad_line() {
        match load("130,2e6,sq,-8\n130,2e6,both,1\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(load("130,2e6,sq\n".as_bytes()).is_err());
        assert!(load("".as_bytes()).is_err());
    }
}
