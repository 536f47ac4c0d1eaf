//! Spectrum-analyzer traces.
//!
//! On disk a trace is plain text: `#`-prefixed metadata lines followed by
//! comma-separated `frequency_hz,power_dbm` rows.
//!
//! ```text
//! # rbw_hz=30000
//! # vbw_hz=300
//! # label=squeezing 130 mW
//! frequency_hz,power_dbm
//! 2000000,-80.5
//! ```
//!
//! `rbw_hz` and `vbw_hz` are required; `label` and `center_frequency_hz`
//! are optional. The column header line is optional on input.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TRACE_COLUMNS: &str = "frequency_hz,power_dbm";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub frequency_hz: f64,
    pub power_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub points: Vec<TracePoint>,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub label: String,
    pub center_frequency_hz: Option<f64>,
}

impl SpectrumTrace {
    pub fn new(
        points: Vec<TracePoint>,
        rbw_hz: f64,
        vbw_hz: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let trace = Self {
            points,
            rbw_hz,
            vbw_hz,
            label: label.into(),
            center_frequency_hz: None,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rbw_hz > 0.0) {
            return Err(Error::invalid("rbw_hz", "must be positive"));
        }
        if !(self.vbw_hz > 0.0) {
            return Err(Error::invalid("vbw_hz", "must be positive"));
        }
        if self.points.is_empty() {
            return Err(Error::invalid("points", "trace is empty"));
        }
        if !self.is_zero_span() {
            if let Some(i) = self
                .points
                .windows(2)
                .position(|w| w[1].frequency_hz <= w[0].frequency_hz)
            {
                return Err(Error::invalid(
                    "frequency_hz",
                    format!("not strictly increasing at point {}", i + 2),
                ));
            }
        }
        Ok(())
    }

    /// True when every point shares one frequency (a zero-span, time-domain record).
    pub fn is_zero_span(&self) -> bool {
        self.points.len() > 1
            && self
                .points
                .iter()
                .all(|p| p.frequency_hz == self.points[0].frequency_hz)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.frequency_hz)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# rbw_hz={}", self.rbw_hz)?;
        writeln!(out, "# vbw_hz={}", self.vbw_hz)?;
        writeln!(out, "# label={}", self.label)?;
        if let Some(c) = self.center_frequency_hz {
            writeln!(out, "# center_frequency_hz={c}")?;
        }
        writeln!(out, "{TRACE_COLUMNS}")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.frequency_hz, p.power_dbm)?;
        }
        Ok(())
    }
}

fn parse_number(value: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = value.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} `{}`", value.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what} is not finite"),
        });
    }
    Ok(v)
}

/// Reads a trace in the text format described in the module docs.
pub fn load_trace<R: BufRead>(source: R) -> Result<SpectrumTrace> {
    let mut rbw = None;
    let mut vbw = None;
    let mut label = String::new();
    let mut center = None;
    let mut points = Vec::new();
    let mut point_lines = Vec::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(meta) = text.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else {
                continue;
            };
            match key.trim() {
                "rbw_hz" => rbw = Some(parse_number(value, line_no, "rbw_hz")?),
                "vbw_hz" => vbw = Some(parse_number(value, line_no, "vbw_hz")?),
                "label" => label = value.trim().to_string(),
                "center_frequency_hz" => {
                    center = Some(parse_number(value, line_no, "center_frequency_hz")?)
                }
                _ => {}
            }
            continue;
        }
        if text == TRACE_COLUMNS {
            if !points.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "column header after data rows".into(),
                });
            }
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        points.push(TracePoint {
            frequency_hz: parse_number(fields[0], line_no, "frequency_hz")?,
            power_dbm: parse_number(fields[1], line_no, "power_dbm")?,
        });
        point_lines.push(line_no);
    }

    let rbw_hz = rbw.ok_or(Error::MissingHeader("rbw_hz"))?;
    let vbw_hz = vbw.ok_or(Error::MissingHeader("vbw_hz"))?;
    if points.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "trace has no data rows".into(),
        });
    }
    let trace = SpectrumTrace {
        points,
        rbw_hz,
        vbw_hz,
        label,
        center_frequency_hz: center,
    };
    if !trace.is_zero_span() {
        if let Some(i) = trace
            .points
            .windows(2)
            .position(|w| w[1].frequency_hz <= w[0].frequency_hz)
        {
            return Err(Error::Parse {
                line: point_lines[i + 1],
                message: "frequency is not strictly increasing".into(),
            });
        }
    }
    trace.validate()?;
    Ok(trace)
}
