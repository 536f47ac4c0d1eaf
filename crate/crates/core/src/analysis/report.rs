//! Side-by-side comparison of several OPOs in the layout of a device table:
//! coupler, threshold, squeezing and anti-squeezing at a fixed frequency, and
//! squeezing bandwidth, each with the pump power it was evaluated at.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::squeezing::{self, Quadrature, SqueezingParams};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportInput {
    pub label: String,
    pub params: SqueezingParams,
    pub measurement_freq_hz: f64,
    pub squeezing_pump_w: f64,
    pub bandwidth_pump_w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub output_coupler_t: f64,
    pub p_threshold_w: f64,
    pub measurement_freq_hz: f64,
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub squeezing_pump_w: f64,
    pub bandwidth_hz: f64,
    pub bandwidth_pump_w: f64,
    pub theta_tilde_deg: f64,
}

pub fn report_row(input: &ReportInput) -> Result<ReportRow> {
    let p = &input.params;
    p.validate()?;
    let x = squeezing::pump_to_x(input.squeezing_pump_w, p.p_threshold_w)?;
    let x_bw = squeezing::pump_to_x(input.bandwidth_pump_w, p.p_threshold_w)?;
    let f = input.measurement_freq_hz;
    Ok(ReportRow {
        label: input.label.clone(),
        output_coupler_t: p.oc_t,
        p_threshold_w: p.p_threshold_w,
        measurement_freq_hz: f,
        squeezing_db: squeezing::to_db(squeezing::variance_with_phase_noise(
            Quadrature::Squeezed,
            x,
            f,
            p,
        ))?,
        antisqueezing_db: squeezing::to_db(squeezing::variance_with_phase_noise(
            Quadrature::AntiSqueezed,
            x,
            f,
            p,
        ))?,
        squeezing_pump_w: input.squeezing_pump_w,
        bandwidth_hz: squeezing::squeezing_bandwidth(x_bw, p.f0_hz),
        bandwidth_pump_w: input.bandwidth_pump_w,
        theta_tilde_deg: p.theta_tilde_rad.to_degrees(),
    })
}

pub fn report_table(inputs: &[ReportInput]) -> Result<Vec<ReportRow>> {
    inputs.iter().map(report_row).collect()
}

const HEADER: [&str; 7] = [
    "label",
    "coupler_T_%",
    "threshold_mW",
    "squeezing_dB (pump mW)",
    "antisqueezing_dB (pump mW)",
    "bandwidth_MHz (pump mW)",
    "theta_deg",
];

/// Fixed-width text rendering, one line per OPO.
pub fn render_report(rows: &[ReportRow]) -> String {
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                format!("{:.1}", r.output_coupler_t * 100.0),
                format!("{:.0}", r.p_threshold_w * 1e3),
                format!("{:.2} ({:.0})", r.squeezing_db, r.squeezing_pump_w * 1e3),
                format!(
                    "{:.2} ({:.0})",
                    r.antisqueezing_db,
                    r.squeezing_pump_w * 1e3
                ),
                format!(
                    "{:.1} ({:.0})",
                    r.bandwidth_hz / 1e6,
                    r.bandwidth_pump_w * 1e3
                ),
                format!("{:.2}", r.theta_tilde_deg),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..HEADER.len())
        .map(|i| {
            cells
                .iter()
                .map(|c| c[i].chars().count())
                .chain(std::iter::once(HEADER[i].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, items: &[&str]| {
        let padded: Vec<String> = items
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", padded.join(" | ").trim_end());
    };
    line(&mut out, &HEADER);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("-+-"));
    for c in &cells {
        let refs: Vec<&str> = c.iter().map(String::as_str).collect();
        line(&mut out, &refs);
    }
    out
}
