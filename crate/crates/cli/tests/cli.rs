use std::path::Path;
use std::process::{Command, Output};

use monopo_core::analysis::synthesize;
use monopo_core::squeezing::{self, Quadrature};
use monopo_core::SqueezingParams;

fn monopo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monopo"))
        .args(args)
        .env_remove("MONOPO_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Header plus numeric rows; panics on anything malformed.
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| {
            let row: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(row.len(), header.len(), "{l}");
            row
        })
        .collect();
    (header, rows)
}

#[test]
fn spectrum_headline_row() {
    let (header, rows) = parse_csv(&stdout(&monopo(&[
        "spectrum",
        "--pump-mw",
        "130",
        "--f-max-mhz",
        "50",
        "--points",
        "26",
    ])));
    assert_eq!(header, ["freq_MHz", "sq_dB", "antisq_dB"]);
    let row = rows.iter().find(|r| r[0] == 2.0).expect("2 MHz row");
    assert!((row[1] + 8.0).abs() < 0.15, "{}", row[1]);
    let min = rows.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[0][1], min);
}

#[test]
fn above_threshold_exits_3() {
    assert_eq!(
        monopo(&["spectrum", "--pump-mw", "300"]).status.code(),
        Some(3)
    );
    assert_eq!(
        monopo(&["sweep", "--powers-mw", "100,290"]).status.code(),
        Some(3)
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(monopo(&["scan", "--step", "0"]).status.code(), Some(2));
    assert_eq!(
        monopo(&["scan", "--t-min", "45", "--t-max", "35"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        monopo(&["--config", "no-such-config", "scan"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        monopo(&["report", "--format", "xml"]).status.code(),
        Some(2)
    );
    assert_eq!(
        monopo(&["--config", "opo1", "--config", "opo2", "spectrum"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[cavity]\noutput_coupler = 0.1\n").unwrap();
    let out = monopo(&["--config", path.to_str().unwrap(), "scan"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("output_coupler"));
}

#[test]
fn scan_comb_and_efficiency() {
    let (header, rows) = parse_csv(&stdout(&monopo(&[
        "scan", "--t-min", "36", "--t-max", "44", "--step", "0.0005",
    ])));
    assert_eq!(header, ["temperature_C", "transmission", "eta"]);
    let eta_max = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    assert!((eta_max - 1.0).abs() < 1e-6);
    let peaks: Vec<f64> = rows
        .windows(3)
        .filter(|w| w[1][1] > w[0][1] && w[1][1] >= w[2][1] && w[1][1] > 0.5)
        .map(|w| w[1][0])
        .collect();
    assert!(peaks.len() >= 6);
    for pair in peaks.windows(2) {
        assert!((pair[1] - pair[0] - 1.204).abs() < 0.002, "{pair:?}");
    }
}

#[test]
fn sweep_rows() {
    let (header, rows) = parse_csv(&stdout(&monopo(&[
        "sweep",
        "--powers-mw",
        "0,20,50,100,130,200,250",
    ])));
    assert_eq!(header, ["power_mW", "x", "sq_dB", "antisq_dB"]);
    assert!(rows[0][2].abs() < 1e-12 && rows[0][3].abs() < 1e-12);
    let r130 = rows.iter().find(|r| r[0] == 130.0).unwrap();
    assert!((r130[2] + 8.0).abs() < 0.15);
    for w in rows.windows(2) {
        assert!(w[1][3] > w[0][3]);
    }
}

fn write_fit_data(path: &Path, params: &SqueezingParams) {
    let powers: Vec<f64> = (1..=10).map(|i| 0.025 * i as f64).collect();
    let obs = synthesize(params, &powers, 2e6).unwrap();
    let mut text = String::from("pump_mw,freq_hz,quadrature,level_db\n");
    for o in obs {
        let q = match o.quadrature {
            Quadrature::Squeezed => "sq",
            Quadrature::AntiSqueezed => "antisq",
        };
        text += &format!(
            "{},{},{},{}\n",
            o.pump_power_w * 1e3,
            o.frequency_hz,
            q,
            10.0 * o.variance.log10()
        );
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_theta() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let mut truth = SqueezingParams::opo1();
    truth.kappa = squeezing::propagation_efficiency(0.986, 0.998, 0.998).unwrap();
    write_fit_data(&data, &truth);
    let out = stdout(&monopo(&["fit", "--data", data.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let deg = v["theta_tilde_deg"].as_f64().unwrap();
    assert!((deg - 2.0).abs() < 0.01, "{deg}");
    assert_eq!(v["converged"], true);
}

#[test]
fn fit_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "pump_mw,freq_hz,quadrature,level_db\n130,2e6,sq\n").unwrap();
    assert_eq!(
        monopo(&["fit", "--data", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let good = dir.path().join("good.csv");
    write_fit_data(&good, &SqueezingParams::opo1());
    assert_eq!(
        monopo(&["fit", "--data", good.to_str().unwrap(), "--free", ""])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        monopo(&["fit", "--data", good.to_str().unwrap(), "--free", "gain"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn locksim_is_reproducible_and_reports_theta() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    let args = [
        "locksim",
        "--duration-s",
        "12",
        "--seed",
        "7",
        "--series",
        series.to_str().unwrap(),
    ];
    let a = stdout(&monopo(&args));
    let csv_a = std::fs::read_to_string(&series).unwrap();
    let b = stdout(&monopo(&args));
    let csv_b = std::fs::read_to_string(&series).unwrap();
    assert_eq!(a, b);
    assert_eq!(csv_a, csv_b);

    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["acquired"], true);
    let deg = v["theta_tilde_deg"].as_f64().unwrap();
    assert!(deg > 0.5 && deg < 5.0, "{deg}");

    let (header, rows) = parse_csv(&csv_a);
    assert_eq!(
        header,
        [
            "time_s",
            "temperature_C",
            "detuning_Hz",
            "phase_pp_rad",
            "phase_plo_rad"
        ]
    );
    assert!(rows.len() > 1000);
}

#[test]
fn locksim_without_noise_acquires() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&monopo(&[
        "locksim",
        "--duration-s",
        "12",
        "--no-noise",
    ])))
    .unwrap();
    assert_eq!(v["acquired"], true);
    assert!(v["theta_tilde_rad"].as_f64().unwrap() < 1e-3);
}

#[test]
fn report_three_devices() {
    let text = stdout(&monopo(&["report"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    let json = stdout(&monopo(&["report", "--format", "json"]));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    let thresholds: Vec<f64> = rows
        .iter()
        .map(|r| r["p_threshold_w"].as_f64().unwrap() * 1e3)
        .collect();
    for (t, want) in thresholds.iter().zip([283.0, 92.0, 29.0]) {
        assert!((t - want).abs() < 1e-9);
    }
    for (r, (f0, pump, p_th)) in rows.iter().zip([
        (82e6, 0.130f64, 0.283),
        (55e6, 0.050, 0.092),
        (29e6, 0.015, 0.029),
    ]) {
        let x: f64 = (pump / p_th).sqrt();
        let bw = r["bandwidth_hz"].as_f64().unwrap();
        assert!((bw - (1.0 + x) * f0).abs() < 1e-3, "{bw}");
    }
}

#[test]
fn report_single_device() {
    let json = stdout(&monopo(&["--config", "opo3", "report", "--format", "json"]));
    let rows: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["label"], "No.3");
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_monopo"))
        .args(["sweep", "--powers-mw", "0,130"])
        .env("MONOPO_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let (_, rows) = parse_csv(&std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap());
    assert_eq!(rows.len(), 2);
}

#[test]
fn normalize_traces() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, level: f64| {
        let p = dir.path().join(name);
        let mut text = String::from("# rbw_hz=30000\n# vbw_hz=300\nfrequency_hz,power_dbm\n");
        for i in 0..5 {
            text += &format!("{},{}\n", 1e6 + i as f64 * 5e5, level);
        }
        std::fs::write(&p, text).unwrap();
        p
    };
    let sig = write("sig.txt", -78.0);
    let shot = write("shot.txt", -70.0);
    let dark = write("dark.txt", -93.0);
    let out = stdout(&monopo(&[
        "normalize",
        "--signal",
        sig.to_str().unwrap(),
        "--shot",
        shot.to_str().unwrap(),
        "--dark",
        dark.to_str().unwrap(),
        "--subtract-dark",
    ]));
    let (header, rows) = parse_csv(&out);
    assert_eq!(header, ["frequency_hz", "relative_power", "relative_dB"]);
    for r in rows {
        assert!((r[2] + 8.12).abs() < 0.01, "{}", r[2]);
    }
}
