use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use monopo_core::analysis::{self, FreeParam, ResidualMode};
use monopo_core::locksim::{self, NoiseConfig};
use monopo_core::{coresonance, squeezing, Error, ToolkitConfig};

use crate::fitdata;

const BUILTIN: [(&str, &str); 3] = [
    ("opo1", include_str!("../configs/opo1.toml")),
    ("opo2", include_str!("../configs/opo2.toml")),
    ("opo3", include_str!("../configs/opo3.toml")),
];

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_domain() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => f.write_str(msg),
            Failure::Core(e) => e.fmt(f),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

pub struct Context {
    configs: Vec<ToolkitConfig>,
    output_dir: Option<PathBuf>,
}

fn load_config(name: &str) -> Result<ToolkitConfig, Failure> {
    let path = Path::new(name);
    if path.exists() {
        return Ok(ToolkitConfig::load(path)?);
    }
    match BUILTIN.iter().find(|(n, _)| *n == name) {
        Some((_, text)) => Ok(ToolkitConfig::from_toml_str(text)?),
        None => Err(Failure::Usage(format!(
            "config `{name}` is neither a file nor a built-in (opo1, opo2, opo3)"
        ))),
    }
}

impl Context {
    pub fn new(names: &[String], output_dir: Option<PathBuf>) -> Result<Self, Failure> {
        let configs = names
            .iter()
            .map(|n| load_config(n))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            configs,
            output_dir,
        })
    }

    /// The one config of a single-device command; OPO No.1 when none is given.
    fn single(&self) -> Result<ToolkitConfig, Failure> {
        match self.configs.as_slice() {
            [] => load_config("opo1"),
            [c] => Ok(c.clone()),
            _ => Err(Failure::Usage(
                "this command takes a single --config".into(),
            )),
        }
    }

    fn output_dir(&self, config: &ToolkitConfig) -> Option<PathBuf> {
        self.output_dir
            .clone()
            .or_else(|| config.output_dir.clone())
    }

    /// Writes to `explicit`, else into the output directory as `name`, else to stdout.
    fn emit(
        &self,
        config: &ToolkitConfig,
        explicit: Option<PathBuf>,
        name: &str,
        content: &str,
    ) -> Result<(), Failure> {
        let target = explicit.or_else(|| self.output_dir(config).map(|d| d.join(name)));
        match target {
            Some(path) => {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)?;
                }
                std::fs::write(&path, content)?;
                eprintln!("wrote {}", path.display());
            }
            None => std::io::stdout().lock().write_all(content.as_bytes())?,
        }
        Ok(())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn scan(
    ctx: &Context,
    t_min: Option<f64>,
    t_max: Option<f64>,
    step: f64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = ctx.single()?;
    let t_ref = cfg.crystal.t_ref_c;
    let rows = coresonance::scan_table(
        &cfg.crystal,
        &cfg.cavity,
        t_min.unwrap_or(t_ref - 3.0),
        t_max.unwrap_or(t_ref + 3.0),
        step,
    )?;
    let mut csv = String::from("temperature_C,transmission,eta\n");
    for r in rows {
        writeln!(csv, "{},{},{}", r.temperature_c, r.transmission, r.eta).unwrap();
    }
    ctx.emit(&cfg, out, "scan.csv", &csv)
}

pub fn spectrum(
    ctx: &Context,
    pump_mw: Option<f64>,
    f_max_mhz: f64,
    points: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = ctx.single()?;
    if !(f_max_mhz > 0.0 && f_max_mhz.is_finite()) {
        return Err(usage("--f-max-mhz must be positive"));
    }
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let pump_w = pump_mw.map_or(cfg.report.squeezing_pump_w, |p| p * 1e-3);
    if pump_w.is_nan() || pump_w < 0.0 {
        return Err(usage("--pump-mw must be non-negative"));
    }
    let x = squeezing::pump_to_x(pump_w, cfg.squeezing.p_threshold_w)?;
    let mut freqs: Vec<f64> = (0..points)
        .map(|i| f_max_mhz * 1e6 * i as f64 / (points - 1) as f64)
        .collect();
    // Always include the measurement frequency as its own row.
    let fm = cfg.measurement_freq_hz;
    if fm <= f_max_mhz * 1e6 && !freqs.contains(&fm) {
        freqs.push(fm);
        freqs.sort_by(f64::total_cmp);
    }
    let rows = squeezing::spectrum(&cfg.squeezing, x, &freqs)?;
    let mut csv = String::from("freq_MHz,sq_dB,antisq_dB\n");
    for r in rows {
        writeln!(csv, "{},{},{}", r.freq_hz / 1e6, r.sq_db, r.antisq_db).unwrap();
    }
    ctx.emit(&cfg, out, "spectrum.csv", &csv)
}

pub fn sweep(
    ctx: &Context,
    powers_mw: Option<Vec<f64>>,
    freq_mhz: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = ctx.single()?;
    let p_th_mw = cfg.squeezing.p_threshold_w * 1e3;
    let powers_mw =
        powers_mw.unwrap_or_else(|| (0..=20).map(|i| 0.95 * p_th_mw * i as f64 / 20.0).collect());
    if powers_mw.is_empty() || powers_mw.iter().any(|p| p.is_nan() || *p < 0.0) {
        return Err(usage("--powers-mw needs non-negative values"));
    }
    let f = freq_mhz.map_or(cfg.measurement_freq_hz, |f| f * 1e6);
    let powers_w: Vec<f64> = powers_mw.iter().map(|p| p * 1e-3).collect();
    let rows = squeezing::pump_sweep(&cfg.squeezing, &powers_w, f)?;
    let mut csv = String::from("power_mW,x,sq_dB,antisq_dB\n");
    for (r, p) in rows.iter().zip(&powers_mw) {
        writeln!(csv, "{},{},{},{}", p, r.x, r.sq_db, r.antisq_db).unwrap();
    }
    ctx.emit(&cfg, out, "sweep.csv", &csv)
}

pub fn fit(
    ctx: &Context,
    data: &Path,
    free: &str,
    mode: ResidualMode,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = ctx.single()?;
    let free: Vec<FreeParam> = free
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let observations = fitdata::load(BufReader::new(File::open(data)?))?;
    let result = analysis::fit_model(&observations, &cfg.squeezing, &free, mode)?;
    let json = serde_json::to_string_pretty(&result).expect("fit result serializes");
    ctx.emit(&cfg, out, "fit.json", &(json + "\n"))
}

pub struct LocksimRequest {
    pub duration_s: Option<f64>,
    pub seed: Option<u64>,
    pub no_noise: bool,
    pub series: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

pub fn locksim(ctx: &Context, req: LocksimRequest) -> Result<(), Failure> {
    let cfg = ctx.single()?;
    let mut lock = cfg.lock.clone();
    if req.no_noise {
        lock.noise = NoiseConfig::none();
    }
    let plant = cfg.lock_plant()?;
    let run = locksim::simulate_lock(
        &plant,
        &lock,
        req.duration_s.unwrap_or(cfg.lock_duration_s),
        req.seed.unwrap_or(cfg.lock_seed),
    )?;

    let series_target = req
        .series
        .or_else(|| ctx.output_dir(&cfg).map(|d| d.join("locksim_series.csv")));
    if let Some(path) = series_target {
        let mut csv = String::from("time_s,temperature_C,detuning_Hz,phase_pp_rad,phase_plo_rad\n");
        for s in &run.samples {
            let st = &s.state;
            writeln!(
                csv,
                "{},{},{},{},{}",
                st.time_s,
                st.temperature_c,
                st.detuning_hz,
                st.relative_phase_pump_probe,
                st.relative_phase_probe_lo
            )
            .unwrap();
        }
        ctx.emit(&cfg, Some(path), "locksim_series.csv", &csv)?;
    }
    let json = serde_json::to_string_pretty(&run.summary).expect("summary serializes");
    ctx.emit(&cfg, req.summary, "locksim_summary.json", &(json + "\n"))
}

pub fn report(ctx: &Context, json: bool, out: Option<PathBuf>) -> Result<(), Failure> {
    let configs = if ctx.configs.is_empty() {
        BUILTIN
            .iter()
            .map(|(_, text)| ToolkitConfig::from_toml_str(text))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        ctx.configs.clone()
    };
    let inputs: Vec<_> = configs.iter().map(ToolkitConfig::report_input).collect();
    let rows = analysis::report_table(&inputs)?;
    let (text, name) = if json {
        (
            serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
            "report.json",
        )
    } else {
        (analysis::render_report(&rows), "report.txt")
    };
    ctx.emit(&configs[0], out, name, &text)
}

pub fn normalize(
    ctx: &Context,
    signal: &Path,
    shot: &Path,
    dark: Option<&Path>,
    subtract_dark: bool,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let cfg = ctx.single()?;
    let load = |p: &Path| -> Result<_, Failure> {
        Ok(analysis::load_trace(BufReader::new(File::open(p)?))?)
    };
    let signal = load(signal)?;
    let shot = load(shot)?;
    let dark = dark.map(load).transpose()?;
    let points = analysis::normalize(&signal, &shot, dark.as_ref(), subtract_dark)?;
    let mut csv = String::from("frequency_hz,relative_power,relative_dB\n");
    for p in points {
        writeln!(
            csv,
            "{},{},{}",
            p.frequency_hz,
            p.relative_power,
            10.0 * p.relative_power.log10()
        )
        .unwrap();
    }
    ctx.emit(&cfg, out, "normalized.csv", &csv)
}
