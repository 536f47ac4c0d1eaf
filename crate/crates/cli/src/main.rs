//! `monopo`: command-line front end for the monolithic OPO toolkit.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 when
//! the request is well formed but physically out of range (for example a
//! pump above threshold).

mod commands;
mod fitdata;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "monopo",
    version,
    about = "Design and analysis tools for monolithic OPO squeezers"
)]
struct Cli {
    /// Config file path or built-in name (opo1, opo2, opo3). `report` accepts several.
    #[arg(long, global = true)]
    config: Vec<String>,

    /// Overrides `output_dir` from the config.
    #[arg(long, global = true, env = monopo_core::config::OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cavity transmission and phase-matching efficiency versus temperature.
    Scan(ScanArgs),
    /// Squeezing and anti-squeezing versus measurement frequency.
    Spectrum(SpectrumArgs),
    /// Squeezing and anti-squeezing versus pump power.
    Sweep(SweepArgs),
    /// Fit the noise model to measured quadrature levels.
    Fit(FitArgs),
    /// Simulate the cavity / pump-probe / LO lock cascade.
    Locksim(LocksimArgs),
    /// Side-by-side table of one or more OPO configs.
    Report(ReportArgs),
    /// Shot-noise normalize a spectrum-analyzer trace.
    Normalize(NormalizeArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write the table here instead of stdout or the output directory.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 0.001)]
    step: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Pump power; defaults to the config's squeezing pump.
    #[arg(long)]
    pump_mw: Option<f64>,
    #[arg(long, default_value_t = 200.0)]
    f_max_mhz: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated pump powers; defaults to 20 steps up to 95 % of threshold.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    powers_mw: Option<Vec<f64>>,
    /// Measurement frequency; defaults to the config's.
    #[arg(long)]
    freq_mhz: Option<f64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Residual {
    Db,
    Linear,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV with columns pump_mw,freq_hz,quadrature,level_db.
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated free parameters: theta, p_th, loss.
    #[arg(long, default_value = "theta")]
    free: String,
    #[arg(long, value_enum, default_value_t = Residual::Db)]
    residual: Residual,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct LocksimArgs {
    #[arg(long)]
    duration_s: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Turn off all sensor noise.
    #[arg(long)]
    no_noise: bool,
    /// Time-series CSV destination.
    #[arg(long)]
    series: Option<PathBuf>,
    /// Summary JSON destination (stdout otherwise).
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct NormalizeArgs {
    #[arg(long)]
    signal: PathBuf,
    #[arg(long)]
    shot: PathBuf,
    #[arg(long)]
    dark: Option<PathBuf>,
    #[arg(long)]
    subtract_dark: bool,
    #[command(flatten)]
    out: Output,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = commands::Context::new(&cli.config, cli.output_dir)?;
    match cli.command {
        Command::Scan(a) => commands::scan(&ctx, a.t_min, a.t_max, a.step, a.out.output),
        Command::Spectrum(a) => {
            commands::spectrum(&ctx, a.pump_mw, a.f_max_mhz, a.points, a.out.output)
        }
        Command::Sweep(a) => commands::sweep(&ctx, a.powers_mw, a.freq_mhz, a.out.output),
        Command::Fit(a) => {
            let mode = match a.residual {
                Residual::Db => monopo_core::analysis::ResidualMode::Db,
                Residual::Linear => monopo_core::analysis::ResidualMode::Linear,
            };
            commands::fit(&ctx, &a.data, &a.free, mode, a.out.output)
        }
        Command::Locksim(a) => commands::locksim(
            &ctx,
            commands::LocksimRequest {
                duration_s: a.duration_s,
                seed: a.seed,
                no_noise: a.no_noise,
                series: a.series,
                summary: a.out.output,
            },
        ),
        Command::Report(a) => {
            commands::report(&ctx, matches!(a.format, Format::Json), a.out.output)
        }
        Command::Normalize(a) => commands::normalize(
            &ctx,
            &a.signal,
            &a.shot,
            a.dark.as_deref(),
            a.subtract_dark,
            a.out.output,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
