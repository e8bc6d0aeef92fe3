use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpcam_cli::commands::{self, ReconstructOptions};
use fpcam_cli::{exit_code, ExperimentConfig};

#[derive(Parser)]
#[command(name = "fpcam", version, about = "Focal-plane-array compressive imaging experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene, generate patterns and simulate the sensor captures.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory (default: $FPCAM_OUT/simulate).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve the TV-regularized problem for a simulate output directory.
    Reconstruct {
        /// Directory written by `simulate`.
        #[arg(long)]
        capture: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        inner_prox_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        nonneg: Option<bool>,
        /// "2d" or "3d".
        #[arg(long)]
        tv: Option<String>,
        /// Measurements per reconstructed frame (0 = all).
        #[arg(long)]
        group_size: Option<usize>,
    },
    /// Simulate impulse-scan calibration and estimate the mirror-to-pixel map.
    Calibrate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compression (--T) and/or noise (--snr) sweeps on a chart scene.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long = "T", alias = "t", value_delimiter = ',')]
        measurements: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        snr: Option<Vec<f64>>,
    },
    /// Bar-target MTF, one CSV per measurement count.
    Mtf {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long = "T", alias = "t", value_delimiter = ',')]
        measurements: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        freqs: Option<Vec<f64>>,
    },
    /// Measurement rate, spatio-temporal resolution and achievable frame rates.
    Rates {
        /// Sensor side length in pixels.
        #[arg(long = "K", alias = "k")]
        k: u64,
        /// DMD pattern rate in Hz.
        #[arg(long = "fdmd", alias = "f-dmd")]
        f_dmd: f64,
        #[arg(long)]
        alpha: f64,
        /// Also write plotdata/rates.csv and a manifest here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<Vec<String>> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = commands::default_output(out.as_deref(), Some(&cfg), "simulate");
            commands::simulate(&cfg, &dir)
        }
        Command::Reconstruct {
            capture,
            out,
            lambda,
            max_iters,
            inner_prox_iters,
            tol,
            nonneg,
            tv,
            group_size,
        } => {
            let opts = ReconstructOptions {
                lambda,
                max_iters,
                inner_prox_iters,
                tol,
                nonneg,
                tv,
                group_size,
            };
            let dir = commands::default_output(out.as_deref(), None, "reconstruct");
            commands::reconstruct(&capture, &opts, &dir)
        }
        Command::Calibrate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = commands::default_output(out.as_deref(), Some(&cfg), "calibrate");
            commands::calibrate(&cfg, &dir)
        }
        Command::Sweep { config, out, measurements, snr } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = commands::default_output(out.as_deref(), Some(&cfg), "sweep");
            commands::sweep(&cfg, measurements.as_deref(), snr.as_deref(), &dir)
        }
        Command::Mtf { config, out, measurements, freqs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = commands::default_output(out.as_deref(), Some(&cfg), "mtf");
            commands::mtf(&cfg, measurements.as_deref(), freqs.as_deref(), &dir)
        }
        Command::Rates { k, f_dmd, alpha, out } => commands::rates(k, f_dmd, alpha, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
