use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use refmatte::pipeline::{self, GenerateOptions, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "refmatte",
    version,
    about = "Refractive-flow mattes for transparent objects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset of transparent objects over backgrounds.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Decode a Gray-code capture stack (directory with stack.txt) into a matte.
    Extract {
        capture: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Composite a matte over a new background image.
    Composite {
        #[arg(long)]
        matte: PathBuf,
        #[arg(long)]
        background: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Resample a background whose size differs from the matte.
        #[arg(long)]
        resize: bool,
    },
    /// Score predicted mattes against a generated dataset.
    Evaluate {
        /// Dataset root containing manifest.toml.
        #[arg(long)]
        gt: PathBuf,
        /// Directory with one matte directory per sample id.
        #[arg(long)]
        pred: PathBuf,
        /// CSV report path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Render the Gray-code capture stack of a scene file.
    Capture {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Omit the complement patterns.
        #[arg(long)]
        no_complements: bool,
    },
}

fn run(cli: Cli) -> refmatte::Result<()> {
    match cli.command {
        Command::Generate {
            config,
            out,
            count,
            seed,
            jobs,
        } => {
            let config = PipelineConfig::load(&config)?;
            let manifest =
                pipeline::generate(&config, &out, &GenerateOptions { count, seed, jobs })?;
            for (category, n) in &manifest.counts {
                info!("{category}: {n}");
            }
        }
        Command::Extract { capture, out } => {
            pipeline::extract(&capture, &out)?;
        }
        Command::Composite {
            matte,
            background,
            out,
            resize,
        } => pipeline::composite(&matte, &background, &out, resize)?,
        Command::Evaluate {
            gt,
            pred,
            out,
            jobs,
        } => {
            let rows = pipeline::evaluate(&gt, &pred, &out, jobs)?;
            for r in rows.iter().filter(|r| r.sample == "mean") {
                info!(
                    "{}: EPE {:.3}/{:.3} px, IoU {:.3}, PSNR {:.2} dB",
                    r.method,
                    r.report.epe_whole,
                    r.report.epe_object,
                    r.report.mask_iou,
                    r.report.psnr
                );
            }
        }
        Command::Capture {
            scene,
            out,
            no_complements,
        } => pipeline::capture(&scene, &out, !no_complements)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
