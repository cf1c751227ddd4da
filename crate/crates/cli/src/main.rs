use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kdiff_core::commands::{
    cmd_entropy, cmd_evaluate, cmd_mask, cmd_reconstruct, cmd_undersample, ReconstructArgs, Report,
};
use kdiff_core::io::{RunConfig, CONFIG_HELP};

/// Multi-model score-based diffusion reconstruction of undersampled k-space.
///
/// Grid files use the KSP1 format. KDIFF_THREADS caps the number of worker
/// threads used for per-coil and per-sample reconstructions.
#[derive(Debug, Parser)]
#[command(name = "kdiff", version, after_long_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the weighting matrix and the configured virtual masks.
    Mask {
        #[arg(long)]
        config: PathBuf,
        /// Grid size as HxW, e.g. 64x64.
        #[arg(long, value_parser = parse_size)]
        size: (usize, usize),
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the configured sampling pattern and apply it to a grid.
    Undersample {
        #[arg(long)]
        config: PathBuf,
        /// Image, k-space or real grid to undersample.
        #[arg(long)]
        input: PathBuf,
        /// Overrides `pattern_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct measured k-space; one --input per coil.
    Reconstruct {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// Pattern grid written by `undersample`.
        #[arg(long)]
        pattern: PathBuf,
        /// Ground truth for PSNR and SSIM.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// PSNR and SSIM between two grids, compared as magnitude images.
    Evaluate {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Entropy of a grid inside the first two configured masks.
    Entropy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    Ok((h, w))
}

fn load(path: &Path) -> kdiff_core::Result<RunConfig> {
    RunConfig::load(path)
}

fn run(cli: Cli) -> kdiff_core::Result<Report> {
    match cli.command {
        Command::Mask { config, size, out } => cmd_mask(&load(&config)?, size.0, size.1, &out),
        Command::Undersample {
            config,
            input,
            seed,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.pattern_seed = s;
            }
            cmd_undersample(&cfg, &input, &out)
        }
        Command::Reconstruct {
            config,
            input,
            pattern,
            reference,
            seed,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_reconstruct(
                &cfg,
                &ReconstructArgs {
                    inputs: input,
                    pattern,
                    reference,
                    out,
                },
            )
        }
        Command::Evaluate { reference, test } => cmd_evaluate(&reference, &test),
        Command::Entropy { config, input } => cmd_entropy(&load(&config)?, &input),
    }
}

fn error_line(module: &str, param: &str, msg: &str) -> String {
    let msg = msg.replace('\n', " ").replace('"', "'");
    format!("error module={module} param={param} msg=\"{msg}\"")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", error_line("cli", "args", first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(e.module(), &e.param(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
