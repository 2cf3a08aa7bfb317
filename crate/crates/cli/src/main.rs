//! `pat`: synthesize boundary observations, reconstruct initial data, compare fields.

mod commands;
mod fail;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use pat_core::config::Method;

use crate::fail::{Code, Failure};

#[derive(Parser)]
#[command(name = "pat", version, about = "Photoacoustic reconstruction from spherical and circular boundary data")]
struct Cli {
    /// Flat `key = value` config file with dotted keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads; defaults to `run.workers` if set, else machine parallelism.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Seed for random phantoms (overrides `run.seed`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Forward-simulate a phantom and write an observation file.
    Synth(SynthArgs),
    /// Reconstruct initial data from an observation file.
    Recon(ReconArgs),
    /// Relative L² and L∞ errors of a field against a reference field.
    Compare(CompareArgs),
    /// Quick invariant checks across all modules.
    Selftest,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Phantom spec (`bump:center=0.3,0,0:radius=0.5:power=3`, `smooth`, `multibump:count=3`, `zero`)
    /// or a field metadata path.
    #[arg(long)]
    pub phantom: Option<String>,
    /// Cauchy component the phantom fills: a or b.
    #[arg(long)]
    pub component: Option<String>,
    /// Observation metadata path; the payload goes next to it as `.bin`.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Also write the phantom sampled on the config's ball grid.
    #[arg(long, value_name = "PATH")]
    pub truth: Option<PathBuf>,
    /// Also write `<out>.csv` with columns t, node, value.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args)]
pub struct ReconArgs {
    /// Observation metadata path (a pole list for interior3d-residue).
    pub input: PathBuf,
    /// Reconstruction method; overrides `recon.method`.
    #[arg(long, value_name = "NAME", value_parser = parse_method)]
    pub method: Option<Method>,
    /// Field metadata path; the payload goes next to it as `.bin`.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Also write `<out>.csv` with columns r, node, a, b.
    #[arg(long)]
    pub csv: bool,
    /// halftime: which initial datum is known to vanish.
    #[arg(long, default_value = "a", value_parser = ["a", "b"])]
    pub vanishing: String,
    /// interior3d-residue: Bessel-zero terms per mode.
    #[arg(long, default_value_t = 64)]
    pub zeros: usize,
}

#[derive(Args)]
pub struct CompareArgs {
    pub field: PathBuf,
    pub reference: PathBuf,
    /// Flat `key = value` output.
    #[arg(long)]
    pub kv: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("unknown method `{s}`, expected one of {}", names.join(", "))
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut ctx = commands::Context::load(cli.config.as_deref(), cli.seed, cli.workers)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers)
        .build_global()
        .map_err(|e| Failure::new(Code::Usage, format!("worker pool: {e}")))?;
    match cli.cmd {
        Cmd::Synth(a) => commands::synth(&mut ctx, &a),
        Cmd::Recon(a) => commands::recon(&mut ctx, &a),
        Cmd::Compare(a) => commands::compare(&a),
        Cmd::Selftest => selftest::run(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            return Failure::new(Code::Usage, line).report();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
