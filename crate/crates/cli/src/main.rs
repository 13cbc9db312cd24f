use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use roughmax_core::kernel::{build_kernel, kernel_csv};
use roughmax_core::lab::{self, ExperimentConfig, ExperimentReport};
use roughmax_core::KernelSpec;

#[derive(Parser)]
#[command(name = "roughmax", version, about = "Experiment runner for maximal truncated rough singular integrals")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the CSV outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Lattice spacing exponent: h = 2^-mesh.
    #[arg(long, global = true)]
    mesh: Option<u32>,
    /// cos, sin, zero, sign:SEED, random:SEED or arcs:v1,v2,...
    #[arg(long, global = true)]
    kernel: Option<KernelSpec>,
    /// Keep the raw kernel instead of subtracting its mean.
    #[arg(long, global = true)]
    no_project: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check every module invariant on seeded instances.
    Verify,
    /// Weak-type ratio sweep over the input suite.
    Weak11,
    /// Decay of the bad-part maximal function in s.
    Decay,
    /// Orthogonality across overlap levels on the tower suite.
    Ortho,
    /// Measure the frozen constants and rewrite the constants file.
    Calibrate {
        #[arg(long, default_value = "calibration/constants.conf")]
        write: PathBuf,
        /// Print the measured constants without writing them.
        #[arg(long)]
        dry_run: bool,
    },
    /// Write the kernel piece of one level as `x,y,value`.
    KernelDump {
        #[arg(long, allow_hyphen_values = true)]
        level: i32,
    },
}

fn config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(m) = c.mesh {
        cfg.mesh = m;
        // keep the default level range usable on coarse meshes
        cfg.k_min = cfg.k_min.max(roughmax_core::kernel::min_resolvable_level(m));
    }
    if let Some(k) = &c.kernel {
        cfg.kernel = k.clone();
    }
    if c.no_project {
        cfg.project = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(rep: &ExperimentReport, cfg: &ExperimentConfig) -> Result<ExitCode> {
    rep.write(&cfg.out)?;
    print!("{}", rep.summary());
    Ok(if rep.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = config(&cli.common)?;
    match cli.command {
        Command::Verify => finish(&lab::run_verify(&cfg)?, &cfg),
        Command::Weak11 => finish(&lab::run_weak11(&cfg)?, &cfg),
        Command::Decay => finish(&lab::run_decay(&cfg)?, &cfg),
        Command::Ortho => finish(&lab::run_orthogonality(&cfg)?, &cfg),
        Command::Calibrate { write, dry_run } => {
            let cal = lab::calibrate(&cfg)?;
            let body = cal.render();
            print!("{body}");
            if !dry_run {
                fs::write(&write, &body).with_context(|| format!("writing {}", write.display()))?;
                eprintln!("wrote {}", write.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::KernelDump { level } => {
            let k = build_kernel(level, &cfg.omega()?, cfg.mesh)?;
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join(format!("kernel_{level}.csv"));
            fs::write(&path, kernel_csv(&k))?;
            println!("wrote {} ({} samples)", path.display(), k.nonzero_count());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
