//! Command-line front end: mesh generation plus the five pipeline stages,
//! each a pure function of the files named by the configuration.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use hfvrom::cases;
use hfvrom::mesh::{build_cube_primal, io::write_mesh};
use hfvrom::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hfvrom",
    about = "Incompressible flow solver with snapshot-based model reduction",
    long_about = "Runs a finite-volume/finite-element flow solver, compresses its \
snapshots into an orthonormal basis, and integrates the reduced system.\n\n\
Configuration is INI-style with sections [case], [fluid], [time], [pod], [rom].\n\
Required keys: case = manufactured|cavity and n (cube subdivisions) in [case].\n\
Optional keys and their defaults:\n\
  [case]  out_dir = .   dump_every = 0 (0 dumps only the final field)\n\
  [fluid] rho = 1, mu = 0.01, diffusivity = 0 (manufactured) or 0.01 (cavity)\n\
  [time]  cfl = 1, t_end = 2.5 / 5, snapshot_interval = 0.01\n\
  [pod]   kappa_wu = 0.99999 / 0.9999, kappa_pi = 0.9999 / 0.99, kappa_wy = 0.9999\n\
  [rom]   substeps = 50, ablate_pressure = false\n\
(case-dependent defaults listed manufactured / cavity)"
)]
struct Cli {
    /// Worker-count cap; accepted for compatibility, runs are sequential.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Linear-solver relative tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tolerance: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write a tagged tetrahedral mesh of the unit cube.
    MeshGen {
        /// Subdivisions per edge.
        #[arg(long)]
        n: usize,
        /// Destination mesh file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full-order solver; emits snapshots and field dumps.
    FomRun(ConfigArg),
    /// Build the reduction bases; emits basis files and the eigenvalue table.
    PodBuild {
        #[command(flatten)]
        config: ConfigArg,
        /// Snapshot file to compress (default: snapshots.bin in out_dir).
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Assemble the reduced operators; emits the operators file.
    RomOffline(ConfigArg),
    /// Integrate the reduced system; emits coefficients and reconstructions.
    RomRun(ConfigArg),
    /// Compare reduced and projected solutions against the snapshots.
    Compare {
        #[command(flatten)]
        config: ConfigArg,
        /// Zero the pressure-gradient coupling in the reduced system.
        #[arg(long)]
        ablate_pressure: bool,
    },
    /// All five stages in sequence.
    Pipeline {
        #[command(flatten)]
        config: ConfigArg,
        /// Zero the pressure-gradient coupling in the reduced system.
        #[arg(long)]
        ablate_pressure: bool,
    },
}

fn load(path: &PathBuf, tolerance: f64) -> Result<RunConfig> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = config::parse_config(&text)?;
    cfg.pipeline.tolerance = tolerance;
    Ok(cfg)
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::MeshGen { n, out } => {
            if n == 0 {
                return Err(Error::InvalidArgument("n must be positive".into()));
            }
            let primal = build_cube_primal(n)?;
            write_mesh(&out, &primal)
        }
        Command::FomRun(c) => {
            let cfg = load(&c.config, cli.tolerance)?;
            ensure_out_dir(&cfg)?;
            cases::stage_fom(&cfg.pipeline, &cfg.out_dir)
        }
        Command::PodBuild { config, snapshots } => {
            let cfg = load(&config.config, cli.tolerance)?;
            ensure_out_dir(&cfg)?;
            match snapshots {
                Some(path) => cases::stage_pod_from(&cfg.pipeline, &path, &cfg.out_dir),
                None => cases::stage_pod(&cfg.pipeline, &cfg.out_dir),
            }
        }
        Command::RomOffline(c) => {
            let cfg = load(&c.config, cli.tolerance)?;
            ensure_out_dir(&cfg)?;
            cases::stage_offline(&cfg.pipeline, &cfg.out_dir)
        }
        Command::RomRun(c) => {
            let cfg = load(&c.config, cli.tolerance)?;
            ensure_out_dir(&cfg)?;
            cases::stage_rom(&cfg.pipeline, &cfg.out_dir)
        }
        Command::Compare { config, ablate_pressure } => {
            let mut cfg = load(&config.config, cli.tolerance)?;
            cfg.pipeline.ablate_pressure |= ablate_pressure;
            ensure_out_dir(&cfg)?;
            cases::stage_compare(&cfg.pipeline, &cfg.out_dir).map(|_| ())
        }
        Command::Pipeline { config, ablate_pressure } => {
            let mut cfg = load(&config.config, cli.tolerance)?;
            cfg.pipeline.ablate_pressure |= ablate_pressure;
            cases::run_pipeline(&cfg.pipeline, &cfg.out_dir).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = cli.threads;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
