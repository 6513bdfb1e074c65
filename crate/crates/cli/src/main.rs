use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use urllc_core::experiment::{self, ExperimentId, ExperimentSpec, Profile};
use urllc_core::fbl::{sinr_floor, FblParams};
use urllc_core::gp::to_sexpr;
use urllc_core::optimizer::{build_program, Decoder, PilotMode, SinrTarget};
use urllc_core::scenario::generate_topology;
use urllc_core::SystemConfig;

/// Cell-free massive MIMO URLLC power allocation experiments.
#[derive(Parser)]
#[command(name = "urllc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower-bound rate against Monte-Carlo ergodic rate.
    Tightness(Common),
    /// Per-iteration objective traces of both algorithms.
    Converge(Common),
    /// Weighted sum rate against the AP-selection threshold.
    ThresholdSweep(Common),
    /// All schemes against the energy budget.
    EnergyCompare(Common),
    /// All schemes against the number of devices.
    DevicesSweep(Common),
    /// Oracle suites for the bounds and the GP solver.
    GpSelftest {
        #[command(flatten)]
        common: Common,
        /// Also write the first feasibility GP as an s-expression.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct Common {
    /// Key/value configuration file overriding the built-in parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "desk")]
    profile: ProfileArg,
    /// Output directory for the CSV file.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Monte-Carlo trials per estimate.
    #[arg(long)]
    trials: Option<usize>,
    /// Random deployments per sweep point.
    #[arg(long)]
    deployments: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn spec(&self, id: ExperimentId) -> Result<ExperimentSpec> {
        let profile = match self.profile {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        };
        let mut spec = ExperimentSpec::new(id, profile);
        if let Some(path) = &self.config {
            let cfg = SystemConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
            spec = spec.with_config(cfg);
        }
        if let Some(seed) = self.seed {
            spec = spec.with_seed(seed);
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if let Some(d) = self.deployments {
            spec.deployments = d;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn dump_gp(spec: &ExperimentSpec, path: &PathBuf) -> Result<()> {
    let cfg = &spec.config;
    let model = generate_topology(cfg, spec.seed)?;
    let params = FblParams::from_config(cfg)?;
    let floors = (0..cfg.num_devices)
        .map(|k| sinr_floor(&params, k))
        .collect::<urllc_core::Result<Vec<_>>>()?;
    let k = cfg.num_devices as f64;
    let pilot: Vec<f64> = params.energy.iter().map(|e| e / (2.0 * k)).collect();
    let (gp, _) = build_program(
        &model,
        &params,
        Decoder::Mrc,
        &PilotMode::Variable,
        &pilot,
        &SinrTarget::Scaled { floors },
    )?;
    fs::write(path, to_sexpr(&gp)).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn execute(cli: Cli) -> Result<bool> {
    let (id, common, dump) = match &cli.command {
        Command::Tightness(c) => (ExperimentId::Tightness, c, None),
        Command::Converge(c) => (ExperimentId::Converge, c, None),
        Command::ThresholdSweep(c) => (ExperimentId::ThresholdSweep, c, None),
        Command::EnergyCompare(c) => (ExperimentId::EnergyCompare, c, None),
        Command::DevicesSweep(c) => (ExperimentId::DevicesSweep, c, None),
        Command::GpSelftest { common, dump } => (ExperimentId::GpSelftest, common, dump.as_ref()),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let spec = common.spec(id)?;
    if let Some(path) = dump {
        dump_gp(&spec, path)?;
    }
    let output = experiment::run(&spec)?;
    fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    let path = common.out.join(format!("{}.csv", id.name()));
    fs::write(&path, &output.csv).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    if id == ExperimentId::GpSelftest {
        for line in output.csv.lines().filter(|l| l.ends_with(",false")) {
            eprintln!("FAILED {line}");
        }
    }
    Ok(output.ok)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
