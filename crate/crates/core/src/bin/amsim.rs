use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amsim::experiments::{self, Command, ExperimentConfig};
use amsim::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// Rare-event estimation for stochastic Allen-Cahn dynamics.
#[derive(Parser)]
#[command(name = "amsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Repeated AMS estimates of the transition probability.
    Estimate(Common),
    /// Brute-force Monte Carlo estimate of the transition probability.
    DirectMc(Common),
    /// AMS estimates over a list of temperatures with a log-linear fit.
    SweepEpsilon(Common),
    /// Reactive trajectories and last-crossing statistics.
    Trajectories(Common),
    /// Critical points and spectra of the energy landscape.
    Bifurcation(Common),
    /// Re-executes the run described by a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "out/replay")]
        out: PathBuf,
    },
    /// Lists the built-in presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// TOML file or built-in preset name.
    #[arg(long, short)]
    config: String,
    /// Override a configuration key, e.g. `--set ams.n_rep=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("run.seed={seed}"));
    }
    let path = Path::new(&common.config);
    if path.exists() {
        ExperimentConfig::load(path, &overrides)
    } else if experiments::preset(&common.config).is_some() {
        experiments::load_preset(&common.config, &overrides)
    } else {
        Err(Error::Config(format!("`{}` is neither a file nor a preset", common.config)))
    }
}

fn run(cli: Cli) -> Result<()> {
    let (command, common) = match cli.command {
        Cmd::Estimate(c) => (Command::Estimate, c),
        Cmd::DirectMc(c) => (Command::DirectMc, c),
        Cmd::SweepEpsilon(c) => (Command::SweepEpsilon, c),
        Cmd::Trajectories(c) => (Command::Trajectories, c),
        Cmd::Bifurcation(c) => (Command::Bifurcation, c),
        Cmd::Replay { manifest, out } => {
            let workers = experiments::workers_from_env()?;
            let m = experiments::with_workers(workers, || experiments::replay(&manifest, &out))??;
            println!("replayed {} into {}", m.run_id, out.display());
            return Ok(());
        }
        Cmd::Presets => {
            for (name, _) in experiments::PRESETS {
                println!("{name}");
            }
            return Ok(());
        }
    };
    let cfg = load(&common)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out").join(command.name()));
    let workers = experiments::workers_from_env()?;
    let m = experiments::with_workers(workers, || experiments::run_command(command, &cfg, &out))??;
    let mut stdout = std::io::stdout().lock();
    let mut report = || -> std::io::Result<()> {
        writeln!(
            stdout,
            "{} {} run {} ({:.2} s, {} workers)",
            m.experiment,
            command.name(),
            m.run_id,
            m.wall_time_seconds,
            m.worker_count
        )?;
        for f in m.outputs.iter().take(8) {
            writeln!(stdout, "  {}", out.join(f).display())?;
        }
        if m.outputs.len() > 8 {
            writeln!(stdout, "  ... and {} more", m.outputs.len() - 8)?;
        }
        Ok(())
    };
    let _ = report();
    for f in &m.failures {
        eprintln!("  failure: {f}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
