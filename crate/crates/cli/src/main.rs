use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evfront_cli::commands::{cmd_apply, cmd_build, cmd_population, cmd_probe, cmd_report};
use evfront_cli::{CliResult, Front, ProbeAxis, RunConfig, Target};

/// Fixed-weight retina and V1 front-ends, with in-silico tuning experiments.
#[derive(Parser)]
#[command(name = "evfront", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the filter bank and write bank.json and weights.bin.
    Build,
    /// Run a PNG through a front-end and write an EVF1 bundle.
    Apply {
        image: PathBuf,
        #[arg(long, default_value = "ev")]
        front: Front,
    },
    /// Tuning curve of one cell: midget, parasol or unit:<i>.
    Probe {
        #[arg(long)]
        target: Target,
        #[arg(long, default_value = "sf")]
        axis: ProbeAxis,
        /// Put the retina block in front of V1 units.
        #[arg(long)]
        with_retina: bool,
    },
    /// Optimal SF of every V1 unit.
    Population {
        /// Also run through the retina block and report the shift.
        #[arg(long)]
        with_retina: bool,
    },
    /// Build, then run every configured experiment.
    Report {
        /// Optional PNG to push through all three fronts.
        image: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    match cli.command {
        Command::Build => {
            let b = cmd_build(&cfg)?;
            println!("{} units -> {}, {}", b.n_units, b.manifest.display(), b.weights.display());
        }
        Command::Apply { image, front } => {
            println!("{}", cmd_apply(&cfg, &image, front)?.display());
        }
        Command::Probe {
            target,
            axis,
            with_retina,
        } => {
            let r = cmd_probe(&cfg, target, axis, with_retina)?;
            print!("{}: optimal SF {:.3} cpd", r.target, r.optimal_sf_cpd);
            if let Some(fit) = r.fit {
                print!(", c0 {:.3}, slope {:.3}", fit.saturation_onset_c0, fit.linear_slope);
            }
            println!();
        }
        Command::Population { with_retina } => {
            let r = cmd_population(&cfg, with_retina)?;
            println!(
                "{} units, mean optimal SF {:.3} cpd without retina",
                r.n_units, r.without_retina.mean_cpd
            );
            if let (Some(w), Some(shift)) = (r.with_retina, r.shift_cpd) {
                println!("mean {:.3} cpd with retina, shift {shift:.3} cpd", w.mean_cpd);
            }
        }
        Command::Report { image } => {
            cmd_report(&cfg, image.as_deref())?;
            println!("{}", cfg.out_dir.join("report.json").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evfront: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
