use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dslvec_core::harness::{self, Scenario};
use dslvec_core::{Error, TonePlan};

/// Vectored DSL binder simulator.
#[derive(Parser)]
#[command(name = "dslvec", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        /// Output directory (default: the scenario's `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Per-user rates, 8 lines of 25-200 m, three profiles.
    Fig4(PresetArgs),
    /// Mean user rate of 25 equal-length lines versus loop length.
    Fig5(PresetArgs),
    /// Downstream rate under RF ingress with the canceler off and on.
    Fig6(PresetArgs),
    /// List the built-in tone plans.
    Profiles,
    /// Check a scenario file and print the resolved scenario.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct PresetArgs {
    #[arg(long, default_value = harness::DEFAULT_OUTPUT_DIR)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the per-tone computation.
    #[arg(long)]
    jobs: Option<usize>,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                if let Some(tone) = e.tone() {
                    eprintln!("failing tone index: {tone}");
                }
                ExitCode::from(EXIT_NUMERICAL)
            } else if is_config(&e) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}

fn is_config(e: &Error) -> bool {
    match e {
        Error::AtTone { source, .. } => is_config(source),
        Error::Io(_) | Error::Json(_) | Error::Singular(_) | Error::IllConditioned { .. } => false,
        _ => true,
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, out, jobs } => {
            let scenario = load(&config)?;
            let dir = out.unwrap_or_else(|| scenario.output_dir.clone());
            report(harness::run_scenario(&scenario, &dir, jobs)?);
        }
        Command::Fig4(a) => report(harness::run_fig4(&a.out, a.seed, a.jobs)?),
        Command::Fig5(a) => report(harness::run_fig5(&a.out, a.seed, a.jobs)?),
        Command::Fig6(a) => report(harness::run_fig6(&a.out, a.seed, a.jobs)?),
        Command::Profiles => {
            println!(
                "{:<10} {:<15} {:>12} {:>6} {:>14}  duplexing",
                "name", "display", "spacing_hz", "tones", "bandwidth_hz"
            );
            for p in TonePlan::builtin() {
                let note = if p.anticipated { " (anticipated)" } else { "" };
                println!(
                    "{:<10} {:<15} {:>12} {:>6} {:>14}  {:?}{note}",
                    p.profile_name,
                    p.display_name(),
                    p.spacing_hz,
                    p.num_tones,
                    p.bandwidth_hz,
                    p.duplexing
                );
            }
        }
        Command::Validate { config } => {
            let scenario = load(&config)?;
            describe(&config, &scenario);
        }
    }
    Ok(())
}

/// Load a scenario; an unreadable file counts as a config error.
fn load(path: &Path) -> Result<Scenario, Error> {
    harness::load_scenario(path).map_err(|e| match e {
        Error::Io(io) => Error::Config {
            path: path.display().to_string(),
            msg: io.to_string(),
        },
        other => other,
    })
}

fn report(paths: Vec<PathBuf>) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn describe(path: &Path, s: &Scenario) {
    println!("{}: ok", path.display());
    println!("experiment: {}", s.experiment.as_str());
    let profiles: Vec<&str> = s.plans.iter().map(|p| p.profile_name.as_str()).collect();
    println!("profiles: {}", profiles.join(", "));
    println!("lines: {}", s.lines);
    println!("seed: {}", s.seed);
    let dirs: Vec<&str> = s.directions.iter().map(|d| d.as_str()).collect();
    println!("directions: {}", dirs.join(", "));
    let schemes: Vec<&str> = s.schemes.iter().map(|k| k.as_str()).collect();
    println!("schemes: {}", schemes.join(", "));
    println!("--- resolved ---");
    print!("{}", s.to_config_toml());
}
