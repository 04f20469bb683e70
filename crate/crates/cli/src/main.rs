use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "fraclab", version, about = "Whitney cubes, chain conditions and fractional Poincaré experiments")]
pub struct Cli {
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rasterize a preset or PBM bitmap into a voxel domain file.
    Domain(commands::DomainArgs),
    /// Whitney decomposition of a domain with per-generation counts.
    Whitney(commands::WhitneyArgs),
    /// Chain decomposition of a Whitney file.
    Chains(commands::ChainsArgs),
    /// Evaluate a summability condition on a chains file.
    Conditions(commands::ConditionsArgs),
    /// Estimate the fractional Poincaré constant of a voxel domain.
    Constant(commands::ConstantArgs),
    /// Check the cube lemma on random block functions.
    CubeLemma(commands::CubeLemmaArgs),
    /// Sweep the log-distance integral around a point of a set.
    LogIntegral(commands::LogIntegralArgs),
    /// Minkowski dimension from tube volumes.
    Dimension(commands::DimensionArgs),
    /// Porosity of a set.
    Porosity(commands::PorosityArgs),
    /// Build an s-version domain and summarize it.
    SVersion(commands::SVersionArgs),
    /// Growth of A_m/B_m for the apartment test functions.
    Sharpness(commands::SharpnessArgs),
}

/// Raw flag values as typed (defaults included), minus flags that cannot
/// change numeric output.
fn raw_params(cmd: &clap::Command, m: &ArgMatches) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for arg in cmd.get_arguments() {
        let name = arg.get_id().as_str();
        if matches!(name, "out" | "jobs" | "csv" | "help") {
            continue;
        }
        if let Some(vals) = m.get_raw(name) {
            let v: Vec<String> = vals.map(|s| s.to_string_lossy().into_owned()).collect();
            out.insert(name.to_string(), v.join(","));
        }
    }
    out
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<commands::Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<fraclab::Error>() {
        Some(
            fraclab::Error::InvalidParameter { .. }
            | fraclab::Error::Parse(_)
            | fraclab::Error::RootOutside(_)
            | fraclab::Error::EmptyDomain
            | fraclab::Error::NotEnoughCubes { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().next().unwrap_or("invalid arguments");
                    eprintln!("error: {}", one_line(first.trim_start_matches("error: ")));
                    ExitCode::from(2)
                }
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let root = Cli::command();
    let params = raw_params(root.find_subcommand(name).expect("known subcommand"), sub);
    let start = Instant::now();
    let result = fraclab::par::with_jobs(cli.jobs, || commands::run(name, &cli.command, params));
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::from(exit_code(&e))
        }
    }
}

