use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use olnqs::cli::{parse_config, render_table1_csv, run_experiment, table1_report, Mode};
use olnqs::symmetry::{build_group, orbit_table};
use olnqs::Error;

#[derive(Parser)]
#[command(version, about = "Variational steady states of dissipative spin chains")]
struct Args {
    #[command(subcommand)]
    command: Option<Command>,
    /// Experiment file (key = value lines)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the mode given in the config file
    #[arg(long)]
    mode: Option<String>,
    /// Override the seed given in the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 gives bit-reproducible runs
    #[arg(long)]
    threads: Option<usize>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter counts and invariant-subspace dimensions
    Table1 {
        #[arg(long, default_value_t = 8)]
        nmax: usize,
    },
    /// Orbit table of the symmetry group as CSV
    Orbits {
        #[arg(long)]
        n: usize,
    },
}

fn run(args: Args) -> olnqs::Result<()> {
    if let Some(k) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config { line: None, msg: format!("thread pool: {e}") })?;
    }
    match args.command {
        Some(Command::Table1 { nmax }) => {
            print!("{}", render_table1_csv(&table1_report(nmax)?));
            Ok(())
        }
        Some(Command::Orbits { n }) => {
            print!("{}", orbit_table(&build_group(n)?).to_csv());
            Ok(())
        }
        None => {
            let path = args.config.ok_or_else(|| Error::Config {
                line: None,
                msg: "--config is required".into(),
            })?;
            let mut cfg = parse_config(&path)?;
            if let Some(m) = args.mode {
                cfg.mode = m
                    .parse::<Mode>()
                    .map_err(|msg| Error::Config { line: None, msg })?;
            }
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            if let Some(o) = args.out {
                cfg.out = o;
            }
            let summary = run_experiment(&cfg)?;
            let m = summary.magnetization;
            println!(
                "{} iterations, cost {:e}, M = ({:.6}, {:.6}, {:.6})",
                summary.iterations, summary.cost, m.x, m.y, m.z
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OLNQS_LOG", "warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(match &e {
                Error::Config { .. } => 2,
                e if e.is_numeric() => 3,
                _ => 1,
            })
        }
    }
}
