//! Command-line interface: temperature sweeps, orbit listings, and spectra
//! as CSV files. Exit codes: 0 success, 2 configuration error, 3 numerical
//! failure (partial output preserved). Diagnostics go to stderr.

mod config;
mod run;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ztrace",
    version,
    about = "Partition functions of 1D systems: exact level sums, classical \
             phase-space integrals, and semiclassical traces over equilibria \
             and tunneling orbits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep temperature and tabulate Z, f, u, s, c for each configured method
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (falls back to the config's "output" key)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List every orbit contribution to the semiclassical trace at one beta
    Orbits {
        #[arg(long)]
        config: PathBuf,
        /// Inverse temperature 1 / (k_B T)
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the lowest energy levels with accuracy estimates
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// How many levels (falls back to the config's "spectrum.levels")
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let (config_path, out_arg) = match &cli.command {
        Command::Sweep { config, out }
        | Command::Orbits { config, out, .. }
        | Command::Spectrum { config, out, .. } => (config.clone(), out.clone()),
    };
    let text = match fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {}: {e}", config_path.display());
            return 2;
        }
    };
    let cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let model = match run::build_model(&cfg) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("config error: system: {e}");
            return 2;
        }
    };
    let out_path = match out_arg.or_else(|| cfg.output.as_ref().map(PathBuf::from)) {
        Some(p) => p,
        None => {
            eprintln!("config error: no output path (pass --out or set \"output\")");
            return 2;
        }
    };
    let file = match fs::File::create(&out_path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("config error: cannot create {}: {e}", out_path.display());
            return 2;
        }
    };
    let mut writer = BufWriter::new(file);
    let outcome = match &cli.command {
        Command::Sweep { .. } => run::run_sweep(&cfg, &model, &mut writer),
        Command::Orbits { beta, .. } => {
            if !(beta.is_finite() && *beta > 0.0) {
                eprintln!("config error: beta must be positive, got {beta}");
                return 2;
            }
            run::run_orbits(&cfg, &model, *beta, &mut writer)
        }
        Command::Spectrum { levels, .. } => {
            let count = levels.unwrap_or(cfg.spectrum.levels);
            if count < 1 {
                eprintln!("config error: levels must be at least 1");
                return 2;
            }
            run::run_spectrum(&cfg, &model, count, &mut writer)
        }
    };
    let outcome = outcome.and_then(|ok| writer.flush().map(|()| ok));
    match outcome {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("numerical failures occurred; partial output written");
            3
        }
        Err(e) => {
            eprintln!("config error: cannot write {}: {e}", out_path.display());
            2
        }
    }
}
