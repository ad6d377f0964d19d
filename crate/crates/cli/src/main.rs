use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use beamkit_cli::{config, parse_config, run, write_csv};
use clap::Parser;

/// Monte Carlo spectral-efficiency experiments for hybrid beamforming.
#[derive(Parser, Debug)]
#[command(name = "beamkit", version)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in scenario, see --list-presets.
    #[arg(long)]
    preset: Option<String>,

    /// Master seed; overrides the scenario's seed.
    #[arg(long, env = "BEAMKIT_SEED")]
    seed: Option<u64>,

    /// Trials per sweep point (cells in CDF mode).
    #[arg(long)]
    trials: Option<usize>,

    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for the trial loop.
    #[arg(long)]
    threads: Option<usize>,

    /// Print the resolved scenario and exit.
    #[arg(long)]
    print_config: bool,

    /// List the built-in scenarios and exit.
    #[arg(long)]
    list_presets: bool,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    if args.list_presets {
        for (name, text) in config::PRESETS {
            let summary: Vec<&str> = text
                .lines()
                .map_while(|l| l.strip_prefix("# "))
                .collect();
            let summary = summary.join(" ");
            println!("{name:8} {summary}");
        }
        return Ok(());
    }

    let mut scenario = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(name)) => config::preset(name)?,
        _ => bail!("pass exactly one of --config or --preset"),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            bail!("--trials must be positive");
        }
        scenario.trials = trials;
    }
    if args.threads == Some(0) {
        bail!("--threads must be positive");
    }

    if args.print_config {
        print!("{}", scenario.emit());
        return Ok(());
    }

    let output = run(&scenario, args.threads).context("running scenario")?;
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            write_csv(&output, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_csv(&output, &mut w)?;
        }
    }
    Ok(())
}
