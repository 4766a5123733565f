//! Command-line front end for the simulator and the Monte-Carlo experiments.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mi_wpt::circuit::{CircuitParams, LoadPolicy};
use mi_wpt::experiments::{
    load_scenario, log_spaced_grid, pattern_f_grid, run_efficiency_sweep, run_oracle_check,
    run_pattern, run_priority, run_solve, ExperimentSpec,
};
use mi_wpt::oracle::OracleConfig;

#[derive(Parser)]
#[command(
    name = "mi-wpt",
    version,
    about = "Magnetic-induction wireless power transfer: coupled-coil simulator and transmit beamforming experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Master seed for the per-constellation RNG streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Coupling-factor grid: comma list "0.1,1,10" or "log:<lo>:<hi>:<n>".
    #[arg(long)]
    f: Option<String>,
    /// Constellations per grid point.
    #[arg(long, default_value_t = 1000)]
    constellations: usize,
    /// Receiver load: "matched" or a fixed resistance in ohms.
    #[arg(long, default_value = "matched")]
    load: String,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shrink the run to 100 constellations.
    #[arg(long)]
    quick: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Mean single-receiver efficiency pattern over the angular grid.
    Pattern {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Two-receiver priority steering versus the closest-neighbor baseline.
    Priority {
        #[command(flatten)]
        common: CommonArgs,
        /// Two priority weights compared against 1:1.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [2.0, 1.0])]
        priorities: Vec<f64>,
    },
    /// Mean efficiency versus coupling factor for all four strategies.
    EfficiencySweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of receivers.
        #[arg(long, default_value_t = 5)]
        receivers: usize,
    },
    /// Solve a single scenario file and print the full report.
    Solve {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Also run the brute-force oracle.
        #[arg(long)]
        oracle: bool,
        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compare the iterative solution against the brute-force oracle on
    /// random scenes.
    OracleCheck {
        #[arg(long, default_value_t = 50)]
        scenes: usize,
        /// Largest receiver count (scenes draw 1..=receivers).
        #[arg(long, default_value_t = 3)]
        receivers: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value = "matched")]
        load: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_load(text: &str) -> Result<LoadPolicy> {
    if text == "matched" {
        return Ok(LoadPolicy::Matched);
    }
    let ohms: f64 = text
        .parse()
        .with_context(|| format!("--load must be \"matched\" or ohms, got \"{text}\""))?;
    if !(ohms > 0.0 && ohms.is_finite()) {
        bail!("--load resistance must be positive");
    }
    Ok(LoadPolicy::Fixed(ohms))
}

fn parse_f_grid(text: &str) -> Result<Vec<f64>> {
    if let Some(rest) = text.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            bail!("--f log form is log:<lo>:<hi>:<count>");
        }
        let lo: f64 = parts[0].parse().context("log grid lower bound")?;
        let hi: f64 = parts[1].parse().context("log grid upper bound")?;
        let n: usize = parts[2].parse().context("log grid point count")?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            bail!("--f log grid needs 0 < lo < hi and count >= 2");
        }
        return Ok(log_spaced_grid(lo, hi, n));
    }
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("--f must be a comma list or log:<lo>:<hi>:<n>, got \"{text}\""))?;
    if values.is_empty() || !values.iter().all(|f| *f > 0.0 && f.is_finite()) {
        bail!("--f values must be positive");
    }
    Ok(values)
}

fn build_spec(common: &CommonArgs, receivers: usize, default_grid: Vec<f64>) -> Result<ExperimentSpec> {
    let f_values = match &common.f {
        Some(text) => parse_f_grid(text)?,
        None => default_grid,
    };
    Ok(ExperimentSpec {
        receivers,
        f_values,
        constellations: if common.quick {
            100
        } else {
            common.constellations
        },
        master_seed: common.seed,
        load_policy: parse_load(&common.load)?,
        params: CircuitParams::default(),
        ..ExperimentSpec::default()
    })
}

fn write_or_print(record: &mi_wpt::experiments::ExperimentRecord, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            record
                .write_to(path)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", record.to_csv_string()),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Pattern { common } => {
            let spec = build_spec(&common, 1, pattern_f_grid())?;
            let output = run_pattern(&spec)?;
            for curve in &output.curves {
                let peak = curve
                    .uniform
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                eprintln!(
                    "F = {:>8.3}: uniform-peak mean efficiency {:.4}",
                    curve.f_factor, peak
                );
            }
            write_or_print(&output.record, &common.out)?;
        }
        Command::Priority { common, priorities } => {
            let mut spec = build_spec(&common, 2, log_spaced_grid(0.1, 100.0, 25))?;
            spec.priorities = priorities;
            let output = run_priority(&spec)?;
            write_or_print(&output.record, &common.out)?;
        }
        Command::EfficiencySweep { common, receivers } => {
            let spec = build_spec(&common, receivers, log_spaced_grid(0.1, 100.0, 25))?;
            let output = run_efficiency_sweep(&spec)?;
            eprintln!("{:>10} {:>18} {:>10} {:>10}", "F", "method", "mean", "std");
            for s in &output.summary {
                eprintln!(
                    "{:>10.4} {:>18} {:>10.4} {:>10.4}",
                    s.f_factor,
                    s.method.name(),
                    s.mean,
                    s.std_dev
                );
            }
            write_or_print(&output.record, &common.out)?;
        }
        Command::Solve {
            scenario,
            oracle,
            out,
            seed,
        } => {
            let loaded = load_scenario(&scenario)?;
            let cfg = OracleConfig {
                rng_seed: seed,
                ..OracleConfig::default()
            };
            let output = run_solve(&loaded, oracle.then_some(&cfg))?;
            println!("{output}");
            if let Some(path) = out {
                output
                    .record
                    .write_to(&path)
                    .with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::OracleCheck {
            scenes,
            receivers,
            seed,
            restarts,
            load,
            out,
        } => {
            let cfg = OracleConfig {
                restarts,
                ..OracleConfig::default()
            };
            let output = run_oracle_check(
                scenes,
                receivers,
                seed,
                parse_load(&load)?,
                &CircuitParams::default(),
                &cfg,
            )?;
            let worst = output
                .rows
                .iter()
                .map(|r| r.margin)
                .fold(f64::NEG_INFINITY, f64::max);
            eprintln!(
                "oracle vs iterative on {} scenes: largest margin {:.3e}",
                output.rows.len(),
                worst
            );
            write_or_print(&output.record, &out)?;
        }
    }
    Ok(())
}
