//! Experiment CLI: run experiments from a TOML config, analyze probe
//! logs, and replay runs from their metadata sidecars.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use reacherlab::linksim::interarrival_stats;
use reacherlab::xlab::{
    analysis::{average_correlograms, cross_correlation},
    config::load_config,
    output::{read_arrivals_csv, read_signal_csv},
    runner,
};

/// Deterministic lab for real-time reinforcement-learning task setups.
#[derive(Parser)]
#[command(name = "reacherlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file.
    Run(RunArgs),
    /// Analyze probe logs.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Re-execute a run from its metadata sidecar.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML). An empty file is the baseline setup.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Inclusive seed range `A..B`; one run per seed.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory (default: config's `out_dir`, then
    /// `$REACHERLAB_OUT`, then `./runs`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Lag cross-correlation of probe actions against motor signals.
    Xcorr(XcorrArgs),
    /// Percentile summary of packet inter-arrival times.
    Interarrival(InterarrivalArgs),
}

#[derive(Args)]
struct XcorrArgs {
    /// Probe signal log (`signals.csv`).
    #[arg(long)]
    log: PathBuf,
    /// Comma-separated signals from {qdd, torque, current}.
    #[arg(long, default_value = "qdd,torque,current")]
    signals: String,
    #[arg(long, default_value_t = 10)]
    max_lag: usize,
}

#[derive(Args)]
struct InterarrivalArgs {
    /// Arrival log (`arrivals.csv`).
    #[arg(long)]
    log: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Metadata sidecar of the run to re-execute.
    #[arg(long)]
    metadata: PathBuf,
    /// Output directory for the replayed run.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("REACHERLAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    let (a, b) = text
        .split_once("..")
        .with_context(|| format!("expected `A..B`, got {text:?}"))?;
    let a: u64 = a.trim().parse().context("bad range start")?;
    let b: u64 = b.trim().parse().context("bad range end")?;
    if b < a {
        bail!("empty seed range {text:?}");
    }
    Ok((a..=b).collect())
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    let out_base = args
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(default_out_dir);
    let seeds = match (&args.seed, &args.seeds) {
        (Some(s), _) => vec![*s],
        (None, Some(range)) => parse_seed_range(range)?,
        (None, None) => vec![cfg.seed],
    };
    let stem = args
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    for seed in seeds {
        cfg.seed = seed;
        let dir = out_base.join(format!("{stem}-seed{seed}"));
        let wall = std::time::Instant::now();
        let artifacts = runner::run_to_dir(&cfg, &dir)?;
        let r = &artifacts.result;
        println!(
            "seed {seed}: {} episodes, {} updates, {:.1} min experience, wall {:.1?}",
            r.episodes,
            r.updates,
            r.agent_experience.as_secs_f64() / 60.0,
            wall.elapsed(),
        );
        if let Some(last) = r.rows.last() {
            println!(
                "  final batch: mean return {:.3}, mean final distance {:.4} m",
                last.mean_return, last.mean_final_distance
            );
        }
        println!("  wrote {}", artifacts.csv.display());
    }
    Ok(())
}

fn analyze_xcorr(args: XcorrArgs) -> Result<()> {
    let cols = read_signal_csv(&args.log)?;
    let col = |name: &str| -> Option<&Vec<f64>> {
        cols.iter().find(|(h, _)| h == name).map(|(_, v)| v)
    };
    let n_act = (0..)
        .take_while(|j| col(&format!("action{j}")).is_some())
        .count();
    if n_act == 0 {
        bail!("no action columns in {}", args.log.display());
    }
    for signal in args.signals.split(',') {
        let signal = signal.trim();
        let mut grams = Vec::new();
        for j in 0..n_act {
            let x = col(&format!("action{j}")).unwrap();
            let y = col(&format!("{signal}{j}"))
                .with_context(|| format!("no column {signal}{j}"))?;
            grams.push(cross_correlation(x, y, args.max_lag)?);
        }
        let avg = average_correlograms(&grams);
        match avg.argmax() {
            Some((lag, v)) => {
                println!("{signal}: peak correlation {v:.3} at lag {lag} packets");
            }
            None => println!("{signal}: undefined (zero-variance series)"),
        }
        let line: Vec<String> = avg
            .lags
            .iter()
            .zip(&avg.values)
            .filter(|(l, _)| **l >= 0)
            .map(|(l, v)| match v {
                Some(v) => format!("{l}:{v:+.3}"),
                None => format!("{l}:undef"),
            })
            .collect();
        println!("  {}", line.join("  "));
    }
    Ok(())
}

fn analyze_interarrival(args: InterarrivalArgs) -> Result<()> {
    let arrivals = read_arrivals_csv(&args.log)?;
    let s = interarrival_stats(&arrivals)?;
    let ms = |d: reacherlab::Duration| d.as_secs_f64() * 1e3;
    println!("{} gaps from {}", s.count, args.log.display());
    println!(
        "  min {:.3} ms | p5 {:.3} | p25 {:.3} | p50 {:.3} | p75 {:.3} | p95 {:.3} | max {:.3} ms",
        ms(s.min),
        ms(s.p5),
        ms(s.p25),
        ms(s.p50),
        ms(s.p75),
        ms(s.p95),
        ms(s.max),
    );
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<()> {
    let out = args.out.unwrap_or_else(|| default_out_dir().join("replay"));
    let artifacts = runner::replay(&args.metadata, &out)?;
    println!(
        "replayed {} episodes, {} updates; wrote {}",
        artifacts.result.episodes,
        artifacts.result.updates,
        artifacts.csv.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Analyze(AnalyzeCmd::Xcorr(args)) => analyze_xcorr(args),
        Command::Analyze(AnalyzeCmd::Interarrival(args)) => analyze_interarrival(args),
        Command::Replay(args) => replay(args),
    }
}
