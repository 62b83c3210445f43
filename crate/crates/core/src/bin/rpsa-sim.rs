use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rpsa::config::ConfigFile;
use rpsa::harness::{self, SweepPlan};
use rpsa::{SchedulerKind, TrafficModel};

/// Run a load × scheduler × traffic-model × seed sweep and write CSV.
#[derive(Debug, Parser)]
#[command(name = "rpsa-sim", version)]
struct Args {
    /// TOML configuration; the built-in 16+16 port setup when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated schedulers: islip, firm, bsc-firm.
    #[arg(long, value_delimiter = ',')]
    scheduler: Option<Vec<SchedulerKind>>,
    /// Comma-separated traffic models: uniform-uniform, uniform-hotspot, burst-burst.
    #[arg(long, value_delimiter = ',')]
    model: Option<Vec<TrafficModel>>,
    /// Comma-separated offered loads in (0, 1].
    #[arg(long, value_delimiter = ',')]
    loads: Option<Vec<f64>>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Warm-up slots per run.
    #[arg(long)]
    warmup: Option<u64>,
    /// Measured slots per run.
    #[arg(long)]
    slots: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Print the built-in configuration as TOML and exit.
    #[arg(long)]
    print_default_config: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    if args.print_default_config {
        print!("{}", ConfigFile::default_config().to_toml());
        return Ok(());
    }
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default_config(),
    };

    let mut base = file.sim_config();
    if let Some(w) = args.warmup {
        base.warmup_slots = w;
    }
    if let Some(s) = args.slots {
        base.measure_slots = s;
    }
    let mut plan = SweepPlan::new(base);
    let sweep = &file.sweep;
    plan.loads = args
        .loads
        .or_else(|| sweep.loads.clone())
        .unwrap_or_else(harness::default_loads);
    plan.schedulers = args
        .scheduler
        .or_else(|| sweep.schedulers.clone())
        .unwrap_or_else(|| SchedulerKind::ALL.to_vec());
    plan.models = args
        .model
        .or_else(|| sweep.models.clone())
        .unwrap_or_else(|| TrafficModel::ALL.to_vec());
    plan.seeds = args
        .seeds
        .or_else(|| sweep.seeds.clone())
        .unwrap_or_else(harness::default_seeds);

    let csv = harness::run_experiment(&plan, args.jobs)?;
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}
