use std::path::PathBuf;

use clap::Parser;

use edctr_sim::engine::{Protocol, RelayCount};
use edctr_sim::plan::{Cell, ExperimentPlan};
use edctr_sim::report::run_plan;
use edctr_sim::Result;

/// Run a wireless-sensor-network simulation plan from a JSON config.
///
/// The config holds one simulation setup plus optional `cells`, `seeds`
/// and `output_dir` sweep keys; flags override the file. Set RUST_LOG for
/// progress logging.
#[derive(Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// JSON config / experiment plan file
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Run only this seed (overrides the plan's seed list)
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Output directory (overrides the plan's output_dir)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Protocol for a single-cell run: EDCTR, LEACH or LEACH_C
    #[arg(long, value_name = "P", value_parser = parse_protocol)]
    protocol: Option<Protocol>,

    /// Relay count for a single-cell run: a number or "auto"
    #[arg(long, value_name = "K", value_parser = parse_relays)]
    relays: Option<RelayCount>,

    /// Round horizon (overrides the config)
    #[arg(long, value_name = "R")]
    rounds: Option<u32>,
}

fn parse_protocol(s: &str) -> std::result::Result<Protocol, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_relays(s: &str) -> std::result::Result<RelayCount, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(RelayCount::Auto);
    }
    s.parse::<usize>()
        .map(RelayCount::Fixed)
        .map_err(|_| format!("expected a non-negative count or \"auto\", got \"{s}\""))
}

fn run(args: Args) -> Result<()> {
    let mut plan = ExperimentPlan::from_file(&args.config)?;
    if let Some(rounds) = args.rounds {
        plan.base.rounds = rounds;
    }
    if let Some(seed) = args.seed {
        plan.base.seed = seed;
        plan.seeds = vec![seed];
    }
    if let Some(dir) = args.out {
        plan.output_dir = dir;
    }
    if args.protocol.is_some() || args.relays.is_some() {
        // a protocol/relay override collapses the sweep to a single cell
        let protocol = args.protocol.unwrap_or(plan.base.protocol);
        let relays = args.relays.unwrap_or(plan.base.relay_count);
        plan.base.protocol = protocol;
        plan.base.relay_count = relays;
        plan.cells = vec![Cell::new(protocol, relays)];
    }
    plan.validate()?;
    log::info!(
        "running {} cell(s) x {} seed(s), {} rounds",
        plan.cells.len(),
        plan.seeds.len(),
        plan.base.rounds
    );
    let out = run_plan(&plan)?;
    println!(
        "wrote {} files under {}",
        out.files.len(),
        out.dir.display()
    );
    for cr in &out.cells {
        let n = cr.results.len() as f64;
        let delivered = cr
            .results
            .iter()
            .map(|r| r.summary.total_delivered as f64)
            .sum::<f64>()
            / n;
        let alive = cr
            .results
            .iter()
            .map(|r| r.summary.alive_at_end as f64)
            .sum::<f64>()
            / n;
        let first_death: Vec<u32> = cr
            .results
            .iter()
            .filter_map(|r| r.summary.first_node_death)
            .collect();
        let death = if first_death.is_empty() {
            "none".to_string()
        } else {
            format!(
                "{:.0} (n={})",
                first_death.iter().sum::<u32>() as f64 / first_death.len() as f64,
                first_death.len()
            )
        };
        println!(
            "  {}: mean delivered {:.0}, mean alive at end {:.1}, mean first death {}",
            cr.cell.label(),
            delivered,
            alive,
            death
        );
    }
    Ok(())
}

fn main() {
    env_logger::init();
    let args = Args::parse();
    if let Err(e) = run(args) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
