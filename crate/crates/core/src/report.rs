//! Plan execution and file emission: per-seed metric CSVs, per-cell
//! aggregates, summary JSON, topology dumps, and the paired figure series.
//!
//! Runs shorter than the horizon (network died) are padded with dead rows
//! (alive = 0, zeros elsewhere) so every file spans the full horizon and
//! aggregates are plain column-wise means over all seeds.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{run_simulation, Protocol, RelayCount, SimResult};
use crate::error::{Result, SimError};
use crate::metrics::{RoundMetrics, SummaryStats};
use crate::plan::{Cell, ExperimentPlan};

pub const FIGURE_IDS: [&str; 6] = [
    "delay",
    "loss",
    "throughput",
    "inner_energy",
    "middle_energy",
    "outer_energy",
];

type MetricFn = fn(&RoundMetrics) -> f64;

/// Metric columns shared by the aggregate and figure writers, in the
/// documented CSV order.
const METRICS: [(&str, MetricFn); 10] = [
    ("alive", |m| m.alive as f64),
    ("inner_energy_j", |m| m.inner_energy_j),
    ("middle_energy_j", |m| m.middle_energy_j),
    ("outer_energy_j", |m| m.outer_energy_j),
    ("relay_energy_j", |m| m.relay_energy_j),
    ("packets_offered", |m| m.packets_offered as f64),
    ("packets_delivered", |m| m.packets_delivered as f64),
    ("packets_lost", |m| m.packets_lost as f64),
    ("mean_delay_s", |m| m.mean_delay_s),
    ("throughput_bps", |m| m.throughput_bps),
];

struct FigureSpec {
    cells: Vec<Cell>,
    metric: MetricFn,
}

fn figure_spec(id: &str) -> Result<FigureSpec> {
    let relay_sweep = || {
        vec![
            Cell::new(Protocol::Edctr, RelayCount::Fixed(0)),
            Cell::new(Protocol::Edctr, RelayCount::Fixed(2)),
            Cell::new(Protocol::Edctr, RelayCount::Fixed(4)),
        ]
    };
    let baseline_pair = || {
        vec![
            Cell::new(Protocol::Edctr, RelayCount::Fixed(4)),
            Cell::new(Protocol::Leach, RelayCount::Fixed(0)),
        ]
    };
    let spec = match id {
        "delay" => FigureSpec {
            cells: relay_sweep(),
            metric: |m| m.mean_delay_s,
        },
        "loss" => FigureSpec {
            cells: relay_sweep(),
            metric: |m| m.packets_lost as f64,
        },
        "throughput" => FigureSpec {
            cells: relay_sweep(),
            metric: |m| m.throughput_bps,
        },
        "inner_energy" => FigureSpec {
            cells: baseline_pair(),
            metric: |m| m.inner_energy_j,
        },
        "middle_energy" => FigureSpec {
            cells: baseline_pair(),
            metric: |m| m.middle_energy_j,
        },
        "outer_energy" => FigureSpec {
            cells: baseline_pair(),
            metric: |m| m.outer_energy_j,
        },
        _ => {
            return Err(SimError::UnknownFigure {
                id: id.to_string(),
                valid: FIGURE_IDS.join(", "),
            })
        }
    };
    Ok(spec)
}

/// All runs of one sweep cell, padded to the horizon.
pub struct CellResult {
    pub cell: Cell,
    pub seeds: Vec<u64>,
    pub results: Vec<SimResult>,
    /// `results[i].rounds` extended with dead rows up to the horizon.
    pub padded: Vec<Vec<RoundMetrics>>,
}

impl CellResult {
    fn new(cell: Cell, seeds: Vec<u64>, results: Vec<SimResult>, horizon: u32) -> Self {
        let padded = results
            .iter()
            .map(|r| pad_rows(&r.rounds, horizon, r.config.round_duration_s))
            .collect();
        CellResult {
            cell,
            seeds,
            results,
            padded,
        }
    }

    /// Seed-mean of `metric` at 0-based round index `i`.
    fn mean_at(&self, metric: MetricFn, i: usize) -> f64 {
        self.padded.iter().map(|rows| metric(&rows[i])).sum::<f64>() / self.padded.len() as f64
    }
}

fn pad_rows(rows: &[RoundMetrics], horizon: u32, round_duration_s: f64) -> Vec<RoundMetrics> {
    let mut out = rows.to_vec();
    for round in (rows.len() as u32 + 1)..=horizon {
        out.push(RoundMetrics {
            round,
            time_s: round as f64 * round_duration_s,
            alive: 0,
            inner_energy_j: 0.0,
            middle_energy_j: 0.0,
            outer_energy_j: 0.0,
            relay_energy_j: 0.0,
            packets_offered: 0,
            packets_delivered: 0,
            packets_lost: 0,
            mean_delay_s: 0.0,
            throughput_bps: 0.0,
        });
    }
    out
}

fn write_metrics_csv(path: &Path, rows: &[RoundMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_aggregate_csv(path: &Path, runs: &[Vec<RoundMetrics>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["round".to_string(), "time_s".to_string()];
    for (name, _) in METRICS {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_std"));
    }
    w.write_record(&header)?;
    let rounds = runs.iter().map(|r| r.len()).max().unwrap_or(0);
    let n = runs.len() as f64;
    for i in 0..rounds {
        let mut rec = vec![runs[0][i].round.to_string(), runs[0][i].time_s.to_string()];
        for (_, metric) in METRICS {
            let values: Vec<f64> = runs.iter().map(|r| metric(&r[i])).collect();
            let mean = values.iter().sum::<f64>() / n;
            let std = if runs.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            rec.push(mean.to_string());
            rec.push(std.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CellSummary<'a> {
    cell: Cell,
    seeds: &'a [u64],
    /// Round used in the means when a death never happened.
    censored_at: u32,
    mean_first_node_death: f64,
    mean_last_node_death: f64,
    mean_alive_at_end: f64,
    mean_total_delivered: f64,
    mean_total_lost: f64,
    mean_total_energy_j: f64,
    mean_delay_s: f64,
    per_seed: &'a [SummaryStats],
}

fn write_summary_json(path: &Path, cell: Cell, seeds: &[u64], results: &[SimResult]) -> Result<()> {
    let horizon = results[0].config.rounds;
    let n = results.len() as f64;
    let censored = |v: Option<u32>| v.unwrap_or(horizon + 1) as f64;
    let summaries: Vec<SummaryStats> = results.iter().map(|r| r.summary.clone()).collect();
    let summary = CellSummary {
        cell,
        seeds,
        censored_at: horizon + 1,
        mean_first_node_death: summaries
            .iter()
            .map(|s| censored(s.first_node_death))
            .sum::<f64>()
            / n,
        mean_last_node_death: summaries
            .iter()
            .map(|s| censored(s.last_node_death))
            .sum::<f64>()
            / n,
        mean_alive_at_end: summaries.iter().map(|s| s.alive_at_end as f64).sum::<f64>() / n,
        mean_total_delivered: summaries
            .iter()
            .map(|s| s.total_delivered as f64)
            .sum::<f64>()
            / n,
        mean_total_lost: summaries.iter().map(|s| s.total_lost as f64).sum::<f64>() / n,
        mean_total_energy_j: summaries.iter().map(|s| s.total_energy_j).sum::<f64>() / n,
        mean_delay_s: summaries.iter().map(|s| s.mean_delay_s).sum::<f64>() / n,
        per_seed: &summaries,
    };
    fs::write(path, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

/// Write one figure's paired series: x = round and time, one y column per
/// cell (seed-mean of the figure's metric). Errors if a required cell is
/// absent from `results`.
pub fn emit_figure_series(
    results: &[CellResult],
    figure_id: &str,
    out_dir: &Path,
) -> Result<PathBuf> {
    let spec = figure_spec(figure_id)?;
    let mut columns: Vec<&CellResult> = Vec::with_capacity(spec.cells.len());
    for needed in &spec.cells {
        let found = results.iter().find(|r| r.cell == *needed).ok_or_else(|| {
            SimError::MissingCell {
                figure: figure_id.to_string(),
                protocol: needed.protocol.label().to_string(),
                relays: match needed.relays {
                    RelayCount::Fixed(k) => k,
                    RelayCount::Auto => usize::MAX, // figure specs use fixed counts
                },
            }
        })?;
        columns.push(found);
    }
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{figure_id}.csv"));
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["round".to_string(), "time_s".to_string()];
    header.extend(columns.iter().map(|c| c.cell.label()));
    w.write_record(&header)?;
    let rounds = columns
        .iter()
        .map(|c| c.padded.first().map_or(0, Vec::len))
        .min()
        .unwrap_or(0);
    for i in 0..rounds {
        let base = &columns[0].padded[0][i];
        let mut rec = vec![base.round.to_string(), base.time_s.to_string()];
        for c in &columns {
            rec.push(c.mean_at(spec.metric, i).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

pub struct PlanOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub cells: Vec<CellResult>,
}

/// Run every (cell, seed) combination and write the full output tree under
/// `<output_dir>/plan-<hash>/`. Simulations run in parallel; files are
/// written sequentially in a fixed order so reruns are byte-identical.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutput> {
    plan.validate()?;
    let dir = plan.output_dir.join(format!("plan-{}", plan.hash()));
    fs::create_dir_all(&dir)?;
    // probe write: an unwritable target fails here, before any simulation
    let plan_path = dir.join("plan.json");
    fs::write(&plan_path, plan.to_json() + "\n")?;
    let mut files = vec![plan_path];

    let jobs: Vec<(usize, u64)> = (0..plan.cells.len())
        .flat_map(|ci| plan.seeds.iter().map(move |&s| (ci, s)))
        .collect();
    let results: Result<Vec<SimResult>> = jobs
        .par_iter()
        .map(|&(ci, seed)| run_simulation(plan.config_for(plan.cells[ci], seed)))
        .collect();
    let mut results = results?;

    let mut cells: Vec<CellResult> = Vec::with_capacity(plan.cells.len());
    for &cell in plan.cells.iter().rev() {
        let tail = results.split_off(results.len() - plan.seeds.len());
        cells.push(CellResult::new(
            cell,
            plan.seeds.clone(),
            tail,
            plan.base.rounds,
        ));
    }
    cells.reverse();

    for cr in &cells {
        let cell_dir = dir.join(cr.cell.label());
        fs::create_dir_all(&cell_dir)?;
        for (si, &seed) in cr.seeds.iter().enumerate() {
            let run_path = cell_dir.join(format!("seed-{seed}.csv"));
            write_metrics_csv(&run_path, &cr.padded[si])?;
            files.push(run_path);
            let topo_path = cell_dir.join(format!("topology-seed-{seed}.json"));
            fs::write(
                &topo_path,
                serde_json::to_string_pretty(&cr.results[si].topology)? + "\n",
            )?;
            files.push(topo_path);
            if let Some(traces) = &cr.results[si].traces {
                let trace_path = cell_dir.join(format!("trace-seed-{seed}.json"));
                fs::write(&trace_path, serde_json::to_string_pretty(traces)? + "\n")?;
                files.push(trace_path);
            }
        }
        let agg_path = cell_dir.join("aggregate.csv");
        write_aggregate_csv(&agg_path, &cr.padded)?;
        files.push(agg_path);
        let summary_path = cell_dir.join("summary.json");
        write_summary_json(&summary_path, cr.cell, &cr.seeds, &cr.results)?;
        files.push(summary_path);
    }

    // emit every figure whose required cells this plan provides
    let have: HashSet<Cell> = cells.iter().map(|c| c.cell).collect();
    for id in FIGURE_IDS {
        let spec = figure_spec(id).expect("registry ids are valid");
        if spec.cells.iter().all(|c| have.contains(c)) {
            files.push(emit_figure_series(&cells, id, &dir.join("figures"))?);
        }
    }
    Ok(PlanOutput { dir, files, cells })
}
