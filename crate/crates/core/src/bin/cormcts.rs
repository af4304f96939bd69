use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cormcts::harness::{
    deterministic_from_env, parse_seeds, run_batch, run_scenario, BatchOptions, PlannerKind, PlannerVariant,
    RunOverrides,
};
use cormcts::mcts::DecisionRule;
use cormcts::world::{load_scenario, MissionStatus, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "cormcts",
    version,
    about = "Anytime MCTS maneuver planner and scenario harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerArg {
    Cormcts,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Accumulated,
    Mean,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario in closed loop.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "cormcts")]
        planner: PlannerArg,
        /// Wall-clock budget per planner call; without it only the node cap applies.
        #[arg(long)]
        budget_ms: Option<f64>,
        #[arg(long)]
        max_nodes: Option<usize>,
        #[arg(long)]
        no_pruning: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the trace as line-delimited JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long, value_enum)]
        decision_rule: Option<RuleArg>,
    },
    /// Run every scenario in a directory against several planners and seeds.
    Batch {
        #[arg(long)]
        scenarios: PathBuf,
        /// Comma-separated: cormcts, cormcts-nopruning, fixed.
        #[arg(long, default_value = "cormcts,fixed")]
        planners: String,
        /// `a..b`, `a..=b` or a comma-separated list.
        #[arg(long, default_value = "0..20")]
        seeds: String,
        #[arg(long)]
        report_out: PathBuf,
        /// CSV of per-call runtimes; defaults next to the report.
        #[arg(long)]
        runtimes_out: Option<PathBuf>,
        #[arg(long)]
        max_nodes: Option<usize>,
        #[arg(long)]
        budget_ms: Option<f64>,
        /// Run independent triples in parallel (runtime figures get noisier).
        #[arg(long)]
        parallel: bool,
    },
}

fn load_dir(dir: &Path) -> Result<Vec<ScenarioConfig>, String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("{}: no scenario files", dir.display()));
    }
    paths
        .iter()
        .map(|p| {
            let mut config = load_scenario(p).map_err(|e| format!("{}: {e}", p.display()))?;
            if config.name.is_none() {
                config.name = p.file_stem().map(|s| s.to_string_lossy().into_owned());
            }
            Ok(config)
        })
        .collect()
}

fn execute(cli: Cli) -> Result<ExitCode, String> {
    let deterministic = deterministic_from_env();
    match cli.command {
        Command::Run {
            scenario,
            planner,
            budget_ms,
            max_nodes,
            no_pruning,
            seed,
            trace_out,
            decision_rule,
        } => {
            let config = load_scenario(&scenario).map_err(|e| format!("{}: {e}", scenario.display()))?;
            let overrides = RunOverrides {
                seed,
                max_nodes,
                budget_ms,
                node_cap_only: deterministic || budget_ms.is_none(),
                no_pruning,
                decision_rule: decision_rule.map(|r| match r {
                    RuleArg::Accumulated => DecisionRule::Accumulated,
                    RuleArg::Mean => DecisionRule::Mean,
                }),
                ..RunOverrides::default()
            };
            let kind = match planner {
                PlannerArg::Cormcts => PlannerKind::Cormcts,
                PlannerArg::Fixed => PlannerKind::Fixed,
            };
            let trace = run_scenario(&config, kind, &overrides).map_err(|e| e.to_string())?;
            if let Some(path) = trace_out {
                trace
                    .write_jsonl(&path, !deterministic)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let s = &trace.summary;
            let actions: Vec<&str> = trace.actions().map(|a| a.as_str()).collect();
            println!(
                "{} {:?} seed={} outcome={:?}{} ticks={} t={:.1}s",
                s.scenario,
                s.planner,
                s.seed,
                s.outcome,
                s.failure.map(|f| format!(" ({f:?})")).unwrap_or_default(),
                s.total_ticks,
                s.end_time_s
            );
            println!("actions: {}", actions.join(" "));
            if let Some(r) = &s.runtime {
                println!(
                    "planner ms: min {:.3} median {:.3} max {:.3}",
                    r.min_ms, r.median_ms, r.max_ms
                );
            }
            if let Some(err) = &s.error {
                eprintln!("error: {err}");
                return Ok(ExitCode::from(1));
            }
            Ok(if s.outcome == MissionStatus::Success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Batch {
            scenarios,
            planners,
            seeds,
            report_out,
            runtimes_out,
            max_nodes,
            budget_ms,
            parallel,
        } => {
            let configs = load_dir(&scenarios)?;
            let planners = planners
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse::<PlannerVariant>)
                .collect::<Result<Vec<_>, _>>()?;
            if planners.is_empty() {
                return Err("no planners given".into());
            }
            let seeds = parse_seeds(&seeds)?;
            let options = BatchOptions {
                overrides: RunOverrides {
                    max_nodes,
                    budget_ms,
                    node_cap_only: deterministic || budget_ms.is_none(),
                    ..RunOverrides::default()
                },
                parallel,
            };
            let report = run_batch(&configs, &planners, &seeds, &options);
            std::fs::write(&report_out, report.to_json_pretty())
                .map_err(|e| format!("{}: {e}", report_out.display()))?;
            let csv_path = runtimes_out.unwrap_or_else(|| report_out.with_extension("runtimes.csv"));
            let file =
                std::fs::File::create(&csv_path).map_err(|e| format!("{}: {e}", csv_path.display()))?;
            report
                .write_runtimes_csv(file)
                .map_err(|e| format!("{}: {e}", csv_path.display()))?;
            for cell in &report.cells {
                println!(
                    "{:<18} {:<24} success {:>2}/{:<2} failure {:>2} unfinished {:>2} errors {:>2} median {:.3} ms",
                    cell.planner.name(),
                    cell.scenario,
                    cell.successes,
                    cell.runs,
                    cell.failures,
                    cell.unfinished,
                    cell.errors,
                    cell.runtime.map_or(0.0, |r| r.median_ms)
                );
            }
            Ok(if report.any_error() {
                ExitCode::from(1)
            } else if report.all_succeeded() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
