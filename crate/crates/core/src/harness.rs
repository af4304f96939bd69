//! Closed-loop scenario runner, batch experiments and trace export.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{plan_fixed, ActionValue, FixedHorizonConfig};
use crate::dynamics::{ManeuverAction, Simulator};
use crate::mcts::{search, DecisionRule, DrivingDomain, NodeId, SearchConfig, StopReason};
use crate::utility::ProfitBreakdown;
use crate::world::{
    mission_status, FailureCause, MissionStatus, RoadNetwork, ScenarioConfig, ValidationError, VehicleState,
    WorldState,
};

/// Environment variable that, when set to `1`, drops wall-clock budgets.
pub const DETERMINISTIC_ENV: &str = "CORMCTS_DETERMINISTIC";

pub fn deterministic_from_env() -> bool {
    std::env::var(DETERMINISTIC_ENV).is_ok_and(|v| v.trim() == "1")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Cormcts,
    Fixed,
}

/// Planner configurations compared in batch runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlannerVariant {
    #[serde(rename = "cormcts")]
    Cormcts,
    #[serde(rename = "cormcts-nopruning")]
    CormctsNoPruning,
    #[serde(rename = "fixed")]
    Fixed,
}

impl PlannerVariant {
    pub const ALL: [PlannerVariant; 3] = [Self::Cormcts, Self::CormctsNoPruning, Self::Fixed];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cormcts => "cormcts",
            Self::CormctsNoPruning => "cormcts-nopruning",
            Self::Fixed => "fixed",
        }
    }

    pub fn kind(self) -> PlannerKind {
        match self {
            Self::Fixed => PlannerKind::Fixed,
            _ => PlannerKind::Cormcts,
        }
    }
}

impl fmt::Display for PlannerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| format!("unknown planner `{s}` (expected cormcts, cormcts-nopruning or fixed)"))
    }
}

/// Run-level settings layered over the scenario's own search settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub max_nodes: Option<usize>,
    pub budget_ms: Option<f64>,
    /// Ignore any wall-clock limit and stop on the node cap only.
    pub node_cap_only: bool,
    pub no_pruning: bool,
    pub decision_rule: Option<DecisionRule>,
    pub fixed: FixedHorizonConfig,
}

impl RunOverrides {
    pub fn deterministic() -> Self {
        Self {
            node_cap_only: true,
            ..Self::default()
        }
    }
}

/// Effective search configuration for a run before per-tick seeding.
pub fn resolve_search_config(scenario: &ScenarioConfig, overrides: &RunOverrides) -> SearchConfig {
    let mut config = SearchConfig::default();
    scenario.search.apply(&mut config);
    if let Some(n) = overrides.max_nodes {
        config.budget.max_nodes = n;
    }
    if let Some(ms) = overrides.budget_ms {
        config.budget.max_wall_time_s = Some(ms / 1000.0);
    }
    if overrides.node_cap_only {
        config.budget.max_wall_time_s = None;
    }
    if overrides.no_pruning {
        config.pruning_enabled = false;
    }
    if let Some(rule) = overrides.decision_rule {
        config.decision_rule = rule;
    }
    config.rng_seed = overrides.seed.unwrap_or(scenario.rng_seed);
    config
}

/// Seed for one replan tick, derived from the run seed.
pub fn tick_seed(seed: u64, tick: u64) -> u64 {
    let mut z = seed ^ tick.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub action: Option<ManeuverAction>,
    pub depth: u32,
    pub v: f64,
    pub visits: u64,
    pub accumulated: f64,
    pub breakdown: ProfitBreakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub iterations: u64,
    pub node_count: usize,
    pub simulations: u64,
    pub stop_reason: StopReason,
    pub zero_value_nodes: usize,
    pub nodes: Vec<NodeRecord>,
}

impl SearchRecord {
    /// `(action, U, m)` for each root child.
    pub fn root_children(&self) -> impl Iterator<Item = (ManeuverAction, f64, u64)> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.parent == Some(NodeId(0)))
            .filter_map(|n| n.action.map(|a| (a, n.accumulated, n.visits)))
    }
}

/// One replan instant: the state the planner saw and what it chose. The
/// final record of a run carries the state in which the run ended and no
/// action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub time_s: f64,
    pub ego: VehicleState,
    pub others: Vec<VehicleState>,
    pub status: MissionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureCause>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ManeuverAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<ActionValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner_ms: Option<f64>,
}

impl TickRecord {
    pub fn world(&self) -> WorldState {
        WorldState {
            ego: self.ego.clone(),
            others: self.others.clone(),
            time_s: self.time_s,
            failure: self.failure,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeSummary {
    pub count: usize,
    pub min_ms: f64,
    pub p25_ms: f64,
    pub median_ms: f64,
    pub p75_ms: f64,
    pub max_ms: f64,
}

impl RuntimeSummary {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            count: sorted.len(),
            min_ms: sorted[0],
            p25_ms: quantile(&sorted, 0.25),
            median_ms: quantile(&sorted, 0.5),
            p75_ms: quantile(&sorted, 0.75),
            max_ms: sorted[sorted.len() - 1],
        })
    }
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub planner: PlannerKind,
    pub pruning: bool,
    pub seed: u64,
    pub outcome: MissionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureCause>,
    pub total_ticks: usize,
    pub end_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime: Option<RuntimeSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub ticks: Vec<TickRecord>,
    pub summary: RunSummary,
}

impl RunTrace {
    pub fn outcome(&self) -> MissionStatus {
        self.summary.outcome
    }

    pub fn is_success(&self) -> bool {
        self.summary.outcome == MissionStatus::Success && self.summary.error.is_none()
    }

    /// Planner wall times of every planned tick.
    pub fn planner_ms(&self) -> Vec<f64> {
        self.ticks.iter().filter_map(|t| t.planner_ms).collect()
    }

    pub fn actions(&self) -> impl Iterator<Item = ManeuverAction> + '_ {
        self.ticks.iter().filter_map(|t| t.action)
    }

    /// Copy without wall-clock measurements, whose values vary run to run.
    pub fn without_timing(&self) -> Self {
        let mut copy = self.clone();
        for t in &mut copy.ticks {
            t.planner_ms = None;
        }
        copy.summary.runtime = None;
        copy
    }

    /// One JSON object per tick followed by a `{"summary": ...}` line.
    pub fn to_jsonl(&self, include_timing: bool) -> String {
        let trace = if include_timing {
            self.clone()
        } else {
            self.without_timing()
        };
        let mut out = String::new();
        for tick in &trace.ticks {
            out.push_str(&serde_json::to_string(tick).expect("tick records serialize"));
            out.push('\n');
        }
        let summary = serde_json::json!({ "summary": trace.summary });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        struct SummaryLine {
            summary: RunSummary,
        }
        let mut ticks = Vec::new();
        let mut summary = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            if line.starts_with("{\"summary\"") {
                summary = Some(serde_json::from_str::<SummaryLine>(line)?.summary);
            } else {
                ticks.push(serde_json::from_str(line)?);
            }
        }
        let summary = summary.ok_or_else(|| serde::de::Error::custom("trace has no summary line"))?;
        Ok(Self { ticks, summary })
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>, include_timing: bool) -> std::io::Result<()> {
        std::fs::write(path, self.to_jsonl(include_timing))
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    InvalidScenario(#[from] ValidationError),
    #[error("invalid search configuration: {0}")]
    InvalidSearch(String),
    #[error("invalid baseline configuration: {0}")]
    InvalidBaseline(String),
}

struct Planned {
    action: ManeuverAction,
    search: Option<SearchRecord>,
    values: Option<Vec<ActionValue>>,
}

/// Closed loop: plan, hold the chosen action for one replan period, repeat
/// until the mission ends or the scenario duration elapses. Planner errors
/// end the run early and are recorded in the summary.
pub fn run_scenario(
    scenario: &ScenarioConfig,
    planner: PlannerKind,
    overrides: &RunOverrides,
) -> Result<RunTrace, RunError> {
    scenario.validate()?;
    let base = resolve_search_config(scenario, overrides);
    base.validate().map_err(RunError::InvalidSearch)?;
    overrides.fixed.validate().map_err(RunError::InvalidBaseline)?;

    let network = &scenario.network;
    let params = &scenario.dynamics;
    let weights = &scenario.utility_weights;
    let model = scenario.other_vehicle_model;
    let sim = Simulator::new(network, params, model);
    let domain = DrivingDomain::new(network, params, model, weights);

    let mut world = scenario.initial.clone();
    let mut ticks = Vec::new();
    let mut error = None;
    let mut status = mission_status(&world, network);
    let mut tick = 0u64;

    while status == MissionStatus::InProgress && world.time_s < scenario.duration_s - 1e-9 {
        let started = Instant::now();
        let planner_ms;
        let planned = match planner {
            PlannerKind::Cormcts => {
                let mut config = base.clone();
                config.rng_seed = tick_seed(base.rng_seed, tick);
                let result = search(&domain, world.clone(), &config);
                planner_ms = started.elapsed().as_secs_f64() * 1000.0;
                result
                    .map(|outcome| Planned {
                        action: outcome.action,
                        search: Some(SearchRecord {
                            iterations: outcome.stats.iterations,
                            node_count: outcome.stats.node_count,
                            simulations: outcome.stats.simulations,
                            stop_reason: outcome.stats.stop_reason,
                            zero_value_nodes: outcome.stats.zero_value_nodes,
                            nodes: outcome
                                .tree
                                .nodes()
                                .map(|(id, n)| NodeRecord {
                                    id,
                                    parent: n.parent,
                                    action: n.action,
                                    depth: n.depth,
                                    v: n.v,
                                    visits: n.visits,
                                    accumulated: n.total,
                                    breakdown: n.detail.clone(),
                                })
                                .collect(),
                        }),
                        values: None,
                    })
                    .map_err(|e| e.to_string())
            }
            PlannerKind::Fixed => {
                let result = plan_fixed(&world, network, model, &overrides.fixed, weights, params);
                planner_ms = started.elapsed().as_secs_f64() * 1000.0;
                result
                    .map(|(action, table)| Planned {
                        action,
                        search: None,
                        values: Some(table),
                    })
                    .map_err(|e| e.to_string())
            }
        };
        let planned = match planned {
            Ok(p) => p,
            Err(e) => {
                error = Some(format!("planner failed at t = {:.1} s: {e}", world.time_s));
                break;
            }
        };
        let next = match sim.sustain_until(
            &world,
            planned.action,
            scenario.replan_period_s,
            MissionStatus::is_terminal,
        ) {
            Ok(rollout) => rollout.world,
            Err(e) => {
                error = Some(format!(
                    "chosen action could not be applied at t = {:.1} s: {e}",
                    world.time_s
                ));
                break;
            }
        };
        ticks.push(TickRecord {
            tick,
            time_s: world.time_s,
            ego: world.ego.clone(),
            others: world.others.clone(),
            status,
            failure: world.failure,
            action: Some(planned.action),
            search: planned.search,
            values: planned.values,
            planner_ms: Some(planner_ms),
        });
        world = next;
        status = mission_status(&world, network);
        tick += 1;
    }

    ticks.push(TickRecord {
        tick,
        time_s: world.time_s,
        ego: world.ego.clone(),
        others: world.others.clone(),
        status,
        failure: world.failure,
        action: None,
        search: None,
        values: None,
        planner_ms: None,
    });
    let planner_ms: Vec<f64> = ticks.iter().filter_map(|t| t.planner_ms).collect();
    let summary = RunSummary {
        scenario: scenario.name.clone().unwrap_or_else(|| "unnamed".into()),
        planner,
        pruning: base.pruning_enabled,
        seed: base.rng_seed,
        outcome: status,
        failure: world
            .failure
            .or_else(|| crate::world::failure_cause(&world, network)),
        total_ticks: ticks.len(),
        end_time_s: world.time_s,
        error,
        runtime: RuntimeSummary::from_samples(&planner_ms),
    };
    Ok(RunTrace { ticks, summary })
}

/// Re-simulates a trace from the scenario's initial state using the
/// recorded actions; returns the recomputed world at every record.
pub fn replay(scenario: &ScenarioConfig, trace: &RunTrace) -> Vec<WorldState> {
    let sim = Simulator::new(
        &scenario.network,
        &scenario.dynamics,
        scenario.other_vehicle_model,
    );
    let mut world = scenario.initial.clone();
    let mut worlds = vec![world.clone()];
    for action in trace.actions() {
        match sim.sustain_until(
            &world,
            action,
            scenario.replan_period_s,
            MissionStatus::is_terminal,
        ) {
            Ok(rollout) => world = rollout.world,
            Err(_) => break,
        }
        worlds.push(world.clone());
    }
    worlds
}

/// Largest positional or speed deviation between a trace's records and its
/// replay, or `None` if the record counts differ.
pub fn replay_deviation(scenario: &ScenarioConfig, trace: &RunTrace) -> Option<f64> {
    let worlds = replay(scenario, trace);
    if worlds.len() != trace.ticks.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for (w, t) in worlds.iter().zip(&trace.ticks) {
        if w.ego.lane != t.ego.lane || w.others.len() != t.others.len() {
            return Some(f64::INFINITY);
        }
        worst = worst
            .max((w.ego.s_m - t.ego.s_m).abs())
            .max((w.ego.speed_mps - t.ego.speed_mps).abs())
            .max((w.ego.lateral_progress - t.ego.lateral_progress).abs());
        for (a, b) in w.others.iter().zip(&t.others) {
            worst = worst
                .max((a.s_m - b.s_m).abs())
                .max((a.speed_mps - b.speed_mps).abs());
        }
    }
    Some(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub planner: PlannerVariant,
    pub scenario: String,
    pub seed: u64,
    pub outcome: MissionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureCause>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub ticks: usize,
    pub first_action: Option<ManeuverAction>,
    pub completed_left_change: bool,
    pub zero_value_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeSample {
    pub planner: PlannerVariant,
    pub scenario: String,
    pub seed: u64,
    pub tick: u64,
    pub ms: f64,
    pub node_count: usize,
    pub simulations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchCell {
    pub planner: PlannerVariant,
    pub scenario: String,
    pub runs: usize,
    pub successes: usize,
    pub failures: usize,
    pub unfinished: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub runtime: Option<RuntimeSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: PlannerVariant,
    pub runs: usize,
    pub success_rate: f64,
    pub runtime: Option<RuntimeSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub planners: Vec<PlannerSummary>,
    pub cells: Vec<BatchCell>,
    pub outcomes: Vec<RunOutcome>,
    #[serde(skip)]
    pub runtimes: Vec<RuntimeSample>,
}

impl BatchReport {
    pub fn cell(&self, planner: PlannerVariant, scenario: &str) -> Option<&BatchCell> {
        self.cells
            .iter()
            .find(|c| c.planner == planner && c.scenario == scenario)
    }

    pub fn planner(&self, planner: PlannerVariant) -> Option<&PlannerSummary> {
        self.planners.iter().find(|p| p.planner == planner)
    }

    pub fn all_succeeded(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| o.outcome == MissionStatus::Success && o.error.is_none())
    }

    pub fn any_error(&self) -> bool {
        self.outcomes.iter().any(|o| o.error.is_some())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("batch reports serialize")
    }

    /// Raw per-call runtimes as CSV.
    pub fn write_runtimes_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for sample in &self.runtimes {
            writer.serialize(sample)?;
        }
        writer.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchOptions {
    /// Base overrides; seed and pruning are set per run.
    pub overrides: RunOverrides,
    /// Run triples on the rayon pool. Leave off when timing matters.
    pub parallel: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            overrides: RunOverrides::deterministic(),
            parallel: false,
        }
    }
}

fn scenario_name(s: &ScenarioConfig, index: usize) -> String {
    s.name.clone().unwrap_or_else(|| format!("scenario{index}"))
}

/// Runs every (scenario, planner, seed) triple and aggregates outcomes and
/// planner runtimes. Individual run problems are recorded, not raised.
pub fn run_batch(
    scenarios: &[ScenarioConfig],
    planners: &[PlannerVariant],
    seeds: &[u64],
    options: &BatchOptions,
) -> BatchReport {
    let triples: Vec<(usize, PlannerVariant, u64)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(i, _)| {
            planners
                .iter()
                .flat_map(move |&p| seeds.iter().map(move |&s| (i, p, s)))
        })
        .collect();

    let run_one = |&(i, planner, seed): &(usize, PlannerVariant, u64)| {
        let scenario = &scenarios[i];
        let mut overrides = options.overrides.clone();
        overrides.seed = Some(seed);
        overrides.no_pruning = planner == PlannerVariant::CormctsNoPruning;
        let name = scenario_name(scenario, i);
        let result = run_scenario(scenario, planner.kind(), &overrides);
        (i, planner, seed, name, result)
    };
    let results: Vec<_> = if options.parallel {
        triples.par_iter().map(run_one).collect()
    } else {
        triples.iter().map(run_one).collect()
    };

    let mut outcomes = Vec::new();
    let mut runtimes = Vec::new();
    for (i, planner, seed, name, result) in results {
        match result {
            Ok(trace) => {
                for t in &trace.ticks {
                    if let Some(ms) = t.planner_ms {
                        runtimes.push(RuntimeSample {
                            planner,
                            scenario: name.clone(),
                            seed,
                            tick: t.tick,
                            ms,
                            node_count: t.search.as_ref().map_or(0, |s| s.node_count),
                            simulations: t.search.as_ref().map_or(0, |s| s.simulations),
                        });
                    }
                }
                outcomes.push(RunOutcome {
                    planner,
                    scenario: name,
                    seed,
                    outcome: trace.summary.outcome,
                    failure: trace.summary.failure,
                    error: trace.summary.error.clone(),
                    ticks: trace.ticks.len(),
                    first_action: trace.actions().next(),
                    completed_left_change: completed_lane_change_to_left(&trace, &scenarios[i].network),
                    zero_value_nodes: trace
                        .ticks
                        .iter()
                        .filter_map(|t| t.search.as_ref())
                        .map(|s| s.zero_value_nodes)
                        .sum(),
                });
            }
            Err(e) => outcomes.push(RunOutcome {
                planner,
                scenario: name,
                seed,
                outcome: MissionStatus::InProgress,
                failure: None,
                error: Some(e.to_string()),
                ticks: 0,
                first_action: None,
                completed_left_change: false,
                zero_value_nodes: 0,
            }),
        }
    }

    let mut cells = Vec::new();
    for (i, scenario) in scenarios.iter().enumerate() {
        let name = scenario_name(scenario, i);
        for &planner in planners {
            let rows: Vec<&RunOutcome> = outcomes
                .iter()
                .filter(|o| o.planner == planner && o.scenario == name)
                .collect();
            let ms: Vec<f64> = runtimes
                .iter()
                .filter(|r| r.planner == planner && r.scenario == name)
                .map(|r| r.ms)
                .collect();
            cells.push(cell(planner, name.clone(), &rows, &ms));
        }
    }
    let planner_summaries = planners
        .iter()
        .map(|&planner| {
            let rows: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.planner == planner).collect();
            let ms: Vec<f64> = runtimes
                .iter()
                .filter(|r| r.planner == planner)
                .map(|r| r.ms)
                .collect();
            let c = cell(planner, String::new(), &rows, &ms);
            PlannerSummary {
                planner,
                runs: c.runs,
                success_rate: c.success_rate,
                runtime: c.runtime,
            }
        })
        .collect();

    BatchReport {
        planners: planner_summaries,
        cells,
        outcomes,
        runtimes,
    }
}

fn cell(planner: PlannerVariant, scenario: String, rows: &[&RunOutcome], ms: &[f64]) -> BatchCell {
    let count = |pred: &dyn Fn(&RunOutcome) -> bool| rows.iter().filter(|o| pred(o)).count();
    let errors = count(&|o| o.error.is_some());
    let successes = count(&|o| o.error.is_none() && o.outcome == MissionStatus::Success);
    let failures = count(&|o| o.error.is_none() && o.outcome == MissionStatus::Failure);
    let unfinished = count(&|o| o.error.is_none() && o.outcome == MissionStatus::InProgress);
    BatchCell {
        planner,
        scenario,
        runs: rows.len(),
        successes,
        failures,
        unfinished,
        errors,
        success_rate: if rows.is_empty() {
            0.0
        } else {
            successes as f64 / rows.len() as f64
        },
        runtime: RuntimeSummary::from_samples(ms),
    }
}

/// Whether the ego ever settled into a lane left of the one it was in.
pub fn completed_lane_change_to_left(trace: &RunTrace, network: &RoadNetwork) -> bool {
    trace.ticks.windows(2).any(|w| {
        network
            .lane(w[0].ego.lane)
            .and_then(|l| l.left_neighbor)
            .is_some_and(|left| w[1].ego.lane == left)
    })
}

/// Parses `a..b` (inclusive start, exclusive end), `a..=b`, or a
/// comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    let num = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|e| format!("bad seed `{s}`: {e}"))
    };
    let seeds = if let Some((a, b)) = text.split_once("..=") {
        (num(a)?..=num(b)?).collect::<Vec<_>>()
    } else if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("seed range `{text}` is empty"));
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("4,9").unwrap(), vec![4, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5), 2.5);
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
    }

    #[test]
    fn planner_names_round_trip() {
        for p in PlannerVariant::ALL {
            assert_eq!(p.name().parse::<PlannerVariant>().unwrap(), p);
        }
    }

    #[test]
    fn tick_seeds_differ() {
        assert_ne!(tick_seed(0, 0), tick_seed(0, 1));
        assert_ne!(tick_seed(0, 0), tick_seed(1, 0));
    }
}
