use std::time::Instant;

use cormcts::baseline::{plan_fixed, FixedHorizonConfig};
use cormcts::dynamics::{ManeuverAction, Simulator};
use cormcts::harness::{completed_lane_change_to_left, run_scenario, PlannerKind, RunOverrides, RunTrace};
use cormcts::mcts::{plan, SearchBudget, SearchConfig, StopReason};
use cormcts::utility::evaluate_profit;
use cormcts::world::{bundled, FailureCause, MissionStatus, ScenarioConfig, ScenarioError};

fn run(scenario: &ScenarioConfig, planner: PlannerKind, seed: u64) -> RunTrace {
    let overrides = RunOverrides {
        seed: Some(seed),
        ..RunOverrides::deterministic()
    };
    let trace = run_scenario(scenario, planner, &overrides).unwrap();
    assert_eq!(trace.summary.error, None);
    trace
}

#[test]
fn end_of_lane_fixed_horizon_runs_out_of_lane() {
    let s = bundled::scenario1_end_of_lane();
    let trace = run(&s, PlannerKind::Fixed, 0);
    assert_eq!(trace.outcome(), MissionStatus::Failure);
    assert_eq!(trace.summary.failure, Some(FailureCause::LaneEnded));
    assert_eq!(trace.actions().next(), Some(ManeuverAction::ChangeLaneLeft));
}

#[test]
fn end_of_lane_search_reaches_the_end() {
    let s = bundled::scenario1_end_of_lane();
    for seed in 0..3 {
        assert!(run(&s, PlannerKind::Cormcts, seed).is_success(), "seed {seed}");
    }
}

#[test]
fn exit_ramp_fixed_horizon_misses_the_exit() {
    let s = bundled::scenario2_exit_ramp();
    let trace = run(&s, PlannerKind::Fixed, 0);
    assert_eq!(trace.outcome(), MissionStatus::Failure);
    assert_eq!(trace.summary.failure, Some(FailureCause::MissedTarget));
    assert_eq!(trace.actions().next(), Some(ManeuverAction::ChangeLaneLeft));
    assert!(completed_lane_change_to_left(&trace, &s.network));
}

#[test]
fn exit_ramp_search_takes_the_exit() {
    let s = bundled::scenario2_exit_ramp();
    for seed in 0..3 {
        assert!(run(&s, PlannerKind::Cormcts, seed).is_success(), "seed {seed}");
    }
}

#[test]
fn same_seed_gives_byte_identical_traces() {
    for s in bundled::all() {
        for planner in [PlannerKind::Cormcts, PlannerKind::Fixed] {
            let a = run(&s, planner, 7).to_jsonl(false);
            let b = run(&s, planner, 7).to_jsonl(false);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn trace_round_trips_through_jsonl() {
    let s = bundled::scenario2_exit_ramp();
    let trace = run(&s, PlannerKind::Cormcts, 3);
    let text = trace.to_jsonl(true);
    let back = RunTrace::from_jsonl(&text).unwrap();
    assert_eq!(back.to_jsonl(true), text);
    assert_eq!(back.ticks.len(), trace.ticks.len());
}

#[test]
fn every_planner_call_stays_within_fifty_nodes() {
    let s = bundled::scenario1_end_of_lane();
    let trace = run_scenario(&s, PlannerKind::Cormcts, &RunOverrides::default()).unwrap();
    let mut calls = 0;
    for tick in &trace.ticks {
        let Some(search) = &tick.search else { continue };
        calls += 1;
        assert!(search.node_count <= 50);
        assert_eq!(search.nodes.len(), search.node_count);
        if search.stop_reason == StopReason::NodeLimit {
            assert_eq!(search.node_count, 50);
        }
    }
    assert!(calls > 0);
}

#[test]
fn wall_clock_budget_stops_a_huge_node_cap() {
    let s = bundled::scenario2_exit_ramp();
    let config = SearchConfig {
        budget: SearchBudget {
            max_wall_time_s: Some(1.0),
            max_nodes: 1_000_000,
        },
        ..SearchConfig::default()
    };
    let started = Instant::now();
    let (_, stats) = plan(
        &s.initial,
        &s.network,
        s.other_vehicle_model,
        &config,
        &s.utility_weights,
        &s.dynamics,
    )
    .unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 1.05, "took {elapsed}s");
    assert!(matches!(
        stats.stop_reason,
        StopReason::WallTime | StopReason::Exhausted
    ));
}

#[test]
fn fixed_horizon_agrees_with_direct_rollouts() {
    for s in bundled::all() {
        let config = FixedHorizonConfig::default();
        let (action, table) = plan_fixed(
            &s.initial,
            &s.network,
            s.other_vehicle_model,
            &config,
            &s.utility_weights,
            &s.dynamics,
        )
        .unwrap();
        let sim = Simulator::new(&s.network, &s.dynamics, s.other_vehicle_model);
        let mut best: Option<(ManeuverAction, f64)> = None;
        let mut rows = 0;
        for a in ManeuverAction::ALL {
            let Ok(rollout) = sim.sustain(&s.initial, a, config.horizon_s) else {
                assert!(table.iter().all(|r| r.action != a));
                continue;
            };
            rows += 1;
            let v = evaluate_profit(
                &rollout.world,
                &s.network,
                Some(a),
                &s.utility_weights,
                &s.dynamics,
            )
            .total;
            let row = table.iter().find(|r| r.action == a).unwrap();
            assert_eq!(row.v, v);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((a, v));
            }
        }
        assert_eq!(rows, table.len());
        assert_eq!(Some(action), best.map(|(a, _)| a));
    }
}

fn reject(edit: impl FnOnce(&mut serde_json::Value)) -> ScenarioError {
    let mut doc: serde_json::Value = serde_json::from_str(bundled::SCENARIO1_END_OF_LANE).unwrap();
    edit(&mut doc);
    ScenarioConfig::from_json_str(&doc.to_string()).unwrap_err()
}

#[test]
fn bundled_scenarios_survive_a_round_trip() {
    for s in bundled::all() {
        let back = ScenarioConfig::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(back, s);
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let err = reject(|d| d["surprise"] = 1.into());
    assert!(
        matches!(&err, ScenarioError::Validation(v) if v.path == "surprise"),
        "{err}"
    );
    let err = reject(|d| d["initial"]["ego"]["colour"] = "red".into());
    assert!(
        matches!(&err, ScenarioError::Validation(v) if v.path == "initial.ego.colour"),
        "{err}"
    );
    let err = reject(|d| d["search"] = serde_json::json!({ "gamma": 0.5, "depth": 3 }));
    assert!(
        matches!(&err, ScenarioError::Validation(v) if v.path == "search.depth"),
        "{err}"
    );
}

#[test]
fn non_positive_duration_is_rejected() {
    let err = reject(|d| d["duration_s"] = 0.into());
    assert!(err.to_string().contains("duration_s"), "{err}");
}

#[test]
fn dangling_neighbor_is_rejected() {
    let err = reject(|d| d["network"][0]["left"] = 9.into());
    assert!(matches!(err, ScenarioError::Validation(_)), "{err}");
}

#[test]
fn duplicate_vehicle_ids_are_rejected() {
    let err = reject(|d| d["initial"]["others"][1]["id"] = 1.into());
    match err {
        ScenarioError::Validation(v) => assert_eq!(v.path, "initial.others[1].id"),
        other => panic!("{other}"),
    }
}

#[test]
fn malformed_json_is_a_parse_error() {
    let err = ScenarioConfig::from_json_str("{ not json").unwrap_err();
    assert!(matches!(err, ScenarioError::Parse(_)));
}

#[test]
fn fixed_horizon_of_one_action_matches_a_depth_one_tree() {
    use cormcts::mcts::{search, DrivingDomain, ROOT};
    for s in bundled::all() {
        let fixed = FixedHorizonConfig {
            horizon_s: s.dynamics.action_duration_s,
        };
        let (action, table) = plan_fixed(
            &s.initial,
            &s.network,
            s.other_vehicle_model,
            &fixed,
            &s.utility_weights,
            &s.dynamics,
        )
        .unwrap();
        let domain = DrivingDomain::new(&s.network, &s.dynamics, s.other_vehicle_model, &s.utility_weights);
        let config = SearchConfig {
            max_depth: Some(1),
            budget: SearchBudget {
                max_wall_time_s: None,
                max_nodes: 1000,
            },
            ..SearchConfig::default()
        };
        let outcome = search(&domain, s.initial.clone(), &config).unwrap();
        assert_eq!(outcome.stats.stop_reason, StopReason::Exhausted);
        let root = outcome.tree.node(ROOT);
        let positive: Vec<_> = table.iter().filter(|r| r.v > 0.0).collect();
        assert_eq!(root.children.len(), positive.len());
        for &child in &root.children {
            let node = outcome.tree.node(child);
            let row = table.iter().find(|r| Some(r.action) == node.action).unwrap();
            assert_eq!(node.v, row.v);
            assert_eq!(node.total, node.v);
        }
        let best = table.iter().find(|r| r.action == action).unwrap().v;
        let chosen = table.iter().find(|r| r.action == outcome.action).unwrap().v;
        assert_eq!(chosen, best);
    }
}
