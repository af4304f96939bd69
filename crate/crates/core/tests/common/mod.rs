#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cormcts::dynamics::{DynamicsParams, ManeuverAction, Simulator};
use cormcts::harness::{replay_deviation, run_scenario, PlannerKind, RunOverrides};
use cormcts::mcts::{search, Evaluated, NodeId, SearchBudget, SearchConfig, SearchDomain, SearchTree};
use cormcts::utility::{evaluate_profit, UtilityWeights};
use cormcts::world::{mission_status, MissionStatus, RoadNetwork, ScenarioConfig, VehicleState, WorldState};

/// Deterministic toy problem: every action prefix up to `depth` has a fixed
/// value, some prefixes are infeasible and some are worth zero.
#[derive(Clone, Debug)]
pub struct ToyDomain {
    pub actions: Vec<u8>,
    pub depth: u32,
    pub values: HashMap<Vec<u8>, f64>,
    pub infeasible: HashSet<Vec<u8>>,
}

impl ToyDomain {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=3u8);
        let depth = rng.random_range(1..=3u32);
        let mut values = HashMap::new();
        let mut infeasible = HashSet::new();
        let mut frontier = vec![Vec::new()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for prefix in &frontier {
                for a in 0..n {
                    let mut p: Vec<u8> = prefix.clone();
                    p.push(a);
                    if rng.random_bool(0.1) {
                        infeasible.insert(p.clone());
                        continue;
                    }
                    let v = if rng.random_bool(0.1) {
                        0.0
                    } else {
                        rng.random_range(0.01..=1.0)
                    };
                    values.insert(p.clone(), v);
                    next.push(p);
                }
            }
            frontier = next;
        }
        Self {
            actions: (0..n).collect(),
            depth,
            values,
            infeasible,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.values_mut() {
            *v *= k;
        }
        out
    }

    pub fn config(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            budget: SearchBudget::node_cap(100_000),
            rng_seed: seed,
            max_depth: Some(self.depth),
            ..SearchConfig::default()
        }
    }

    fn child(prefix: &[u8], a: u8) -> Vec<u8> {
        let mut p = prefix.to_vec();
        p.push(a);
        p
    }

    /// Discounted value sum of every surviving prefix that starts with `a`,
    /// with `gamma^(len - 1)` weighting. `None` when `a` itself is pruned.
    pub fn oracle_value(&self, a: u8, gamma: f64) -> Option<f64> {
        let start = vec![a];
        let v = *self.values.get(&start)?;
        if v == 0.0 {
            return None;
        }
        let mut total = 0.0;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            total += gamma.powi(p.len() as i32 - 1) * self.values[&p];
            if (p.len() as u32) < self.depth {
                for &b in &self.actions {
                    let c = Self::child(&p, b);
                    if self.values.get(&c).is_some_and(|&v| v > 0.0) {
                        stack.push(c);
                    }
                }
            }
        }
        Some(total)
    }

    /// Exhaustive choice, or the first feasible action when all are pruned.
    pub fn oracle_action(&self, gamma: f64) -> Option<u8> {
        let mut best: Option<(u8, f64)> = None;
        for &a in &self.actions {
            if let Some(u) = self.oracle_value(a, gamma) {
                if best.is_none_or(|(_, b)| u > b) {
                    best = Some((a, u));
                }
            }
        }
        best.map(|(a, _)| a).or_else(|| {
            self.actions
                .iter()
                .copied()
                .find(|&a| self.values.contains_key(&vec![a]))
        })
    }

    /// True when two root actions have oracle values too close to separate.
    pub fn has_near_tie(&self, gamma: f64) -> bool {
        let mut us: Vec<f64> = self
            .actions
            .iter()
            .filter_map(|&a| self.oracle_value(a, gamma))
            .collect();
        us.sort_by(|a, b| b.total_cmp(a));
        us.len() > 1 && (us[0] - us[1]).abs() < 1e-9
    }
}

impl SearchDomain for ToyDomain {
    type State = Vec<u8>;
    type Action = u8;
    type Detail = ();

    fn actions(&self) -> &[u8] {
        &self.actions
    }

    fn is_feasible(&self, state: &Vec<u8>, action: u8) -> bool {
        self.values.contains_key(&Self::child(state, action))
    }

    fn step(&self, state: &Vec<u8>, action: u8) -> Option<Vec<u8>> {
        self.is_feasible(state, action)
            .then(|| Self::child(state, action))
    }

    fn evaluate(&self, state: &Vec<u8>, _: Option<u8>) -> Evaluated<()> {
        let v = if state.is_empty() {
            0.5
        } else {
            self.values.get(state).copied().unwrap_or(0.0)
        };
        Evaluated { v, detail: () }
    }

    fn is_terminal(&self, _: &Vec<u8>) -> bool {
        false
    }

    fn infeasible_detail(&self) {}
}

/// Structural invariants every finished tree must satisfy.
pub fn check_tree<S, A, D>(tree: &SearchTree<S, A, D>, iterations: u64) -> Result<(), String>
where
    S: Clone,
    A: Copy + Eq,
    D: Clone,
{
    if tree.root().visits != iterations {
        return Err(format!(
            "root visits {} != iterations {iterations}",
            tree.root().visits
        ));
    }
    for (id, node) in tree.nodes() {
        if !(0.0..=1.0).contains(&node.v) {
            return Err(format!("node {id:?}: v = {} outside [0, 1]", node.v));
        }
        if node.total < -1e-12 || node.total > node.visits as f64 + 1e-9 {
            return Err(format!("node {id:?}: U = {} vs m = {}", node.total, node.visits));
        }
        let child_visits: u64 = node.children.iter().map(|&c| tree.node(c).visits).sum();
        if child_visits > node.visits {
            return Err(format!(
                "node {id:?}: children visits {child_visits} > m = {}",
                node.visits
            ));
        }
        if id != NodeId(0) && node.visits == child_visits {
            return Err(format!("node {id:?} was never itself a simulated leaf"));
        }
    }
    Ok(())
}

/// Runs the search loop by hand and checks that each iteration touches
/// only the selected leaf's ancestor chain.
pub fn check_path_locality(
    domain: &ToyDomain,
    config: &SearchConfig,
    iterations: usize,
) -> Result<(), String> {
    use cormcts::mcts::{expand, ExpandError};
    let root_eval = domain.evaluate(&Vec::new(), None);
    let mut tree: SearchTree<Vec<u8>, u8, ()> = SearchTree::new(Vec::new(), root_eval.v, ());
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    for _ in 0..iterations {
        let before: Vec<(u64, f64)> = tree.nodes().map(|(_, n)| (n.visits, n.total)).collect();
        let leaf = tree.select_leaf(config.exploration_c, config.pruning_enabled);
        let updated = match expand(&mut tree, leaf, domain, config, &mut rng) {
            Ok(child) => {
                let v = tree.node(child).v;
                tree.backpropagate(child, v, config.gamma, config.exploration_c);
                child
            }
            Err(ExpandError::TerminalLeaf) => {
                let v = tree.node(leaf).v;
                tree.backpropagate(leaf, v, config.gamma, config.exploration_c);
                leaf
            }
            Err(ExpandError::NoFeasibleAction) => {
                tree.backpropagate(leaf, 0.0, config.gamma, config.exploration_c);
                leaf
            }
            Err(ExpandError::FullyExpanded) => continue,
        };
        let mut path = HashSet::new();
        let mut cursor = Some(updated);
        while let Some(id) = cursor {
            path.insert(id);
            cursor = tree.node(id).parent;
        }
        for (id, node) in tree.nodes() {
            let changed = before
                .get(id.0)
                .is_none_or(|&(m, u)| m != node.visits || u != node.total);
            if changed != path.contains(&id) {
                return Err(format!(
                    "node {id:?} changed = {changed}, on path = {}",
                    path.contains(&id)
                ));
            }
        }
    }
    Ok(())
}

/// Plain random world on `network`, valid enough to simulate.
pub fn random_world(rng: &mut ChaCha8Rng, network: &RoadNetwork) -> WorldState {
    let lanes = network.lanes();
    let lane = |rng: &mut ChaCha8Rng| &lanes[rng.random_range(0..lanes.len())];
    let ego_lane = lane(rng);
    let mut ego = VehicleState::new(
        0,
        ego_lane.id.0,
        rng.random_range(0.0..ego_lane.length_m),
        rng.random_range(0.0..20.0),
    );
    if rng.random_bool(0.3) {
        let side = if rng.random_bool(0.5) {
            ego_lane.left_neighbor
        } else {
            ego_lane.right_neighbor
        };
        if let Some(target) = side {
            ego.lane_change_target = Some(target);
            ego.lateral_progress = rng.random_range(0.05..0.95);
        }
    }
    let others = (1..=rng.random_range(0..8u32))
        .map(|id| {
            let l = lane(rng);
            VehicleState::new(
                id,
                l.id.0,
                rng.random_range(0.0..l.length_m),
                rng.random_range(0.0..20.0),
            )
        })
        .collect();
    WorldState::new(ego, others)
}

pub fn check_profit(
    world: &WorldState,
    network: &RoadNetwork,
    action: Option<ManeuverAction>,
) -> Result<(), String> {
    let p = evaluate_profit(
        world,
        network,
        action,
        &UtilityWeights::default(),
        &DynamicsParams::default(),
    );
    for (name, x) in [
        ("safety", p.safety),
        ("legality", p.legality),
        ("mission", p.mission),
        ("efficiency", p.efficiency),
        ("comfort", p.comfort),
        ("total", p.total),
    ] {
        if !(0.0..=1.0).contains(&x) {
            return Err(format!("{name} = {x} outside [0, 1]"));
        }
    }
    Ok(())
}

/// Simulates `actions` back to back; speeds stay non-negative and failure
/// is absorbing.
pub fn check_rollout(
    world: &WorldState,
    network: &RoadNetwork,
    actions: &[ManeuverAction],
) -> Result<(), String> {
    let params = DynamicsParams::default();
    let sim = Simulator::new(network, &params, Default::default());
    let mut current = world.clone();
    let mut failed = false;
    for &a in actions {
        let Ok(rollout) = sim.sustain_until(&current, a, params.action_duration_s, |_| false) else {
            continue;
        };
        current = rollout.world;
        for v in std::iter::once(&current.ego).chain(&current.others) {
            if !(v.speed_mps >= 0.0) {
                return Err(format!("vehicle {:?} speed {}", v.id, v.speed_mps));
            }
        }
        let status = mission_status(&current, network);
        if failed && status != MissionStatus::Failure {
            return Err(format!("left failure under {a:?}"));
        }
        failed |= status == MissionStatus::Failure;
    }
    Ok(())
}

/// One closed-loop run: replay reproduces the trace and every recorded
/// action was feasible where it was taken.
pub fn check_replay(scenario: &ScenarioConfig, seed: u64, max_nodes: usize) -> Result<(), String> {
    let overrides = RunOverrides {
        seed: Some(seed),
        max_nodes: Some(max_nodes),
        ..RunOverrides::deterministic()
    };
    let trace = run_scenario(scenario, PlannerKind::Cormcts, &overrides).map_err(|e| e.to_string())?;
    if let Some(e) = &trace.summary.error {
        return Err(e.clone());
    }
    match replay_deviation(scenario, &trace) {
        Some(d) if d <= 1e-9 => {}
        other => return Err(format!("replay deviation {other:?}")),
    }
    let sim = Simulator::new(
        &scenario.network,
        &scenario.dynamics,
        scenario.other_vehicle_model,
    );
    for t in &trace.ticks {
        if let Some(a) = t.action {
            sim.check_feasible(&t.ego, a)
                .map_err(|e| format!("tick {}: {e}", t.tick))?;
        }
    }
    let last = trace.ticks.last().ok_or("empty trace")?;
    if last.status != trace.outcome() {
        return Err("outcome differs from the last tick".into());
    }
    Ok(())
}

/// Search from a random driving state with a random node cap.
pub fn check_driving_tree(scenario: &ScenarioConfig, seed: u64) -> Result<(), String> {
    use cormcts::mcts::DrivingDomain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = random_world(&mut rng, &scenario.network);
    if mission_status(&world, &scenario.network) != MissionStatus::InProgress {
        return Ok(());
    }
    let config = SearchConfig {
        budget: SearchBudget::node_cap(rng.random_range(2..=60)),
        pruning_enabled: rng.random_bool(0.5),
        rng_seed: seed,
        ..SearchConfig::default()
    };
    let domain = DrivingDomain::new(
        &scenario.network,
        &scenario.dynamics,
        scenario.other_vehicle_model,
        &scenario.utility_weights,
    );
    let outcome = search(&domain, world, &config).map_err(|e| format!("no action: {e}"))?;
    check_tree(&outcome.tree, outcome.stats.iterations)?;
    if outcome.tree.len() > config.budget.max_nodes {
        return Err("node cap exceeded".into());
    }
    Ok(())
}

/// Toy search with a random configuration.
pub fn check_toy_tree(seed: u64) -> Result<(), String> {
    let domain = ToyDomain::random(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let config = SearchConfig {
        budget: SearchBudget::node_cap(rng.random_range(2..=40)),
        pruning_enabled: rng.random_bool(0.5),
        exploration_c: rng.random_range(0.0..3.0),
        gamma: rng.random_range(0.05..=1.0),
        rng_seed: seed,
        max_depth: Some(domain.depth),
        ..SearchConfig::default()
    };
    match search(&domain, Vec::new(), &config) {
        Ok(outcome) => check_tree(&outcome.tree, outcome.stats.iterations),
        // Only a root without a single feasible action may have no answer.
        Err(_)
            if domain
                .actions
                .iter()
                .all(|&a| !domain.is_feasible(&Vec::new(), a)) =>
        {
            Ok(())
        }
        Err(e) => Err(format!("no action: {e}")),
    }
}
