//! Anytime Monte Carlo Tree Search over maneuver sequences.
//!
//! Each iteration selects a frontier node by UCB, expands one child by
//! sampling an action, scores the child's simulated state with the profit
//! evaluator and backpropagates that value with per-hop discount `gamma`.
//! The decision is the root child with the largest accumulated value.
//!
//! The search is generic over [`SearchDomain`]; [`DrivingDomain`] binds it
//! to the lane simulator and the profit evaluator.

use std::fmt::Debug;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsParams, ManeuverAction, Simulator};
use crate::utility::{evaluate_profit, ProfitBreakdown, UtilityWeights};
use crate::world::{mission_status, MissionStatus, OtherVehicleModel, RoadNetwork, WorldState};

/// Coarse grouping used to bias expansion after a lane change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionClass {
    KeepLane,
    LaneChange,
    Other,
}

/// A scored successor state.
#[derive(Clone, Debug)]
pub struct Evaluated<D> {
    pub v: f64,
    pub detail: D,
}

/// Problem definition the search runs on.
pub trait SearchDomain {
    type State: Clone;
    type Action: Copy + Eq + Debug;
    type Detail: Clone;

    /// The full action space, in a fixed order.
    fn actions(&self) -> &[Self::Action];
    /// Cheap feasibility check, used by pruning before any simulation.
    fn is_feasible(&self, state: &Self::State, action: Self::Action) -> bool;
    /// Successor of `state` under `action`, `None` when infeasible.
    fn step(&self, state: &Self::State, action: Self::Action) -> Option<Self::State>;
    fn evaluate(&self, state: &Self::State, action: Option<Self::Action>) -> Evaluated<Self::Detail>;
    fn is_terminal(&self, state: &Self::State) -> bool;
    fn action_class(&self, _action: Self::Action) -> ActionClass {
        ActionClass::Other
    }
    /// Detail attached to children created from infeasible actions.
    fn infeasible_detail(&self) -> Self::Detail;
}

/// Upper confidence bound of a child; unvisited children get `+inf` so
/// they are tried first.
pub fn ucb_value(mean_u: f64, parent_visits: u64, node_visits: u64, c: f64) -> f64 {
    if node_visits == 0 {
        return f64::INFINITY;
    }
    let parent = parent_visits.max(1) as f64;
    mean_u + c * (parent.ln() / node_visits as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Can be expanded further.
    Open,
    /// Mission ended, or the depth limit was reached.
    Terminal,
    /// Created from an infeasible action (pruning disabled); worth zero.
    Infeasible,
    /// Every action was pruned; backs up zero when selected.
    DeadEnd,
}

#[derive(Clone, Debug)]
pub struct TreeNode<S, A, D> {
    /// Immediate profit of this node's state.
    pub v: f64,
    /// Visit count `m`.
    pub visits: u64,
    /// Accumulated discounted profit `U`.
    pub total: f64,
    /// Cached UCB, refreshed on backpropagation.
    pub ucb: f64,
    pub action: Option<A>,
    pub state: S,
    pub detail: D,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub depth: u32,
    pub kind: NodeKind,
    tried: Vec<A>,
    pruned: Vec<A>,
    fully_expanded: bool,
    exhausted: bool,
}

impl<S, A, D> TreeNode<S, A, D> {
    pub fn mean(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total / self.visits as f64
        }
    }

    pub fn is_fully_expanded(&self) -> bool {
        self.fully_expanded
    }

    /// No expandable node remains in this subtree.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }
}

/// Arena-backed search tree; the root is always `NodeId(0)`.
#[derive(Clone, Debug)]
pub struct SearchTree<S, A, D> {
    nodes: Vec<TreeNode<S, A, D>>,
    simulations: u64,
}

pub const ROOT: NodeId = NodeId(0);

impl<S: Clone, A: Copy + Eq, D: Clone> SearchTree<S, A, D> {
    pub fn new(state: S, v: f64, detail: D) -> Self {
        Self {
            nodes: vec![TreeNode {
                v,
                visits: 0,
                total: 0.0,
                ucb: f64::INFINITY,
                action: None,
                state,
                detail,
                children: Vec::new(),
                parent: None,
                depth: 0,
                kind: NodeKind::Open,
                tried: Vec::new(),
                pruned: Vec::new(),
                fully_expanded: false,
                exhausted: false,
            }],
            simulations: 0,
        }
    }

    /// Successor simulations run by [`expand`], pruned ones included.
    pub fn simulations(&self) -> u64 {
        self.simulations
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode<S, A, D> {
        &self.nodes[id.0]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut TreeNode<S, A, D> {
        &mut self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &TreeNode<S, A, D>)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn root(&self) -> &TreeNode<S, A, D> {
        &self.nodes[0]
    }

    /// Attaches an unvisited child under `parent`.
    pub fn add_child(
        &mut self,
        parent: NodeId,
        action: A,
        state: S,
        eval: Evaluated<D>,
        kind: NodeKind,
    ) -> NodeId {
        let id = NodeId(self.nodes.len());
        let depth = self.nodes[parent.0].depth + 1;
        self.nodes.push(TreeNode {
            v: eval.v,
            visits: 0,
            total: 0.0,
            ucb: f64::INFINITY,
            action: Some(action),
            state,
            detail: eval.detail,
            children: Vec::new(),
            parent: Some(parent),
            depth,
            kind,
            tried: Vec::new(),
            pruned: Vec::new(),
            fully_expanded: kind != NodeKind::Open,
            exhausted: kind != NodeKind::Open,
        });
        let p = &mut self.nodes[parent.0];
        p.children.push(id);
        p.tried.push(action);
        id
    }

    /// Marks `id` as having no further actions to try.
    pub fn mark_fully_expanded(&mut self, id: NodeId) {
        self.nodes[id.0].fully_expanded = true;
        self.refresh_exhausted(id);
    }

    fn refresh_exhausted(&mut self, from: NodeId) {
        let mut cursor = Some(from);
        while let Some(id) = cursor {
            let node = &self.nodes[id.0];
            let exhausted = node.kind != NodeKind::Open
                || (node.fully_expanded && node.children.iter().all(|c| self.nodes[c.0].exhausted));
            if exhausted == node.exhausted && id != from {
                break;
            }
            self.nodes[id.0].exhausted = exhausted;
            cursor = self.nodes[id.0].parent;
        }
    }

    fn best_child_by_ucb(&self, id: NodeId, c: f64, skip_exhausted: bool) -> Option<NodeId> {
        let node = &self.nodes[id.0];
        let pick = |skip: bool| {
            let mut best: Option<(NodeId, f64)> = None;
            for &child in &node.children {
                let ch = &self.nodes[child.0];
                if skip && ch.exhausted {
                    continue;
                }
                let score = ucb_value(ch.mean(), node.visits, ch.visits, c);
                if best.is_none_or(|(_, b)| score > b) {
                    best = Some((child, score));
                }
            }
            best.map(|(id, _)| id)
        };
        if skip_exhausted {
            pick(true).or_else(|| pick(false))
        } else {
            pick(false)
        }
    }

    /// Descends from the root by maximal UCB (first child wins ties) and
    /// returns the first node that is terminal or still has actions to try.
    /// With `skip_exhausted`, subtrees with nothing left to expand are
    /// bypassed while any alternative remains.
    pub fn select_leaf(&self, c: f64, skip_exhausted: bool) -> NodeId {
        let mut id = ROOT;
        loop {
            let node = &self.nodes[id.0];
            if node.kind != NodeKind::Open || !node.fully_expanded {
                return id;
            }
            match self.best_child_by_ucb(id, c, skip_exhausted) {
                Some(child) => id = child,
                None => return id,
            }
        }
    }

    /// Adds `gamma^t * v` to every node on the path from `leaf` (t = 0) to
    /// the root and counts one visit on each; refreshes the cached UCB of
    /// the path nodes and their siblings.
    pub fn backpropagate(&mut self, leaf: NodeId, v: f64, gamma: f64, c: f64) {
        let mut discount = 1.0;
        let mut cursor = Some(leaf);
        while let Some(id) = cursor {
            let node = &mut self.nodes[id.0];
            node.total += discount * v;
            node.visits += 1;
            discount *= gamma;
            cursor = node.parent;
        }
        let mut cursor = Some(leaf);
        while let Some(id) = cursor {
            let parent = self.nodes[id.0].parent;
            if let Some(p) = parent {
                let parent_visits = self.nodes[p.0].visits;
                for i in 0..self.nodes[p.0].children.len() {
                    let child = self.nodes[p.0].children[i];
                    let ch = &self.nodes[child.0];
                    let u = ucb_value(ch.mean(), parent_visits, ch.visits, c);
                    self.nodes[child.0].ucb = u;
                }
            } else {
                let root = &mut self.nodes[id.0];
                root.ucb = ucb_value(root.mean(), root.visits, root.visits, c);
            }
            cursor = parent;
        }
    }

    /// Action of the root child maximizing `rule`'s score; the first
    /// inserted child wins ties.
    pub fn best_root_action(&self, rule: DecisionRule) -> Result<A, SearchError> {
        let root = self.root();
        let mut best: Option<(A, f64)> = None;
        for &child in &root.children {
            let ch = &self.nodes[child.0];
            let score = match rule {
                DecisionRule::Accumulated => ch.total,
                DecisionRule::Mean => ch.mean(),
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((ch.action.expect("children carry actions"), score));
            }
        }
        best.map(|(a, _)| a).ok_or(SearchError::EmptyTree)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Largest accumulated value `U`.
    #[default]
    Accumulated,
    /// Largest mean `U / m`.
    Mean,
}

/// Probability masses used when expanding below a lane-change edge. Each
/// class splits its mass equally among its members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpansionBias {
    pub keep_lane: f64,
    pub lane_change: f64,
    pub other: f64,
}

impl Default for ExpansionBias {
    fn default() -> Self {
        Self {
            keep_lane: 0.9,
            lane_change: 0.1,
            other: 0.0,
        }
    }
}

impl ExpansionBias {
    fn mass(&self, class: ActionClass) -> f64 {
        match class {
            ActionClass::KeepLane => self.keep_lane,
            ActionClass::LaneChange => self.lane_change,
            ActionClass::Other => self.other,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let m = [self.keep_lane, self.lane_change, self.other];
        if m.iter().any(|x| !(*x >= 0.0)) {
            return Err("bias masses must be non-negative".into());
        }
        if (m.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err("bias masses must sum to 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Wall-clock limit; `None` runs on the node cap alone (deterministic).
    pub max_wall_time_s: Option<f64>,
    pub max_nodes: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_wall_time_s: Some(1.0),
            max_nodes: 50,
        }
    }
}

impl SearchBudget {
    pub fn node_cap(max_nodes: usize) -> Self {
        Self {
            max_wall_time_s: None,
            max_nodes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub exploration_c: f64,
    pub gamma: f64,
    pub lane_keep_bias_after_lane_change: ExpansionBias,
    pub pruning_enabled: bool,
    pub budget: SearchBudget,
    pub rng_seed: u64,
    pub decision_rule: DecisionRule,
    /// Nodes at this depth are not expanded.
    pub max_depth: Option<u32>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            exploration_c: std::f64::consts::SQRT_2,
            gamma: 0.9,
            lane_keep_bias_after_lane_change: ExpansionBias::default(),
            pruning_enabled: true,
            budget: SearchBudget::default(),
            rng_seed: 0,
            decision_rule: DecisionRule::Accumulated,
            max_depth: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.exploration_c >= 0.0) {
            return Err("exploration_c must be non-negative".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err("gamma must lie in (0, 1]".into());
        }
        if self.budget.max_nodes == 0 {
            return Err("max_nodes must be positive".into());
        }
        if let Some(t) = self.budget.max_wall_time_s {
            if !(t > 0.0) {
                return Err("max_wall_time_s must be positive".into());
            }
        }
        self.lane_keep_bias_after_lane_change.validate()
    }
}

/// Optional search settings carried by a scenario file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exploration_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pruning_enabled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_wall_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision_rule: Option<DecisionRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lane_keep_bias_after_lane_change: Option<ExpansionBias>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<u32>,
}

impl SearchOverrides {
    pub fn apply(&self, config: &mut SearchConfig) {
        if let Some(c) = self.exploration_c {
            config.exploration_c = c;
        }
        if let Some(g) = self.gamma {
            config.gamma = g;
        }
        if let Some(p) = self.pruning_enabled {
            config.pruning_enabled = p;
        }
        if let Some(n) = self.max_nodes {
            config.budget.max_nodes = n;
        }
        if let Some(t) = self.max_wall_time_s {
            config.budget.max_wall_time_s = Some(t);
        }
        if let Some(r) = self.decision_rule {
            config.decision_rule = r;
        }
        if let Some(b) = &self.lane_keep_bias_after_lane_change {
            config.lane_keep_bias_after_lane_change = b.clone();
        }
        if let Some(d) = self.max_depth {
            config.max_depth = Some(d);
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut config = SearchConfig::default();
        self.apply(&mut config);
        config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("the root has no children; the budget ran out before any expansion")]
    EmptyTree,
}

/// Why [`expand`] added no child.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("leaf state is terminal")]
    TerminalLeaf,
    #[error("every action was pruned")]
    NoFeasibleAction,
    /// The remaining candidates were pruned, but earlier children exist.
    #[error("no untried action remains")]
    FullyExpanded,
}

fn sample_action<D: SearchDomain, R: Rng>(
    domain: &D,
    support: &[D::Action],
    parent_action: Option<D::Action>,
    bias: &ExpansionBias,
    rng: &mut R,
) -> D::Action {
    let after_lane_change = parent_action.is_some_and(|a| domain.action_class(a) == ActionClass::LaneChange);
    let weights: Vec<f64> = if after_lane_change {
        let count = |class| {
            domain
                .actions()
                .iter()
                .filter(|&&a| domain.action_class(a) == class)
                .count()
                .max(1) as f64
        };
        support
            .iter()
            .map(|&a| {
                let class = domain.action_class(a);
                bias.mass(class) / count(class)
            })
            .collect()
    } else {
        vec![1.0; support.len()]
    };
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return support[rng.random_range(0..support.len())];
    }
    let mut x = rng.random::<f64>() * sum;
    for (a, w) in support.iter().zip(&weights) {
        if x < *w {
            return *a;
        }
        x -= w;
    }
    *support
        .iter()
        .zip(&weights)
        .rev()
        .find(|(_, w)| **w > 0.0)
        .map(|(a, _)| a)
        .expect("positive total weight")
}

/// Successor of `state` under `action` together with its profit value.
pub fn simulate<D: SearchDomain>(
    domain: &D,
    state: &D::State,
    action: D::Action,
) -> Option<(D::State, Evaluated<D::Detail>)> {
    let next = domain.step(state, action)?;
    let eval = domain.evaluate(&next, Some(action));
    Some((next, eval))
}

/// Adds one child below `leaf`.
///
/// Without pruning the action is drawn from the whole action space (a node
/// accepts at most one child per action slot); infeasible draws become
/// zero-valued dead children. With pruning, infeasible actions, actions
/// already tried here and actions whose successor is worth zero are removed
/// from the support before drawing.
pub fn expand<D: SearchDomain, R: Rng>(
    tree: &mut SearchTree<D::State, D::Action, D::Detail>,
    leaf: NodeId,
    domain: &D,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<NodeId, ExpandError> {
    let node = tree.node(leaf);
    if node.kind != NodeKind::Open {
        return Err(if node.kind == NodeKind::DeadEnd {
            ExpandError::NoFeasibleAction
        } else {
            ExpandError::TerminalLeaf
        });
    }
    if domain.is_terminal(&node.state) {
        tree.node_mut(leaf).kind = NodeKind::Terminal;
        tree.mark_fully_expanded(leaf);
        return Err(ExpandError::TerminalLeaf);
    }
    let parent_action = node.action;
    let child_depth = node.depth + 1;
    let bias = &config.lane_keep_bias_after_lane_change;
    let child_kind = |state: &D::State| {
        if domain.is_terminal(state) || config.max_depth.is_some_and(|d| child_depth >= d) {
            NodeKind::Terminal
        } else {
            NodeKind::Open
        }
    };

    if !config.pruning_enabled {
        let state = node.state.clone();
        let action = sample_action(domain, domain.actions(), parent_action, bias, rng);
        tree.simulations += 1;
        let child = match simulate(domain, &state, action) {
            Some((next, eval)) => {
                let kind = child_kind(&next);
                tree.add_child(leaf, action, next, eval, kind)
            }
            None => {
                let eval = Evaluated {
                    v: 0.0,
                    detail: domain.infeasible_detail(),
                };
                tree.add_child(leaf, action, state, eval, NodeKind::Infeasible)
            }
        };
        if tree.node(leaf).children.len() >= domain.actions().len() {
            tree.mark_fully_expanded(leaf);
        } else {
            tree.refresh_exhausted(child);
        }
        return Ok(child);
    }

    loop {
        let node = tree.node(leaf);
        let support: Vec<D::Action> = domain
            .actions()
            .iter()
            .copied()
            .filter(|a| !node.tried.contains(a) && !node.pruned.contains(a))
            .filter(|&a| domain.is_feasible(&node.state, a))
            .collect();
        if support.is_empty() {
            let has_children = !node.children.is_empty();
            if !has_children {
                tree.node_mut(leaf).kind = NodeKind::DeadEnd;
            }
            tree.mark_fully_expanded(leaf);
            return Err(if has_children {
                ExpandError::FullyExpanded
            } else {
                ExpandError::NoFeasibleAction
            });
        }
        let action = sample_action(domain, &support, parent_action, bias, rng);
        let result = simulate(domain, &node.state, action);
        tree.simulations += 1;
        match result {
            Some((next, eval)) if eval.v > 0.0 => {
                let kind = child_kind(&next);
                let child = tree.add_child(leaf, action, next, eval, kind);
                if support.len() == 1 {
                    tree.mark_fully_expanded(leaf);
                } else {
                    tree.refresh_exhausted(child);
                }
                return Ok(child);
            }
            _ => tree.node_mut(leaf).pruned.push(action),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NodeLimit,
    WallTime,
    Exhausted,
    /// Selection kept returning terminal leaves without growing the tree.
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootChildStat {
    pub action: String,
    pub accumulated: f64,
    pub visits: u64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub iterations: u64,
    pub node_count: usize,
    pub simulations: u64,
    #[serde(skip)]
    pub elapsed_s: f64,
    pub stop_reason: StopReason,
    pub max_depth: u32,
    /// Non-root nodes whose immediate value is zero.
    pub zero_value_nodes: usize,
    pub root_children: Vec<RootChildStat>,
}

/// Result of a full search: the decision, statistics and the final tree.
pub struct SearchOutcome<D: SearchDomain> {
    pub action: D::Action,
    pub stats: SearchStats,
    pub tree: SearchTree<D::State, D::Action, D::Detail>,
}

/// Iterations allowed per node of budget before the loop gives up on
/// growing the tree.
pub const ITERATIONS_PER_NODE: u64 = 100;

/// Runs the search loop from `root_state` until the budget is spent or the
/// tree has nothing left to expand.
pub fn search<D: SearchDomain>(
    domain: &D,
    root_state: D::State,
    config: &SearchConfig,
) -> Result<SearchOutcome<D>, SearchError> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let root_eval = domain.evaluate(&root_state, None);
    let mut tree = SearchTree::new(root_state, root_eval.v, root_eval.detail);
    let c = config.exploration_c;
    let skip_exhausted = config.pruning_enabled;
    let mut iterations = 0u64;
    let max_iterations = (config.budget.max_nodes as u64).saturating_mul(ITERATIONS_PER_NODE);

    let stop_reason = loop {
        if tree.len() >= config.budget.max_nodes {
            break StopReason::NodeLimit;
        }
        if config
            .budget
            .max_wall_time_s
            .is_some_and(|t| started.elapsed().as_secs_f64() >= t)
        {
            break StopReason::WallTime;
        }
        if tree.root().is_exhausted() {
            break StopReason::Exhausted;
        }
        if iterations >= max_iterations {
            break StopReason::IterationLimit;
        }
        let leaf = tree.select_leaf(c, skip_exhausted);
        match expand(&mut tree, leaf, domain, config, &mut rng) {
            Ok(child) => {
                let v = tree.node(child).v;
                tree.backpropagate(child, v, config.gamma, c);
            }
            Err(ExpandError::TerminalLeaf) => {
                let v = tree.node(leaf).v;
                tree.backpropagate(leaf, v, config.gamma, c);
            }
            Err(ExpandError::NoFeasibleAction) => {
                tree.backpropagate(leaf, 0.0, config.gamma, c);
            }
            Err(ExpandError::FullyExpanded) => continue,
        }
        iterations += 1;
    };

    let action = match tree.best_root_action(config.decision_rule) {
        Ok(a) => a,
        // Dead-end root: fall back to the first pruned action.
        Err(SearchError::EmptyTree) => domain
            .actions()
            .iter()
            .copied()
            .find(|a| tree.root().pruned.contains(a))
            .ok_or(SearchError::EmptyTree)?,
    };
    let stats = SearchStats {
        iterations,
        node_count: tree.len(),
        simulations: tree.simulations(),
        elapsed_s: started.elapsed().as_secs_f64(),
        stop_reason,
        max_depth: tree.nodes().map(|(_, n)| n.depth).max().unwrap_or(0),
        zero_value_nodes: tree.nodes().skip(1).filter(|(_, n)| n.v == 0.0).count(),
        root_children: tree
            .root()
            .children
            .iter()
            .map(|&id| {
                let n = tree.node(id);
                RootChildStat {
                    action: format!("{:?}", n.action.expect("child action")),
                    accumulated: n.total,
                    visits: n.visits,
                    v: n.v,
                }
            })
            .collect(),
    };
    Ok(SearchOutcome { action, stats, tree })
}

/// The maneuver planning problem: lane simulator plus profit evaluator.
pub struct DrivingDomain<'a> {
    pub sim: Simulator<'a>,
    pub weights: &'a UtilityWeights,
}

impl<'a> DrivingDomain<'a> {
    pub fn new(
        network: &'a RoadNetwork,
        params: &'a DynamicsParams,
        model: OtherVehicleModel,
        weights: &'a UtilityWeights,
    ) -> Self {
        Self {
            sim: Simulator::new(network, params, model),
            weights,
        }
    }
}

impl SearchDomain for DrivingDomain<'_> {
    type State = WorldState;
    type Action = ManeuverAction;
    type Detail = ProfitBreakdown;

    fn actions(&self) -> &[ManeuverAction] {
        &ManeuverAction::ALL
    }

    fn is_feasible(&self, state: &WorldState, action: ManeuverAction) -> bool {
        self.sim.check_feasible(&state.ego, action).is_ok()
    }

    fn step(&self, state: &WorldState, action: ManeuverAction) -> Option<WorldState> {
        self.sim
            .sustain(state, action, self.sim.params.action_duration_s)
            .ok()
            .map(|r| r.world)
    }

    fn evaluate(&self, state: &WorldState, action: Option<ManeuverAction>) -> Evaluated<ProfitBreakdown> {
        let detail = evaluate_profit(state, self.sim.network, action, self.weights, self.sim.params);
        Evaluated {
            v: detail.total,
            detail,
        }
    }

    /// Only failure ends a branch; after success the ego keeps driving.
    fn is_terminal(&self, state: &WorldState) -> bool {
        mission_status(state, self.sim.network) == MissionStatus::Failure
    }

    fn action_class(&self, action: ManeuverAction) -> ActionClass {
        if action.is_lane_change() {
            ActionClass::LaneChange
        } else if action.is_keep_lane() {
            ActionClass::KeepLane
        } else {
            ActionClass::Other
        }
    }

    fn infeasible_detail(&self) -> ProfitBreakdown {
        ProfitBreakdown::zero()
    }
}

/// Plans one maneuver for `world`.
#[allow(clippy::too_many_arguments)]
pub fn plan(
    world: &WorldState,
    network: &RoadNetwork,
    model: OtherVehicleModel,
    config: &SearchConfig,
    weights: &UtilityWeights,
    params: &DynamicsParams,
) -> Result<(ManeuverAction, SearchStats), SearchError> {
    let domain = DrivingDomain::new(network, params, model, weights);
    let outcome = search(&domain, world.clone(), config)?;
    Ok((outcome.action, outcome.stats))
}
