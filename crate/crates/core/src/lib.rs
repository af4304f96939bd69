//! Anytime tactical maneuver planning with Monte Carlo Tree Search.
//!
//! * [`world`]: lanes, vehicles, missions and scenario files.
//! * [`dynamics`]: the six-action maneuver space and the lane simulator.
//! * [`utility`]: resource-based profit evaluation of simulated states.
//! * [`mcts`]: the tree search planner.
//! * [`baseline`]: a fixed-horizon single-action planner for comparison.
//! * [`harness`]: closed-loop runs, batches and trace export.

pub mod baseline;
pub mod dynamics;
pub mod harness;
pub mod mcts;
pub mod utility;
pub mod world;

pub use baseline::{plan_fixed, FixedHorizonConfig};
pub use dynamics::{DynamicsParams, ManeuverAction, Simulator};
pub use harness::{run_batch, run_scenario, PlannerKind, PlannerVariant, RunOverrides, RunTrace};
pub use mcts::{plan, ucb_value, SearchBudget, SearchConfig, SearchStats};
pub use utility::{evaluate_profit, ProfitBreakdown, UtilityWeights};
pub use world::{load_scenario, MissionStatus, RoadNetwork, ScenarioConfig, VehicleState, WorldState};
