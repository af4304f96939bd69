//! Resource-based profit evaluator.
//!
//! Every simulated state is scored on five resources, each in `[0, 1]`, and
//! the profit value is their weighted sum. Collisions and occupying a lane
//! past its end override the total to zero.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsParams, ManeuverAction};
use crate::world::{failure_cause, LaneId, RoadNetwork, VehicleState, WorldState};

/// Time gap to the leader at which the safety resource saturates.
pub const SAFE_TIME_GAP_S: f64 = 2.0;
/// Comfort lost per lane-change action.
pub const LANE_CHANGE_COMFORT_PENALTY: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UtilityWeights {
    pub w_safety: f64,
    pub w_legality: f64,
    pub w_mission: f64,
    pub w_efficiency: f64,
    pub w_comfort: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            w_safety: 0.30,
            w_legality: 0.15,
            w_mission: 0.30,
            w_efficiency: 0.15,
            w_comfort: 0.10,
        }
    }
}

impl UtilityWeights {
    fn as_array(&self) -> [f64; 5] {
        [
            self.w_safety,
            self.w_legality,
            self.w_mission,
            self.w_efficiency,
            self.w_comfort,
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        let w = self.as_array();
        if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err("weights must be non-negative".into());
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("weights must sum to 1 (got {sum})"));
        }
        Ok(())
    }

    /// Rescales arbitrary non-negative weights so they sum to one.
    pub fn normalized(&self) -> Self {
        let sum: f64 = self.as_array().iter().sum();
        Self {
            w_safety: self.w_safety / sum,
            w_legality: self.w_legality / sum,
            w_mission: self.w_mission / sum,
            w_efficiency: self.w_efficiency / sum,
            w_comfort: self.w_comfort / sum,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub safety: f64,
    pub legality: f64,
    pub mission: f64,
    pub efficiency: f64,
    pub comfort: f64,
    pub total: f64,
}

impl ProfitBreakdown {
    pub fn zero() -> Self {
        Self {
            safety: 0.0,
            legality: 0.0,
            mission: 0.0,
            efficiency: 0.0,
            comfort: 0.0,
            total: 0.0,
        }
    }
}

/// Profit of being in `world` after taking `action` (`None` at the root,
/// which carries no comfort penalty).
pub fn evaluate_profit(
    world: &WorldState,
    network: &RoadNetwork,
    action: Option<ManeuverAction>,
    weights: &UtilityWeights,
    params: &DynamicsParams,
) -> ProfitBreakdown {
    let ego = &world.ego;
    let limit = ego
        .occupied_lanes()
        .filter_map(|id| network.lane(id))
        .map(|l| l.speed_limit_mps)
        .fold(f64::INFINITY, f64::min);

    let safety = match world.leader_of_ego() {
        None => 1.0,
        Some(_) if ego.speed_mps <= 0.0 => 1.0,
        Some(leader) => {
            let time_gap = (leader.s_m - ego.s_m) / ego.speed_mps;
            (time_gap / SAFE_TIME_GAP_S).clamp(0.0, 1.0)
        }
    };
    let legality = 1.0 - ((ego.speed_mps - limit) / limit).clamp(0.0, 1.0);
    let efficiency = (ego.speed_mps / limit).clamp(0.0, 1.0);
    let mission = mission_resource(ego, network, params);
    let comfort = match action {
        None => 1.0,
        Some(a) => {
            let lane_change = if a.is_lane_change() {
                LANE_CHANGE_COMFORT_PENALTY
            } else {
                0.0
            };
            let accel = a.commanded_accel(params).abs() / params.stop_decel_mps2;
            (1.0 - lane_change - accel).clamp(0.0, 1.0)
        }
    };

    let hard_zero = world.failure.is_some() || failure_cause_blocks(world, network);
    let total = if hard_zero {
        0.0
    } else {
        (weights.w_safety * safety
            + weights.w_legality * legality
            + weights.w_mission * mission
            + weights.w_efficiency * efficiency
            + weights.w_comfort * comfort)
            .clamp(0.0, 1.0)
    };
    ProfitBreakdown {
        safety: if world.in_collision() { 0.0 } else { safety },
        legality,
        mission,
        efficiency,
        comfort,
        total,
    }
}

fn failure_cause_blocks(world: &WorldState, network: &RoadNetwork) -> bool {
    use crate::world::FailureCause;
    matches!(
        failure_cause(world, network),
        Some(FailureCause::Collision) | Some(FailureCause::LaneEnded)
    )
}

/// Lateral time still needed for `ego` to sit fully in `target`, taking the
/// cheaper of finishing or aborting an in-flight change.
fn remaining_lane_change_time(
    ego: &VehicleState,
    target: LaneId,
    network: &RoadNetwork,
    lc_s: f64,
) -> Option<f64> {
    let p = ego.lateral_progress;
    let abort = network
        .lane_distance(ego.lane, target)
        .map(|d| (p + d as f64) * lc_s);
    let finish = ego.lane_change_target.and_then(|t| {
        network
            .lane_distance(t, target)
            .map(|d| (1.0 - p + d as f64) * lc_s)
    });
    match (abort, finish) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// 1 while the ego either is in the target lane or still has room to get
/// there, ramping linearly to 0 once the distance left can no longer cover
/// the remaining lane changes plus one action of slack.
fn mission_resource(ego: &VehicleState, network: &RoadNetwork, params: &DynamicsParams) -> f64 {
    let mission = network.mission();
    let lc_s = params.lane_change_duration_s;
    let Some(remaining_s) = remaining_lane_change_time(ego, mission.target_lane, network, lc_s) else {
        return 0.0;
    };
    if remaining_s <= 0.0 {
        return 1.0;
    }
    let Some(target) = network.lane(mission.target_lane) else {
        return 0.0;
    };
    let mut deadline = mission.must_be_in_lane_by_m.unwrap_or(target.length_m);
    for id in ego.occupied_lanes().filter(|&id| id != mission.target_lane) {
        if let Some(end) = network.lane(id).and_then(|l| l.ends_at_m) {
            deadline = deadline.min(end);
        }
    }
    let distance = deadline - ego.s_m;
    if distance <= 0.0 {
        return 0.0;
    }
    let hopeless = ego.speed_mps * remaining_s;
    let comfortable = ego.speed_mps * (remaining_s + params.action_duration_s);
    if distance >= comfortable {
        1.0
    } else if distance <= hopeless {
        0.0
    } else {
        (distance - hopeless) / (comfortable - hopeless)
    }
}
