//! Road geometry, vehicle state and scenario ingestion.
//!
//! Geometry is one-dimensional per lane: every lane shares the same
//! longitudinal frame `s`, and lateral structure is captured only through
//! left/right adjacency. A vehicle changing lanes carries a
//! `lateral_progress` fraction and occupies both its origin and target lane
//! until the change completes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DynamicsParams;
use crate::mcts::SearchOverrides;
use crate::utility::UtilityWeights;

/// Longitudinal distance (center to center) below which two vehicles sharing
/// a lane are in collision.
pub const COLLISION_DISTANCE_M: f64 = 5.0;

const KMH_PER_MPS: f64 = 3.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LaneId(pub u32);

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub length_m: f64,
    pub speed_limit_mps: f64,
    pub left_neighbor: Option<LaneId>,
    pub right_neighbor: Option<LaneId>,
    /// Position where the lane terminates; occupying the lane beyond it is a failure.
    pub ends_at_m: Option<f64>,
    /// Longitudinal stretch `(start, end)` within which the lane can be entered.
    pub exit_window_m: Option<(f64, f64)>,
    pub is_exit: bool,
}

impl Lane {
    pub fn neighbor(&self, side: Side) -> Option<LaneId> {
        match side {
            Side::Left => self.left_neighbor,
            Side::Right => self.right_neighbor,
        }
    }

    /// Whether a vehicle at `s_m` may begin moving into this lane.
    pub fn accepts_entry_at(&self, s_m: f64) -> bool {
        let before_end = self.ends_at_m.is_none_or(|end| s_m < end);
        let in_window = self
            .exit_window_m
            .is_none_or(|(start, end)| s_m >= start && s_m <= end);
        before_end && in_window
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissionKind {
    ReachEnd,
    TakeExit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionGoal {
    pub kind: MissionKind,
    pub target_lane: LaneId,
    /// Latest longitudinal position by which the ego must occupy `target_lane`.
    pub must_be_in_lane_by_m: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    lanes: Vec<Lane>,
    mission: MissionGoal,
    #[serde(skip)]
    index: HashMap<LaneId, usize>,
}

impl RoadNetwork {
    /// Builds a network and checks every lane and mission invariant.
    pub fn new(lanes: Vec<Lane>, mission: MissionGoal) -> Result<Self, ValidationError> {
        let mut index = HashMap::with_capacity(lanes.len());
        for (i, lane) in lanes.iter().enumerate() {
            if index.insert(lane.id, i).is_some() {
                return Err(ValidationError::new(
                    format!("network[{i}].id"),
                    format!("duplicate lane id {}", lane.id),
                ));
            }
        }
        let network = Self {
            lanes,
            mission,
            index,
        };
        network.validate()?;
        Ok(network)
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn mission(&self) -> &MissionGoal {
        &self.mission
    }

    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.index.get(&id).map(|&i| &self.lanes[i])
    }

    /// Number of lane changes needed to get from `from` to `to`, if reachable.
    pub fn lane_distance(&self, from: LaneId, to: LaneId) -> Option<u32> {
        if from == to {
            return Some(0);
        }
        let mut seen = BTreeSet::from([from]);
        let mut frontier = vec![from];
        let mut hops = 0;
        while !frontier.is_empty() {
            hops += 1;
            let mut next = Vec::new();
            for id in frontier {
                let Some(lane) = self.lane(id) else { continue };
                for n in [lane.left_neighbor, lane.right_neighbor].into_iter().flatten() {
                    if n == to {
                        return Some(hops);
                    }
                    if seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        None
    }

    fn validate(&self) -> Result<(), ValidationError> {
        if self.lanes.is_empty() {
            return Err(ValidationError::new("network", "at least one lane is required"));
        }
        for (i, lane) in self.lanes.iter().enumerate() {
            let at = |field: &str| format!("network[{i}].{field}");
            if !(lane.length_m > 0.0 && lane.length_m.is_finite()) {
                return Err(ValidationError::new(at("length_m"), "must be positive"));
            }
            if !(lane.speed_limit_mps > 0.0 && lane.speed_limit_mps.is_finite()) {
                return Err(ValidationError::new(at("speed_limit"), "must be positive"));
            }
            if let Some(end) = lane.ends_at_m {
                if !(end > 0.0 && end <= lane.length_m) {
                    return Err(ValidationError::new(at("ends_at_m"), "must lie in (0, length_m]"));
                }
            }
            if let Some((start, end)) = lane.exit_window_m {
                if !(start >= 0.0 && start < end && end <= lane.length_m) {
                    return Err(ValidationError::new(
                        at("exit_window_m"),
                        "must satisfy 0 <= start < end <= length_m",
                    ));
                }
            }
            for (side, field) in [(Side::Left, "left"), (Side::Right, "right")] {
                let Some(n) = lane.neighbor(side) else { continue };
                let Some(other) = self.lane(n) else {
                    return Err(ValidationError::new(at(field), format!("unknown lane {n}")));
                };
                let back = match side {
                    Side::Left => other.right_neighbor,
                    Side::Right => other.left_neighbor,
                };
                if back != Some(lane.id) || n == lane.id {
                    return Err(ValidationError::new(
                        at(field),
                        format!("neighbor reference to lane {n} is not symmetric"),
                    ));
                }
            }
        }
        let Some(target) = self.lane(self.mission.target_lane) else {
            return Err(ValidationError::new(
                "mission.target_lane",
                format!("unknown lane {}", self.mission.target_lane),
            ));
        };
        if let Some(by) = self.mission.must_be_in_lane_by_m {
            let mut extent = target.length_m;
            for n in [target.left_neighbor, target.right_neighbor]
                .into_iter()
                .flatten()
            {
                if let Some(l) = self.lane(n) {
                    extent = extent.max(l.length_m);
                }
            }
            if !(by >= 0.0 && by <= extent) {
                return Err(ValidationError::new(
                    "mission.must_be_in_lane_by_m",
                    "must lie within the target or an adjacent lane",
                ));
            }
        }
        Ok(())
    }
}

/// Kinematic state of a single vehicle in lane coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: VehicleId,
    pub lane: LaneId,
    pub s_m: f64,
    pub speed_mps: f64,
    /// Longitudinal acceleration applied over the last step.
    pub accel_mps2: f64,
    /// Progress of an in-flight lane change, 0 when fully in `lane`.
    pub lateral_progress: f64,
    pub lane_change_target: Option<LaneId>,
}

impl VehicleState {
    pub fn new(id: u32, lane: u32, s_m: f64, speed_mps: f64) -> Self {
        Self {
            id: VehicleId(id),
            lane: LaneId(lane),
            s_m,
            speed_mps,
            accel_mps2: 0.0,
            lateral_progress: 0.0,
            lane_change_target: None,
        }
    }

    /// Lanes the vehicle currently overlaps: its own, plus the target of an
    /// in-flight change.
    pub fn occupied_lanes(&self) -> impl Iterator<Item = LaneId> + '_ {
        std::iter::once(self.lane).chain(self.lane_change_target.filter(|_| self.lateral_progress > 0.0))
    }

    pub fn occupies(&self, lane: LaneId) -> bool {
        self.occupied_lanes().any(|l| l == lane)
    }

    pub fn is_fully_in(&self, lane: LaneId) -> bool {
        self.lane == lane && self.lateral_progress == 0.0
    }

    pub fn shares_lane_with(&self, other: &VehicleState) -> bool {
        self.occupied_lanes().any(|l| other.occupies(l))
    }
}

/// Why a trace entered the absorbing failure state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureCause {
    Collision,
    LaneEnded,
    MissedTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub ego: VehicleState,
    pub others: Vec<VehicleState>,
    pub time_s: f64,
    /// Set once by the simulator when the trace fails; never cleared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureCause>,
}

impl WorldState {
    pub fn new(ego: VehicleState, others: Vec<VehicleState>) -> Self {
        Self {
            ego,
            others,
            time_s: 0.0,
            failure: None,
        }
    }

    /// Vehicles in collision with the ego right now.
    pub fn colliding_with_ego(&self) -> impl Iterator<Item = &VehicleState> {
        self.others
            .iter()
            .filter(|o| self.ego.shares_lane_with(o) && (o.s_m - self.ego.s_m).abs() < COLLISION_DISTANCE_M)
    }

    pub fn in_collision(&self) -> bool {
        self.colliding_with_ego().next().is_some()
    }

    /// The nearest vehicle strictly ahead of the ego in any lane it occupies.
    pub fn leader_of_ego(&self) -> Option<&VehicleState> {
        self.others
            .iter()
            .filter(|o| o.s_m > self.ego.s_m && self.ego.shares_lane_with(o))
            .min_by(|a, b| a.s_m.total_cmp(&b.s_m))
    }

    pub fn validate(&self, network: &RoadNetwork) -> Result<(), ValidationError> {
        if !(self.time_s >= 0.0) {
            return Err(ValidationError::new("initial.time_s", "must be non-negative"));
        }
        check_vehicle(&self.ego, network, "initial.ego")?;
        let mut ids = BTreeSet::from([self.ego.id]);
        for (i, other) in self.others.iter().enumerate() {
            let path = format!("initial.others[{i}]");
            check_vehicle(other, network, &path)?;
            if !ids.insert(other.id) {
                return Err(ValidationError::new(
                    format!("{path}.id"),
                    format!("vehicle id {} is not unique", other.id.0),
                ));
            }
        }
        Ok(())
    }
}

fn check_vehicle(v: &VehicleState, network: &RoadNetwork, path: &str) -> Result<(), ValidationError> {
    let Some(lane) = network.lane(v.lane) else {
        return Err(ValidationError::new(
            format!("{path}.lane"),
            format!("unknown lane {}", v.lane),
        ));
    };
    if !(v.speed_mps >= 0.0 && v.speed_mps.is_finite()) {
        return Err(ValidationError::new(
            format!("{path}.speed"),
            "must be non-negative",
        ));
    }
    if !(v.s_m >= 0.0 && v.s_m <= lane.length_m) {
        return Err(ValidationError::new(
            format!("{path}.s_m"),
            "must lie within the lane",
        ));
    }
    if !(0.0..=1.0).contains(&v.lateral_progress) {
        return Err(ValidationError::new(
            format!("{path}.lateral_progress"),
            "must lie in [0, 1]",
        ));
    }
    if v.lane_change_target.is_some() != (v.lateral_progress > 0.0) {
        return Err(ValidationError::new(
            format!("{path}.lane_change_target"),
            "must be present exactly when lateral_progress > 0",
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtherVehicleModel {
    #[default]
    #[serde(alias = "ConstantSpeed")]
    ConstantSpeed,
    #[serde(alias = "IDM", alias = "Idm")]
    Idm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissionStatus {
    InProgress,
    Success,
    Failure,
}

impl MissionStatus {
    pub fn is_terminal(self) -> bool {
        self != MissionStatus::InProgress
    }
}

/// Failure conditions that hold in `world` right now, ignoring the sticky
/// failure flag.
pub fn failure_cause(world: &WorldState, network: &RoadNetwork) -> Option<FailureCause> {
    if world.in_collision() {
        return Some(FailureCause::Collision);
    }
    let ego = &world.ego;
    let past_end = ego.occupied_lanes().any(|id| {
        network
            .lane(id)
            .and_then(|l| l.ends_at_m)
            .is_some_and(|end| ego.s_m > end)
    });
    if past_end {
        return Some(FailureCause::LaneEnded);
    }
    let mission = network.mission();
    if let Some(by) = mission.must_be_in_lane_by_m {
        if ego.s_m > by && !ego.is_fully_in(mission.target_lane) {
            return Some(FailureCause::MissedTarget);
        }
    }
    None
}

/// Classifies `world` against the network's mission.
pub fn mission_status(world: &WorldState, network: &RoadNetwork) -> MissionStatus {
    if world.failure.is_some() || failure_cause(world, network).is_some() {
        return MissionStatus::Failure;
    }
    let mission = network.mission();
    let ego = &world.ego;
    if !ego.is_fully_in(mission.target_lane) {
        return MissionStatus::InProgress;
    }
    let Some(target) = network.lane(mission.target_lane) else {
        return MissionStatus::InProgress;
    };
    let done = match mission.kind {
        MissionKind::ReachEnd => {
            let goal = mission.must_be_in_lane_by_m.unwrap_or(target.length_m);
            ego.s_m >= goal
        }
        MissionKind::TakeExit => target
            .exit_window_m
            .is_none_or(|(start, end)| ego.s_m >= start && ego.s_m <= end),
    };
    if done {
        MissionStatus::Success
    } else {
        MissionStatus::InProgress
    }
}

/// A fully validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub network: RoadNetwork,
    pub initial: WorldState,
    pub other_vehicle_model: OtherVehicleModel,
    pub duration_s: f64,
    pub replan_period_s: f64,
    pub rng_seed: u64,
    pub dynamics: DynamicsParams,
    pub utility_weights: UtilityWeights,
    pub search: SearchOverrides,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.duration_s > 0.0) {
            return Err(ValidationError::new("duration_s", "must be positive"));
        }
        if !(self.replan_period_s > 0.0) {
            return Err(ValidationError::new("replan_period_s", "must be positive"));
        }
        self.initial.validate(&self.network)?;
        self.dynamics
            .validate()
            .map_err(|m| ValidationError::new("dynamics", m))?;
        self.utility_weights
            .validate()
            .map_err(|m| ValidationError::new("utility_weights", m))?;
        self.search
            .validate()
            .map_err(|m| ValidationError::new("search", m))?;
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let mut unknown = Vec::new();
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_ignored::deserialize(de, |path| {
            let segments: Vec<String> = path
                .to_string()
                .split('.')
                .filter(|s| *s != "?")
                .map(String::from)
                .collect();
            unknown.push(segments.join("."));
        })
        .map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if let Some(path) = unknown.into_iter().next() {
            return Err(ValidationError::new(path, "unknown key").into());
        }
        Ok(file.into_config()?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from_config(self))
            .expect("scenario file is always serializable")
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_json_str(&text)
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{path}`: {message}")]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

// On-disk layout. Speeds may be given in km/h or m/s via the key suffix.

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    network: Vec<LaneFile>,
    mission: MissionFile,
    initial: InitialFile,
    #[serde(default)]
    other_vehicle_model: OtherVehicleModel,
    duration_s: f64,
    replan_period_s: f64,
    rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dynamics: Option<DynamicsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utility_weights: Option<UtilityWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    search: Option<SearchOverrides>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LaneFile {
    id: u32,
    length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speed_limit_kmh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speed_limit_mps: Option<f64>,
    #[serde(default)]
    left: Option<u32>,
    #[serde(default)]
    right: Option<u32>,
    #[serde(default)]
    ends_at_m: Option<f64>,
    #[serde(default)]
    exit_window_m: Option<(f64, f64)>,
    #[serde(default)]
    is_exit: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct MissionFile {
    kind: MissionKindFile,
    target_lane: u32,
    #[serde(default)]
    must_be_in_lane_by_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MissionKindFile {
    #[serde(alias = "ReachEnd")]
    ReachEnd,
    #[serde(alias = "TakeExit")]
    TakeExit,
}

#[derive(Debug, Serialize, Deserialize)]
struct InitialFile {
    ego: VehicleFile,
    #[serde(default)]
    others: Vec<VehicleFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VehicleFile {
    id: u32,
    lane: u32,
    s_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speed_kmh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speed_mps: Option<f64>,
}

fn speed_from(kmh: Option<f64>, mps: Option<f64>, path: &str) -> Result<f64, ValidationError> {
    match (kmh, mps) {
        (Some(k), None) => Ok(k / KMH_PER_MPS),
        (None, Some(m)) => Ok(m),
        (Some(_), Some(_)) => Err(ValidationError::new(path, "give the speed in exactly one unit")),
        (None, None) => Err(ValidationError::new(path, "missing speed")),
    }
}

impl VehicleFile {
    fn into_state(self, path: &str) -> Result<VehicleState, ValidationError> {
        let speed = speed_from(self.speed_kmh, self.speed_mps, &format!("{path}.speed_kmh"))?;
        Ok(VehicleState::new(self.id, self.lane, self.s_m, speed))
    }

    fn from_state(v: &VehicleState) -> Self {
        Self {
            id: v.id.0,
            lane: v.lane.0,
            s_m: v.s_m,
            speed_kmh: None,
            speed_mps: Some(v.speed_mps),
        }
    }
}

impl ScenarioFile {
    fn into_config(self) -> Result<ScenarioConfig, ValidationError> {
        let mut lanes = Vec::with_capacity(self.network.len());
        for (i, l) in self.network.into_iter().enumerate() {
            let limit = speed_from(
                l.speed_limit_kmh,
                l.speed_limit_mps,
                &format!("network[{i}].speed_limit_kmh"),
            )?;
            lanes.push(Lane {
                id: LaneId(l.id),
                length_m: l.length_m,
                speed_limit_mps: limit,
                left_neighbor: l.left.map(LaneId),
                right_neighbor: l.right.map(LaneId),
                ends_at_m: l.ends_at_m,
                exit_window_m: l.exit_window_m,
                is_exit: l.is_exit,
            });
        }
        let mission = MissionGoal {
            kind: match self.mission.kind {
                MissionKindFile::ReachEnd => MissionKind::ReachEnd,
                MissionKindFile::TakeExit => MissionKind::TakeExit,
            },
            target_lane: LaneId(self.mission.target_lane),
            must_be_in_lane_by_m: self.mission.must_be_in_lane_by_m,
        };
        let network = RoadNetwork::new(lanes, mission)?;
        let ego = self.initial.ego.into_state("initial.ego")?;
        let others = self
            .initial
            .others
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.into_state(&format!("initial.others[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let config = ScenarioConfig {
            name: self.name,
            network,
            initial: WorldState::new(ego, others),
            other_vehicle_model: self.other_vehicle_model,
            duration_s: self.duration_s,
            replan_period_s: self.replan_period_s,
            rng_seed: self.rng_seed,
            dynamics: self.dynamics.unwrap_or_default(),
            utility_weights: self.utility_weights.unwrap_or_default(),
            search: self.search.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }

    fn from_config(c: &ScenarioConfig) -> Self {
        let mission = c.network.mission();
        Self {
            name: c.name.clone(),
            network: c
                .network
                .lanes()
                .iter()
                .map(|l| LaneFile {
                    id: l.id.0,
                    length_m: l.length_m,
                    speed_limit_kmh: None,
                    speed_limit_mps: Some(l.speed_limit_mps),
                    left: l.left_neighbor.map(|n| n.0),
                    right: l.right_neighbor.map(|n| n.0),
                    ends_at_m: l.ends_at_m,
                    exit_window_m: l.exit_window_m,
                    is_exit: l.is_exit,
                })
                .collect(),
            mission: MissionFile {
                kind: match mission.kind {
                    MissionKind::ReachEnd => MissionKindFile::ReachEnd,
                    MissionKind::TakeExit => MissionKindFile::TakeExit,
                },
                target_lane: mission.target_lane.0,
                must_be_in_lane_by_m: mission.must_be_in_lane_by_m,
            },
            initial: InitialFile {
                ego: VehicleFile::from_state(&c.initial.ego),
                others: c.initial.others.iter().map(VehicleFile::from_state).collect(),
            },
            other_vehicle_model: c.other_vehicle_model,
            duration_s: c.duration_s,
            replan_period_s: c.replan_period_s,
            rng_seed: c.rng_seed,
            dynamics: Some(c.dynamics.clone()),
            utility_weights: Some(c.utility_weights.clone()),
            search: Some(c.search.clone()),
        }
    }
}

/// Scenarios shipped with the crate.
pub mod bundled {
    use super::ScenarioConfig;

    pub const SCENARIO1_END_OF_LANE: &str = include_str!("../scenarios/scenario1_end_of_lane.json");
    pub const SCENARIO2_EXIT_RAMP: &str = include_str!("../scenarios/scenario2_exit_ramp.json");

    pub fn scenario1_end_of_lane() -> ScenarioConfig {
        ScenarioConfig::from_json_str(SCENARIO1_END_OF_LANE).expect("bundled scenario 1 is valid")
    }

    pub fn scenario2_exit_ramp() -> ScenarioConfig {
        ScenarioConfig::from_json_str(SCENARIO2_EXIT_RAMP).expect("bundled scenario 2 is valid")
    }

    pub fn all() -> Vec<ScenarioConfig> {
        vec![scenario1_end_of_lane(), scenario2_exit_ramp()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_lanes() -> RoadNetwork {
        RoadNetwork::new(
            vec![
                Lane {
                    id: LaneId(0),
                    length_m: 300.0,
                    speed_limit_mps: 50.0 / 3.6,
                    left_neighbor: Some(LaneId(1)),
                    right_neighbor: None,
                    ends_at_m: None,
                    exit_window_m: None,
                    is_exit: false,
                },
                Lane {
                    id: LaneId(1),
                    length_m: 300.0,
                    speed_limit_mps: 50.0 / 3.6,
                    left_neighbor: None,
                    right_neighbor: Some(LaneId(0)),
                    ends_at_m: Some(200.0),
                    exit_window_m: None,
                    is_exit: false,
                },
            ],
            MissionGoal {
                kind: MissionKind::ReachEnd,
                target_lane: LaneId(0),
                must_be_in_lane_by_m: Some(200.0),
            },
        )
        .unwrap()
    }

    #[test]
    fn asymmetric_neighbors_are_rejected() {
        let mut lanes = two_lanes().lanes().to_vec();
        lanes[1].right_neighbor = None;
        let err = RoadNetwork::new(lanes, two_lanes().mission().clone()).unwrap_err();
        assert_eq!(err.path, "network[0].left");
    }

    #[test]
    fn past_lane_end_is_failure() {
        let net = two_lanes();
        let world = WorldState::new(VehicleState::new(0, 1, 201.0, 5.0), vec![]);
        assert_eq!(mission_status(&world, &net), MissionStatus::Failure);
    }

    #[test]
    fn start_state_is_in_progress() {
        let net = two_lanes();
        let world = WorldState::new(VehicleState::new(0, 0, 0.0, 5.0), vec![]);
        assert_eq!(mission_status(&world, &net), MissionStatus::InProgress);
    }

    #[test]
    fn reach_end_succeeds_in_target_lane() {
        let net = two_lanes();
        let world = WorldState::new(VehicleState::new(0, 0, 200.0, 5.0), vec![]);
        assert_eq!(mission_status(&world, &net), MissionStatus::Success);
    }

    #[test]
    fn collision_is_failure_across_a_lane_change() {
        let net = two_lanes();
        let mut ego = VehicleState::new(0, 0, 50.0, 5.0);
        ego.lateral_progress = 0.4;
        ego.lane_change_target = Some(LaneId(1));
        let world = WorldState::new(ego, vec![VehicleState::new(1, 1, 53.0, 5.0)]);
        assert_eq!(mission_status(&world, &net), MissionStatus::Failure);
    }

    #[test]
    fn sticky_failure_wins() {
        let net = two_lanes();
        let mut world = WorldState::new(VehicleState::new(0, 0, 10.0, 5.0), vec![]);
        world.failure = Some(FailureCause::LaneEnded);
        assert_eq!(mission_status(&world, &net), MissionStatus::Failure);
    }

    #[test]
    fn lane_distance_walks_adjacency() {
        let net = two_lanes();
        assert_eq!(net.lane_distance(LaneId(1), LaneId(0)), Some(1));
        assert_eq!(net.lane_distance(LaneId(0), LaneId(0)), Some(0));
    }

    #[test]
    fn lane_change_target_requires_progress() {
        let net = two_lanes();
        let mut ego = VehicleState::new(0, 0, 10.0, 5.0);
        ego.lane_change_target = Some(LaneId(1));
        let err = WorldState::new(ego, vec![]).validate(&net).unwrap_err();
        assert_eq!(err.path, "initial.ego.lane_change_target");
    }
}
