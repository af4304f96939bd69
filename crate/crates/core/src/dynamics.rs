//! Forward simulation of the ego maneuvers and the interacting vehicles.
//!
//! Longitudinal motion uses exact piecewise constant-acceleration kinematics,
//! so a step of `dt1 + dt2` equals a step of `dt1` followed by one of `dt2`.
//! Lane changes are time-parameterized: `lateral_progress` grows by
//! `dt / lane_change_duration_s` and the lane id swaps when it reaches one.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{
    failure_cause, mission_status, Lane, LaneId, MissionStatus, OtherVehicleModel, RoadNetwork, Side,
    VehicleState, WorldState,
};

/// Integration step used when an action is sustained over a longer period.
pub const SUBSTEP_S: f64 = 0.1;

const PROGRESS_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ManeuverAction {
    ChangeLaneLeft,
    ChangeLaneRight,
    KeepLaneAccelerate,
    KeepLaneSameSpeed,
    KeepLaneDecelerate,
    Stop,
}

impl ManeuverAction {
    pub const ALL: [ManeuverAction; 6] = [
        ManeuverAction::ChangeLaneLeft,
        ManeuverAction::ChangeLaneRight,
        ManeuverAction::KeepLaneAccelerate,
        ManeuverAction::KeepLaneSameSpeed,
        ManeuverAction::KeepLaneDecelerate,
        ManeuverAction::Stop,
    ];

    pub fn lane_change_side(self) -> Option<Side> {
        match self {
            ManeuverAction::ChangeLaneLeft => Some(Side::Left),
            ManeuverAction::ChangeLaneRight => Some(Side::Right),
            _ => None,
        }
    }

    pub fn is_lane_change(self) -> bool {
        self.lane_change_side().is_some()
    }

    pub fn is_keep_lane(self) -> bool {
        matches!(
            self,
            ManeuverAction::KeepLaneAccelerate
                | ManeuverAction::KeepLaneSameSpeed
                | ManeuverAction::KeepLaneDecelerate
        )
    }

    /// Signed longitudinal acceleration the action commands in its own lane.
    /// Lane changes report zero here; their passing acceleration is part of
    /// the maneuver itself.
    pub fn commanded_accel(self, params: &DynamicsParams) -> f64 {
        match self {
            ManeuverAction::KeepLaneAccelerate => params.accel_mps2,
            ManeuverAction::KeepLaneDecelerate => -params.decel_mps2,
            ManeuverAction::Stop => -params.stop_decel_mps2,
            _ => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ManeuverAction::ChangeLaneLeft => "ChangeLaneLeft",
            ManeuverAction::ChangeLaneRight => "ChangeLaneRight",
            ManeuverAction::KeepLaneAccelerate => "KeepLaneAccelerate",
            ManeuverAction::KeepLaneSameSpeed => "KeepLaneSameSpeed",
            ManeuverAction::KeepLaneDecelerate => "KeepLaneDecelerate",
            ManeuverAction::Stop => "Stop",
        }
    }
}

impl fmt::Display for ManeuverAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdmParams {
    /// Desired speed; `None` uses the speed limit of the vehicle's lane.
    pub desired_speed_mps: Option<f64>,
    pub max_accel_mps2: f64,
    pub comfort_decel_mps2: f64,
    pub min_gap_m: f64,
    pub time_headway_s: f64,
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            desired_speed_mps: None,
            max_accel_mps2: 1.5,
            comfort_decel_mps2: 2.0,
            min_gap_m: 2.0,
            time_headway_s: 1.5,
            delta: 4.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("max_accel_mps2", self.max_accel_mps2),
            ("comfort_decel_mps2", self.comfort_decel_mps2),
            ("min_gap_m", self.min_gap_m),
            ("time_headway_s", self.time_headway_s),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(format!("idm.{name} must be positive"));
            }
        }
        if let Some(v0) = self.desired_speed_mps {
            if !(v0 > 0.0) {
                return Err("idm.desired_speed_mps must be positive".into());
            }
        }
        if !(self.delta >= 1.0) {
            return Err("idm.delta must be at least 1".into());
        }
        Ok(())
    }

    /// IDM acceleration for a follower at `speed` with desired speed `v0`,
    /// given `(gap, leader_speed)` to its leader if any.
    pub fn acceleration(&self, speed: f64, v0: f64, leader: Option<(f64, f64)>) -> f64 {
        let free = 1.0 - (speed / v0).powf(self.delta);
        let interaction = match leader {
            Some((gap, leader_speed)) => {
                let closing = speed - leader_speed;
                let dynamic = speed * self.time_headway_s
                    + speed * closing / (2.0 * (self.max_accel_mps2 * self.comfort_decel_mps2).sqrt());
                let desired_gap = self.min_gap_m + dynamic.max(0.0);
                (desired_gap / gap.max(1e-3)).powi(2)
            }
            None => 0.0,
        };
        self.max_accel_mps2 * (free - interaction)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsParams {
    pub accel_mps2: f64,
    pub decel_mps2: f64,
    pub stop_decel_mps2: f64,
    pub lane_change_duration_s: f64,
    /// Duration of one tree edge.
    pub action_duration_s: f64,
    pub idm: IdmParams,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            accel_mps2: 1.5,
            decel_mps2: 2.0,
            stop_decel_mps2: 4.0,
            lane_change_duration_s: 3.0,
            action_duration_s: 2.0,
            idm: IdmParams::default(),
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("accel_mps2", self.accel_mps2),
            ("decel_mps2", self.decel_mps2),
            ("stop_decel_mps2", self.stop_decel_mps2),
            ("lane_change_duration_s", self.lane_change_duration_s),
            ("action_duration_s", self.action_duration_s),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        self.idm.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("{action} is infeasible: {reason}")]
    InfeasibleAction {
        action: ManeuverAction,
        reason: &'static str,
    },
}

/// Advances `(s, v)` for `dt` under acceleration `a`. Speed is clamped at
/// zero and, when `cap` is given, a positive acceleration stops at the cap.
fn integrate(s: f64, v: f64, a: f64, dt: f64, cap: Option<f64>) -> (f64, f64, f64) {
    if a < 0.0 {
        let t_stop = v / -a;
        if dt >= t_stop {
            return (s + 0.5 * v * t_stop, 0.0, 0.0);
        }
    } else if a > 0.0 {
        if let Some(cap) = cap {
            if v >= cap {
                return (s + v * dt, v, 0.0);
            }
            let t_cap = (cap - v) / a;
            if dt >= t_cap {
                let s_cap = s + v * t_cap + 0.5 * a * t_cap * t_cap;
                return (s_cap + cap * (dt - t_cap), cap, 0.0);
            }
        }
    }
    (s + v * dt + 0.5 * a * dt * dt, v + a * dt, a)
}

/// Steps worlds forward on a fixed road network.
#[derive(Clone, Copy, Debug)]
pub struct Simulator<'a> {
    pub network: &'a RoadNetwork,
    pub params: &'a DynamicsParams,
    pub model: OtherVehicleModel,
}

/// World after sustaining one action, plus whether its lane change finished.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub world: WorldState,
    pub lane_change_completed: bool,
}

impl<'a> Simulator<'a> {
    pub fn new(network: &'a RoadNetwork, params: &'a DynamicsParams, model: OtherVehicleModel) -> Self {
        Self {
            network,
            params,
            model,
        }
    }

    fn lane(&self, id: LaneId) -> &Lane {
        self.network
            .lane(id)
            .expect("vehicle lanes are validated against the network")
    }

    /// Checks whether `action` can start from `ego`'s current state.
    pub fn check_feasible(&self, ego: &VehicleState, action: ManeuverAction) -> Result<(), DynamicsError> {
        let Some(side) = action.lane_change_side() else {
            return Ok(());
        };
        if let Some(target) = ego.lane_change_target {
            // Continuing toward the target, or returning to the origin lane.
            if self.side_of(ego.lane, target) == Some(side) || self.side_of(target, ego.lane) == Some(side) {
                return Ok(());
            }
        }
        let lane = self.lane(ego.lane);
        let Some(neighbor) = lane.neighbor(side) else {
            return Err(DynamicsError::InfeasibleAction {
                action,
                reason: "no neighbor lane on that side",
            });
        };
        if ego.lane_change_target.is_some() {
            return Err(DynamicsError::InfeasibleAction {
                action,
                reason: "another lane change is in flight",
            });
        }
        if !self.lane(neighbor).accepts_entry_at(ego.s_m) {
            return Err(DynamicsError::InfeasibleAction {
                action,
                reason: "neighbor lane cannot be entered here",
            });
        }
        Ok(())
    }

    pub fn feasible_actions(&self, ego: &VehicleState) -> Vec<ManeuverAction> {
        ManeuverAction::ALL
            .into_iter()
            .filter(|&a| self.check_feasible(ego, a).is_ok())
            .collect()
    }

    fn side_of(&self, from: LaneId, to: LaneId) -> Option<Side> {
        let lane = self.network.lane(from)?;
        if lane.left_neighbor == Some(to) {
            Some(Side::Left)
        } else if lane.right_neighbor == Some(to) {
            Some(Side::Right)
        } else {
            None
        }
    }

    /// Moves the ego for `dt`. With `lateral` false a lane-change action only
    /// contributes its longitudinal profile (used once its change finished).
    fn step_ego(
        &self,
        ego: &VehicleState,
        action: ManeuverAction,
        lateral: bool,
        dt: f64,
    ) -> Result<(VehicleState, bool), DynamicsError> {
        if lateral {
            self.check_feasible(ego, action)?;
        }
        let mut next = ego.clone();
        let rate = dt / self.params.lane_change_duration_s;
        let mut completed = false;

        match action.lane_change_side().filter(|_| lateral) {
            Some(side) => match ego.lane_change_target {
                Some(target) if self.side_of(ego.lane, target) == Some(side) => {
                    next.lateral_progress = ego.lateral_progress + rate;
                }
                Some(_) => {
                    next.lateral_progress = ego.lateral_progress - rate;
                }
                None => {
                    let neighbor = self.lane(ego.lane).neighbor(side).expect("checked above");
                    next.lane_change_target = Some(neighbor);
                    next.lateral_progress = rate;
                }
            },
            None if ego.lane_change_target.is_some() => {
                // Any non-lateral action aborts an in-flight change.
                next.lateral_progress = ego.lateral_progress - rate;
            }
            None => {}
        }
        if next.lane_change_target.is_some() {
            if next.lateral_progress >= 1.0 - PROGRESS_EPS {
                next.lane = next.lane_change_target.take().expect("present");
                next.lateral_progress = 0.0;
                completed = true;
            } else if next.lateral_progress <= PROGRESS_EPS {
                next.lane_change_target = None;
                next.lateral_progress = 0.0;
            }
        }

        let (accel, cap) = if action.is_lane_change() {
            let toward = next.lane_change_target.unwrap_or(next.lane);
            (self.params.accel_mps2, Some(self.lane(toward).speed_limit_mps))
        } else {
            (action.commanded_accel(self.params), None)
        };
        let (s, v, applied) = integrate(ego.s_m, ego.speed_mps, accel, dt, cap);
        next.s_m = s.min(self.lane(next.lane).length_m);
        next.speed_mps = v;
        next.accel_mps2 = applied;
        Ok((next, completed))
    }

    /// Advances the interacting vehicles by `dt`. Vehicles running past the
    /// end of their lane leave the world.
    pub fn step_others(&self, world: &WorldState, dt: f64) -> Vec<VehicleState> {
        let idm = &self.params.idm;
        world
            .others
            .iter()
            .filter_map(|v| {
                let accel = match self.model {
                    OtherVehicleModel::ConstantSpeed => 0.0,
                    OtherVehicleModel::Idm => {
                        let v0 = idm
                            .desired_speed_mps
                            .unwrap_or_else(|| self.lane(v.lane).speed_limit_mps);
                        let leader = std::iter::once(&world.ego)
                            .chain(world.others.iter())
                            .filter(|o| o.id != v.id && o.s_m > v.s_m && v.shares_lane_with(o))
                            .min_by(|a, b| a.s_m.total_cmp(&b.s_m))
                            .map(|o| (o.s_m - v.s_m, o.speed_mps));
                        idm.acceleration(v.speed_mps, v0, leader)
                    }
                };
                let (s, speed, applied) = integrate(v.s_m, v.speed_mps, accel, dt, None);
                let lane = self.lane(v.lane);
                let end = lane.ends_at_m.unwrap_or(lane.length_m);
                (s <= end).then(|| VehicleState {
                    s_m: s,
                    speed_mps: speed,
                    accel_mps2: applied,
                    ..v.clone()
                })
            })
            .collect()
    }

    fn step(
        &self,
        world: &WorldState,
        action: ManeuverAction,
        lateral: bool,
        dt: f64,
    ) -> Result<(WorldState, bool), DynamicsError> {
        let (ego, completed) = self.step_ego(&world.ego, action, lateral, dt)?;
        let others = self.step_others(world, dt);
        let mut next = WorldState {
            ego,
            others,
            time_s: world.time_s + dt,
            failure: world.failure,
        };
        if next.failure.is_none() {
            // A sign flip of the gap while sharing a lane means the vehicles
            // drove through each other within the step.
            let passed_through = world.others.iter().any(|before| {
                next.others
                    .iter()
                    .find(|o| o.id == before.id)
                    .is_some_and(|after| {
                        world.ego.shares_lane_with(before)
                            && next.ego.shares_lane_with(after)
                            && (before.s_m - world.ego.s_m).signum() != (after.s_m - next.ego.s_m).signum()
                    })
            });
            next.failure = if passed_through {
                Some(crate::world::FailureCause::Collision)
            } else {
                failure_cause(&next, self.network)
            };
        }
        Ok((next, completed))
    }

    /// Successor world after `dt` under `action`, stepping the ego and the
    /// interacting vehicles together.
    pub fn apply_ego_action(
        &self,
        world: &WorldState,
        action: ManeuverAction,
        dt: f64,
    ) -> Result<WorldState, DynamicsError> {
        self.step(world, action, true, dt).map(|(w, _)| w)
    }

    /// Holds `action` for `duration_s`, integrating at [`SUBSTEP_S`]. Once
    /// the action's lane change completes, the rest of the period continues
    /// straight. Stops early on failure, which is absorbing.
    pub fn sustain(
        &self,
        world: &WorldState,
        action: ManeuverAction,
        duration_s: f64,
    ) -> Result<Rollout, DynamicsError> {
        self.sustain_until(world, action, duration_s, |s| s == MissionStatus::Failure)
    }

    /// Like [`Simulator::sustain`], but stops after the first substep whose
    /// mission status satisfies `stop`.
    pub fn sustain_until(
        &self,
        world: &WorldState,
        action: ManeuverAction,
        duration_s: f64,
        stop: impl Fn(MissionStatus) -> bool,
    ) -> Result<Rollout, DynamicsError> {
        self.check_feasible(&world.ego, action)?;
        let steps = (duration_s / SUBSTEP_S - 1e-9).ceil().max(1.0) as usize;
        let mut current = world.clone();
        let mut lateral = true;
        let mut completed_any = false;
        let mut elapsed = 0.0;
        for i in 0..steps {
            let dt = if i + 1 == steps {
                duration_s - elapsed
            } else {
                SUBSTEP_S
            };
            let (next, completed) = self.step(&current, action, lateral, dt)?;
            elapsed += dt;
            current = next;
            if completed {
                lateral = false;
                completed_any = true;
            }
            if stop(mission_status(&current, self.network)) {
                break;
            }
        }
        Ok(Rollout {
            world: current,
            lane_change_completed: completed_any,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{MissionGoal, MissionKind};

    const KMH20: f64 = 20.0 / 3.6;

    fn network() -> RoadNetwork {
        let lane = |id, left: Option<u32>, right: Option<u32>| Lane {
            id: LaneId(id),
            length_m: 1000.0,
            speed_limit_mps: 50.0 / 3.6,
            left_neighbor: left.map(LaneId),
            right_neighbor: right.map(LaneId),
            ends_at_m: None,
            exit_window_m: None,
            is_exit: false,
        };
        RoadNetwork::new(
            vec![lane(0, Some(1), None), lane(1, None, Some(0))],
            MissionGoal {
                kind: MissionKind::ReachEnd,
                target_lane: LaneId(0),
                must_be_in_lane_by_m: None,
            },
        )
        .unwrap()
    }

    fn world(lane: u32) -> WorldState {
        WorldState::new(VehicleState::new(0, lane, 100.0, KMH20), vec![])
    }

    #[test]
    fn same_speed_is_constant_velocity() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let next = sim
            .apply_ego_action(&world(0), ManeuverAction::KeepLaneSameSpeed, 2.0)
            .unwrap();
        assert!((next.ego.s_m - 100.0 - 11.111_111_111).abs() < 1e-6);
        assert_eq!(next.ego.speed_mps, KMH20);
    }

    #[test]
    fn accelerate_follows_constant_acceleration() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let next = sim
            .apply_ego_action(&world(0), ManeuverAction::KeepLaneAccelerate, 2.0)
            .unwrap();
        assert!((next.ego.speed_mps - (KMH20 + 3.0)).abs() < 1e-12);
        assert!((next.ego.s_m - 100.0 - (KMH20 * 2.0 + 3.0)).abs() < 1e-9);
    }

    #[test]
    fn left_change_from_leftmost_lane_is_infeasible() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let err = sim
            .apply_ego_action(&world(1), ManeuverAction::ChangeLaneLeft, 1.0)
            .unwrap_err();
        assert!(matches!(err, DynamicsError::InfeasibleAction { .. }));
    }

    #[test]
    fn stop_brakes_to_a_standstill() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let next = sim
            .apply_ego_action(&world(0), ManeuverAction::Stop, 5.0)
            .unwrap();
        assert_eq!(next.ego.speed_mps, 0.0);
        let expected = KMH20 * KMH20 / (2.0 * 4.0);
        assert!((next.ego.s_m - 100.0 - expected).abs() < 1e-9);
    }

    #[test]
    fn lane_change_completes_after_its_duration() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let mut w = world(0);
        for _ in 0..30 {
            w = sim
                .apply_ego_action(&w, ManeuverAction::ChangeLaneLeft, 0.1)
                .unwrap();
        }
        assert_eq!(w.ego.lane, LaneId(1));
        assert_eq!(w.ego.lateral_progress, 0.0);
        assert_eq!(w.ego.lane_change_target, None);
    }

    #[test]
    fn keep_lane_aborts_an_in_flight_change() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let w = sim
            .apply_ego_action(&world(0), ManeuverAction::ChangeLaneLeft, 1.5)
            .unwrap();
        assert!((w.ego.lateral_progress - 0.5).abs() < 1e-12);
        let w = sim
            .apply_ego_action(&w, ManeuverAction::KeepLaneSameSpeed, 0.75)
            .unwrap();
        assert!((w.ego.lateral_progress - 0.25).abs() < 1e-12);
        let w = sim
            .apply_ego_action(&w, ManeuverAction::KeepLaneSameSpeed, 1.0)
            .unwrap();
        assert_eq!(w.ego.lane, LaneId(0));
        assert_eq!(w.ego.lane_change_target, None);
    }

    #[test]
    fn sustained_change_continues_straight_after_completion() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let r = sim
            .sustain(&world(0), ManeuverAction::ChangeLaneLeft, 5.0)
            .unwrap();
        assert!(r.lane_change_completed);
        assert_eq!(r.world.ego.lane, LaneId(1));
        assert_eq!(r.world.ego.lane_change_target, None);
    }

    #[test]
    fn constant_speed_others_advance() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let mut w = world(0);
        w.others.push(VehicleState::new(1, 0, 130.0, KMH20));
        let others = sim.step_others(&w, 1.0);
        assert!((others[0].s_m - 130.0 - 5.555_555_556).abs() < 1e-6);
    }

    #[test]
    fn idm_equilibrium_without_leader() {
        let idm = IdmParams::default();
        assert_eq!(idm.acceleration(10.0, 10.0, None), 0.0);
    }

    #[test]
    fn idm_standing_start_behind_a_leader() {
        let idm = IdmParams::default();
        let a = idm.acceleration(0.0, 13.0, Some((10.0, 0.0)));
        let expected = 1.5 * (1.0 - (2.0_f64 / 10.0).powi(2));
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn passing_through_a_vehicle_is_a_collision() {
        let net = network();
        let params = DynamicsParams::default();
        let sim = Simulator::new(&net, &params, OtherVehicleModel::ConstantSpeed);
        let mut w = WorldState::new(VehicleState::new(0, 0, 100.0, 30.0), vec![]);
        w.others.push(VehicleState::new(1, 0, 106.0, 0.0));
        let next = sim
            .apply_ego_action(&w, ManeuverAction::KeepLaneSameSpeed, 1.0)
            .unwrap();
        assert_eq!(next.failure, Some(crate::world::FailureCause::Collision));
    }
}
