//! Fixed-horizon comparison planner.
//!
//! Every feasible action is held for the whole horizon and the end state is
//! scored with the same profit evaluator the tree search uses. No action
//! sequences are considered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsParams, ManeuverAction, Simulator};
use crate::utility::{evaluate_profit, ProfitBreakdown, UtilityWeights};
use crate::world::{OtherVehicleModel, RoadNetwork, WorldState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedHorizonConfig {
    pub horizon_s: f64,
}

impl Default for FixedHorizonConfig {
    fn default() -> Self {
        Self { horizon_s: 5.0 }
    }
}

impl FixedHorizonConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.horizon_s > 0.0 && self.horizon_s.is_finite() {
            Ok(())
        } else {
            Err("horizon_s must be positive".into())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub action: ManeuverAction,
    pub v: f64,
    pub breakdown: ProfitBreakdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("no action is feasible from this state")]
    NoFeasibleAction,
}

/// Scores each feasible action sustained for `config.horizon_s` and returns
/// the best (earliest in action order on ties) with the full table.
pub fn plan_fixed(
    world: &WorldState,
    network: &RoadNetwork,
    model: OtherVehicleModel,
    config: &FixedHorizonConfig,
    weights: &UtilityWeights,
    params: &DynamicsParams,
) -> Result<(ManeuverAction, Vec<ActionValue>), BaselineError> {
    let sim = Simulator::new(network, params, model);
    let table: Vec<ActionValue> = ManeuverAction::ALL
        .iter()
        .filter_map(|&action| {
            let rollout = sim.sustain(world, action, config.horizon_s).ok()?;
            let breakdown = evaluate_profit(&rollout.world, network, Some(action), weights, params);
            Some(ActionValue {
                action,
                v: breakdown.total,
                breakdown,
            })
        })
        .collect();
    let best = table
        .iter()
        .fold(None::<&ActionValue>, |best, row| match best {
            Some(b) if b.v >= row.v => Some(b),
            _ => Some(row),
        })
        .ok_or(BaselineError::NoFeasibleAction)?;
    Ok((best.action, table))
}
