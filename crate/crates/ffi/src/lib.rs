//! C ABI over the `cormcts` planner.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free` function. Every entry point returns a [`CormctsStatus`]
//! (or a plain value for the pure helpers) and never unwinds across the
//! boundary. After a non-`Ok` status, [`cormcts_last_error`] describes the
//! failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cormcts::harness::{resolve_search_config, run_scenario, PlannerKind, RunOverrides, RunTrace};
use cormcts::mcts::plan;
use cormcts::world::{load_scenario, MissionStatus, ScenarioConfig, ScenarioError};
use cormcts::{plan_fixed, ManeuverAction};

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CormctsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    PlannerError = 5,
    IoError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CormctsPlanner {
    Cormcts = 0,
    Fixed = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CormctsOutcome {
    InProgress = 0,
    Success = 1,
    Failure = 2,
}

/// Run settings. Zero or negative numeric fields keep the scenario value.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CormctsRunOptions {
    pub planner: CormctsPlanner,
    /// Used only when `use_seed` is true.
    pub seed: u64,
    pub use_seed: bool,
    pub max_nodes: usize,
    /// Wall-clock budget per planner call in milliseconds.
    pub budget_ms: f64,
    /// Ignore every wall-clock limit, which makes runs reproducible.
    pub node_cap_only: bool,
    pub no_pruning: bool,
}

/// Opaque scenario handle.
pub struct CormctsScenario(ScenarioConfig);

/// Opaque closed-loop trace handle.
pub struct CormctsTrace(RunTrace);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(CormctsStatus, String);

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let status = match e {
            ScenarioError::Io { .. } => CormctsStatus::IoError,
            ScenarioError::Parse(_) => CormctsStatus::ParseError,
            ScenarioError::Validation(_) => CormctsStatus::ValidationError,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CormctsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CormctsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {message}"));
            CormctsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CormctsStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(CormctsStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn overrides(options: Option<&CormctsRunOptions>) -> (PlannerKind, RunOverrides) {
    let Some(o) = options else {
        return (PlannerKind::Cormcts, RunOverrides::default());
    };
    let kind = match o.planner {
        CormctsPlanner::Cormcts => PlannerKind::Cormcts,
        CormctsPlanner::Fixed => PlannerKind::Fixed,
    };
    let overrides = RunOverrides {
        seed: o.use_seed.then_some(o.seed),
        max_nodes: (o.max_nodes > 0).then_some(o.max_nodes),
        budget_ms: (o.budget_ms > 0.0).then_some(o.budget_ms),
        node_cap_only: o.node_cap_only,
        no_pruning: o.no_pruning,
        ..RunOverrides::default()
    };
    (kind, overrides)
}

/// Default options: COR-MCTS with the scenario's own settings.
#[no_mangle]
pub extern "C" fn cormcts_run_options_default() -> CormctsRunOptions {
    CormctsRunOptions {
        planner: CormctsPlanner::Cormcts,
        seed: 0,
        use_seed: false,
        max_nodes: 0,
        budget_ms: 0.0,
        node_cap_only: false,
        no_pruning: false,
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cormcts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cormcts_scenario_from_file(
    path: *const c_char,
    out: *mut *mut CormctsScenario,
) -> CormctsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let config = load_scenario(path)?;
        write_out(out, Box::into_raw(Box::new(CormctsScenario(config))), "out")
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cormcts_scenario_from_json(
    json: *const c_char,
    out: *mut *mut CormctsScenario,
) -> CormctsStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let config = ScenarioConfig::from_json_str(text)?;
        write_out(out, Box::into_raw(Box::new(CormctsScenario(config))), "out")
    })
}

/// # Safety
/// `scenario` must come from a `cormcts_scenario_from_*` call and not be
/// freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cormcts_scenario_free(scenario: *mut CormctsScenario) {
    if !scenario.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(scenario))));
    }
}

/// Runs the scenario in closed loop. `options` may be null for defaults.
///
/// # Safety
/// Pointers must be valid; `out` receives a trace owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn cormcts_run(
    scenario: *const CormctsScenario,
    options: *const CormctsRunOptions,
    out: *mut *mut CormctsTrace,
) -> CormctsStatus {
    guard(|| {
        let scenario = deref(scenario, "scenario")?;
        let (kind, overrides) = overrides(options.as_ref());
        let trace = run_scenario(&scenario.0, kind, &overrides)
            .map_err(|e| Failure(CormctsStatus::ValidationError, e.to_string()))?;
        if let Some(e) = &trace.summary.error {
            return Err(Failure(CormctsStatus::PlannerError, e.clone()));
        }
        write_out(out, Box::into_raw(Box::new(CormctsTrace(trace))), "out")
    })
}

/// # Safety
/// `trace` must be a live trace handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cormcts_trace_outcome(
    trace: *const CormctsTrace,
    out: *mut CormctsOutcome,
) -> CormctsStatus {
    guard(|| {
        let outcome = match deref(trace, "trace")?.0.outcome() {
            MissionStatus::InProgress => CormctsOutcome::InProgress,
            MissionStatus::Success => CormctsOutcome::Success,
            MissionStatus::Failure => CormctsOutcome::Failure,
        };
        write_out(out, outcome, "out")
    })
}

/// # Safety
/// `trace` must be a live trace handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cormcts_trace_tick_count(
    trace: *const CormctsTrace,
    out: *mut usize,
) -> CormctsStatus {
    guard(|| write_out(out, deref(trace, "trace")?.0.ticks.len(), "out"))
}

/// Serializes the trace as line-delimited JSON. Release the string with
/// [`cormcts_string_free`].
///
/// # Safety
/// `trace` must be a live trace handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cormcts_trace_to_jsonl(
    trace: *const CormctsTrace,
    include_timing: bool,
    out: *mut *mut c_char,
) -> CormctsStatus {
    guard(|| {
        let text = deref(trace, "trace")?.0.to_jsonl(include_timing);
        let text = CString::new(text).map_err(|e| Failure(CormctsStatus::InvalidUtf8, e.to_string()))?;
        write_out(out, text.into_raw(), "out")
    })
}

/// # Safety
/// `trace` must come from [`cormcts_run`]. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cormcts_trace_free(trace: *mut CormctsTrace) {
    if !trace.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(trace))));
    }
}

/// # Safety
/// `s` must come from this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cormcts_string_free(s: *mut c_char) {
    if !s.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(CString::from_raw(s))));
    }
}

/// Plans one maneuver from the scenario's initial state. `out_action`
/// receives an index into the action order reported by
/// [`cormcts_action_name`].
///
/// # Safety
/// Pointers must be valid; `options` may be null.
#[no_mangle]
pub unsafe extern "C" fn cormcts_plan(
    scenario: *const CormctsScenario,
    options: *const CormctsRunOptions,
    out_action: *mut u32,
) -> CormctsStatus {
    guard(|| {
        let s = &deref(scenario, "scenario")?.0;
        let (kind, overrides) = overrides(options.as_ref());
        let planner_error = |e: String| Failure(CormctsStatus::PlannerError, e);
        let action = match kind {
            PlannerKind::Cormcts => {
                let config = resolve_search_config(s, &overrides);
                config.validate().map_err(planner_error)?;
                plan(
                    &s.initial,
                    &s.network,
                    s.other_vehicle_model,
                    &config,
                    &s.utility_weights,
                    &s.dynamics,
                )
                .map_err(|e| planner_error(e.to_string()))?
                .0
            }
            PlannerKind::Fixed => {
                plan_fixed(
                    &s.initial,
                    &s.network,
                    s.other_vehicle_model,
                    &overrides.fixed,
                    &s.utility_weights,
                    &s.dynamics,
                )
                .map_err(|e| planner_error(e.to_string()))?
                .0
            }
        };
        let index = ManeuverAction::ALL
            .iter()
            .position(|&a| a == action)
            .expect("action is listed");
        write_out(out_action, index as u32, "out_action")
    })
}

/// Static name of action `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn cormcts_action_name(index: u32) -> *const c_char {
    const NAMES: [&CStr; 6] = [
        c"ChangeLaneLeft",
        c"ChangeLaneRight",
        c"KeepLaneAccelerate",
        c"KeepLaneSameSpeed",
        c"KeepLaneDecelerate",
        c"Stop",
    ];
    NAMES.get(index as usize).map_or(ptr::null(), |n| n.as_ptr())
}

/// Upper confidence bound of a child; infinite when `node_visits` is 0.
#[no_mangle]
pub extern "C" fn cormcts_ucb_value(mean_u: f64, parent_visits: u64, node_visits: u64, c: f64) -> f64 {
    catch_unwind(|| cormcts::ucb_value(mean_u, parent_visits, node_visits, c)).unwrap_or(f64::NAN)
}
