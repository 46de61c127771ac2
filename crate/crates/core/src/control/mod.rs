//! Planners that steer the system with deterministic injection schedules.
//!
//! Everything here is constructive and valid for inertia ratio `η = 1` only,
//! where a disk collision swaps the particle's tangential velocity with the
//! rim speed. The planners produce [`InjectionPlan`]s; every plan is meant to
//! be validated by executing it in the event-driven dynamics, and the test
//! suites do exactly that.
//!
//! - [`plan_set_omega`] sets one disk's angular velocity within an arbitrary
//!   time budget, touching only lower-indexed disks plus one collision with
//!   the target;
//! - [`plan_set_disk_state`] lands a disk on a full `(φ, ω)` target;
//! - [`path::proper_path_from`] builds an exit path from any disk boundary
//!   point, and [`path::validate_proper_path`] checks the path conditions;
//! - [`flush::plan_flush`] drives a whole multi-particle state to the empty
//!   cell.

pub mod flush;
pub mod omega;
pub mod path;

pub use flush::{plan_flush, FlushPlan};
pub use omega::{plan_set_disk_state, plan_set_omega, DiskStatePlan};
pub use path::{proper_path_from, validate_proper_path, PathSpec, PathVertex, PathViolation};

use crate::dynamics::{
    evolve, DynamicsError, EventKind, EventRecord, EvolveOutcome, HaltReason, PhysicalParams,
    ScheduledInjection, SystemState,
};
use crate::geometry::{ContactFrame, DomainSpec, Vec2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("budget too tight: required speed {required:.3e} exceeds the cap {cap:.3e}")]
    BudgetTooTight { required: f64, cap: f64 },
    #[error("plan search exhausted after {retries} retries: {last}")]
    PlanSearchExhausted { retries: u32, last: String },
    #[error("state not admissible: {0}")]
    NotAdmissible(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Planner knobs. The defaults match the documented configuration surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Hard cap on any planned particle speed.
    pub speed_cap: f64,
    /// Retry budget for randomized perturbation searches.
    pub retry_cap: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            speed_cap: 1e6,
            retry_cap: 64,
        }
    }
}

/// A deterministic, timestamped injection schedule realizing an objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub objective: String,
    /// `[start, end]` window the plan lives in; all injected particles have
    /// exited by `end` when the plan executes as designed.
    pub window: (f64, f64),
    /// Strictly increasing injection times.
    pub injections: Vec<ScheduledInjection>,
    /// Stated hypotheses under which the plan is valid.
    pub assumptions: Vec<String>,
    /// Largest planned particle speed.
    pub max_speed: f64,
}

impl InjectionPlan {
    pub fn assert_times_increasing(&self) -> Result<(), PlanError> {
        for w in self.injections.windows(2) {
            if w[1].time <= w[0].time {
                return Err(PlanError::Infeasible(format!(
                    "injection times not strictly increasing: {} then {}",
                    w[0].time, w[1].time
                )));
            }
        }
        Ok(())
    }
}

/// Rim speed a disk must have so that a collision with incoming components
/// `(v_t, v_⊥)` sends the particle out with tangential component
/// `v_t_target`: inverting the exchange law gives
/// `R ω = v_t + (1+η)/(2η) · (v_t_target - v_t)`.
pub fn required_r_omega(v_t: f64, v_t_target: f64, eta: f64) -> f64 {
    v_t + (1.0 + eta) / (2.0 * eta) * (v_t_target - v_t)
}

/// Rim speed that keeps the particle exactly on a desired outgoing ray.
///
/// `frame` is the contact frame of the incoming velocity and `out_dir` the
/// desired outgoing direction. The normal speed is forced to reverse, so the
/// outgoing ray is realizable only if its normal component matches; the
/// outgoing speed is then `v_⊥ / (d̂·n̂)` and the required rim speed follows
/// from the tangential component.
pub fn required_r_omega_for_direction(
    frame: &ContactFrame,
    out_dir: Vec2,
    eta: f64,
) -> Result<f64, PlanError> {
    let norm = out_dir.norm();
    if !(norm > 0.0) {
        return Err(PlanError::Infeasible("zero outgoing direction".into()));
    }
    let d = out_dir.scale(1.0 / norm);
    let dn = d.dot(frame.normal_out);
    if frame.v_perp <= 0.0 {
        return Err(PlanError::Infeasible(
            "tangential contact: no outgoing direction is steerable".into(),
        ));
    }
    if dn <= 1e-12 {
        return Err(PlanError::Infeasible(format!(
            "outgoing direction not outward (normal component {dn:.3e})"
        )));
    }
    let v_t_target = frame.v_perp * d.dot(frame.tangent) / dn;
    Ok(required_r_omega(frame.v_t, v_t_target, eta))
}

/// What actually happened when a plan ran in the simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutionReport {
    /// Disk state vector at the end of the plan window.
    pub final_disks: Vec<crate::dynamics::DiskState>,
    /// Particles remaining at the end (should be the residents only, or
    /// empty for a flush).
    pub remaining_particles: usize,
    /// Collision counts per disk over the window, all particles.
    pub roster: BTreeMap<usize, u64>,
    /// Exit times of the particles injected by the plan.
    pub injected_exits: Vec<f64>,
    /// Number of plan particles injected.
    pub injected: usize,
    pub halted: Option<HaltReason>,
    pub tangential_stops: u64,
}

/// Executes a plan on a copy of `state` and reports the outcome. The caller
/// compares the report against the plan's declared objective.
pub fn execute_plan(
    state: &SystemState,
    dom: &DomainSpec,
    params: &PhysicalParams,
    plan: &InjectionPlan,
) -> Result<(SystemState, ExecutionReport, Vec<EventRecord>), PlanError> {
    plan.assert_times_increasing()?;
    let mut work = state.clone();
    let resident_ids: std::collections::BTreeSet<u64> =
        work.particles.iter().map(|p| p.id).collect();
    let mut log = Vec::new();
    let mut it = plan.injections.iter().copied().peekable();
    let outcome = evolve(&mut work, dom, params, &mut it, plan.window.1, &mut |rec| {
        log.push(rec.clone())
    })?;
    let mut roster = BTreeMap::new();
    let mut injected_exits = Vec::new();
    let mut injected = 0usize;
    let mut tangential_stops = 0;
    for rec in &log {
        match &rec.kind {
            EventKind::Disk {
                disk,
                tangential_stop,
                ..
            } => {
                *roster.entry(*disk).or_insert(0) += 1;
                if *tangential_stop {
                    tangential_stops += 1;
                }
            }
            EventKind::Injection { .. } => injected += 1,
            EventKind::Exit { .. } => {
                if let Some(id) = rec.particle {
                    if !resident_ids.contains(&id) {
                        injected_exits.push(rec.t);
                    }
                }
            }
            _ => {}
        }
    }
    let halted = match outcome {
        EvolveOutcome::Halted(r) => Some(r),
        EvolveOutcome::Completed => None,
    };
    let report = ExecutionReport {
        final_disks: work.disks.clone(),
        remaining_particles: work.particle_count(),
        roster,
        injected_exits,
        injected,
        halted,
        tangential_stops,
    };
    Ok((work, report, log))
}
