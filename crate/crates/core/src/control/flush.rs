//! Driving a whole state to the empty cell.
//!
//! Every resident particle is assigned an exit route: the forced prefix of
//! its motion (wall bounces and rim-matched tangential touches) up to its
//! first non-tangential disk contact, then a proper path from that contact
//! to an opening. Each disk reflection along the routes becomes a timed rim
//! requirement; the requirements are met by spin sub-plans scheduled in the
//! gaps between collisions, several same-instant requirements on different
//! disks sharing a gap in decreasing disk order (a spin plan never touches a
//! disk above its target). Route collisions on the same disk at the same
//! instant are broken by randomly restyling the later particle's path and
//! re-planning.

use super::omega::plan_omega_rec;
use super::path::{
    path_profile, proper_path_from, trace_free_itinerary, FreeItinerary, ItineraryOutcome,
    PathSpec, PathStyle,
};
use super::{required_r_omega_for_direction, InjectionPlan, PlanError, PlannerConfig};
use crate::dynamics::{is_trapped, PhysicalParams, ScheduledInjection, SystemState};
use crate::geometry::{contact_frame, DomainSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Two requirements on the same disk closer than this are a conflict.
const CONFLICT_TOL: f64 = 1e-6;

/// A flush plan: the injection schedule plus the routes it realizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlushPlan {
    pub plan: InjectionPlan,
    /// Residents and primers are all gone by this time.
    pub settles_by: f64,
    /// Exit route of each resident that needed one.
    pub routes: Vec<(u64, PathSpec)>,
    /// Total rim requirements scheduled.
    pub requirements: usize,
    /// Retries spent on conflict perturbation.
    pub retries: u32,
}

#[derive(Debug, Clone)]
struct Commitment {
    time: f64,
    disk: usize,
    required_r_omega: f64,
    /// Rim speed the disk carries after this collision (the incoming
    /// tangential component).
    v_t_in: f64,
    /// Forced contacts (prefix touches and first contacts) cannot be moved
    /// by restyling.
    forced: bool,
    /// Index into the particle list, for restyling.
    particle_slot: usize,
}

enum BuildFailure {
    Retryable { slot: usize, why: String },
    Fatal(PlanError),
}

impl From<PlanError> for BuildFailure {
    fn from(e: PlanError) -> Self {
        BuildFailure::Fatal(e)
    }
}

fn build_schedule(
    state: &SystemState,
    dom: &DomainSpec,
    cfg: &PlannerConfig,
    styles: &[PathStyle],
) -> Result<(FlushPlan, Vec<Commitment>), BuildFailure> {
    let t0 = state.time;
    let mut commitments: Vec<Commitment> = Vec::new();
    let mut routes = Vec::new();
    let mut settles_by = t0;

    for (slot, p) in state.particles.iter().enumerate() {
        let itinerary: FreeItinerary = trace_free_itinerary(p.q, p.v, t0, dom, 100_000)?;
        for &(disk, time, v_t) in &itinerary.tangential_touches {
            commitments.push(Commitment {
                time,
                disk,
                required_r_omega: v_t,
                v_t_in: v_t,
                forced: true,
                particle_slot: slot,
            });
        }
        match itinerary.outcome {
            ItineraryOutcome::ExitsFreely { time, .. } => {
                settles_by = settles_by.max(time);
            }
            ItineraryOutcome::FirstContact {
                disk,
                contact,
                time,
                velocity,
            } => {
                let theta = {
                    let d = contact - dom.disk_center(disk);
                    f64::atan2(d.y, d.x)
                };
                let path = proper_path_from(disk, theta, dom, &styles[slot]).map_err(|e| {
                    BuildFailure::Retryable {
                        slot,
                        why: e.to_string(),
                    }
                })?;
                let frame = contact_frame(contact, velocity, disk, dom)
                    .map_err(|e| BuildFailure::Fatal(PlanError::NotAdmissible(e.to_string())))?;
                let first_dir = path.vertices[1].point() - contact;
                let r_omega_first = required_r_omega_for_direction(&frame, first_dir, 1.0)?;
                commitments.push(Commitment {
                    time,
                    disk,
                    required_r_omega: r_omega_first,
                    v_t_in: frame.v_t,
                    forced: true,
                    particle_slot: slot,
                });
                let dn = first_dir
                    .scale(1.0 / first_dir.norm())
                    .dot(frame.normal_out);
                let speed0 = frame.v_perp / dn;
                let profile = path_profile(&path, dom, 1.0, speed0)?;
                for req in &profile.requirements {
                    commitments.push(Commitment {
                        time: time + req.time_offset,
                        disk: req.disk,
                        required_r_omega: req.r_omega,
                        v_t_in: req.v_t_in,
                        forced: false,
                        particle_slot: slot,
                    });
                }
                settles_by = settles_by.max(time + profile.total_time);
                routes.push((p.id, path));
            }
        }
    }

    commitments.sort_by(|a, b| a.time.total_cmp(&b.time));

    // same-disk conflicts
    for i in 0..commitments.len() {
        for l in i + 1..commitments.len() {
            if commitments[l].time - commitments[i].time > CONFLICT_TOL {
                break;
            }
            if commitments[l].disk == commitments[i].disk {
                if commitments[i].forced && commitments[l].forced {
                    return Err(BuildFailure::Fatal(PlanError::NotAdmissible(format!(
                        "two forced contacts with disk {} within {CONFLICT_TOL}",
                        commitments[i].disk
                    ))));
                }
                let slot = if commitments[l].forced {
                    commitments[i].particle_slot
                } else {
                    commitments[l].particle_slot
                };
                return Err(BuildFailure::Retryable {
                    slot,
                    why: format!(
                        "same-disk requirement collision on disk {} near t={}",
                        commitments[i].disk, commitments[i].time
                    ),
                });
            }
        }
    }

    // schedule rim preparations between collisions: group same-instant
    // requirements, split the preceding gap, plan in decreasing disk order
    let mut model: Vec<f64> = state.disks.iter().map(|d| d.omega).collect();
    let mut injections: Vec<ScheduledInjection> = Vec::new();
    let mut max_speed = 0.0f64;
    let mut t_prev = t0;
    let mut i = 0;
    let r = dom.disk_radius;
    while i < commitments.len() {
        let mut group_end = i + 1;
        while group_end < commitments.len()
            && commitments[group_end].time - commitments[i].time <= CONFLICT_TOL
        {
            group_end += 1;
        }
        let t_group = commitments[i].time;
        let mut group: Vec<&Commitment> = commitments[i..group_end].iter().collect();
        group.sort_by_key(|c| std::cmp::Reverse(c.disk));
        let gap = t_group - t_prev;
        if gap <= 0.0 {
            return Err(BuildFailure::Fatal(PlanError::NotAdmissible(format!(
                "no planning room before the collision at t={t_group}"
            ))));
        }
        let slice = gap / group.len() as f64;
        for (slot_idx, c) in group.iter().enumerate() {
            let needs_priming = (r * model[c.disk - 1] - c.required_r_omega).abs()
                > 1e-12 * c.required_r_omega.abs().max(1.0);
            if needs_priming {
                let window = (
                    t_prev + (slot_idx as f64 + 0.05) * slice,
                    t_prev + (slot_idx as f64 + 0.95) * slice,
                );
                let pieces =
                    plan_omega_rec(c.disk, c.required_r_omega, window, &mut model, dom, cfg)
                        .map_err(|e| match e {
                            PlanError::BudgetTooTight { .. } if !c.forced => {
                                BuildFailure::Retryable {
                                    slot: c.particle_slot,
                                    why: "priming window too tight".into(),
                                }
                            }
                            other => BuildFailure::Fatal(other),
                        })?;
                max_speed = max_speed.max(pieces.max_speed);
                injections.extend(pieces.injections);
            }
        }
        // apply the collisions' effect on the disks
        for c in commitments[i..group_end].iter() {
            model[c.disk - 1] = c.v_t_in / r;
        }
        t_prev = t_group;
        i = group_end;
    }

    injections.sort_by(|a, b| a.time.total_cmp(&b.time));
    settles_by += 1e-9 * settles_by.abs().max(1.0);
    let plan = InjectionPlan {
        objective: format!(
            "flush {} resident particles to the empty cell",
            state.particle_count()
        ),
        window: (t0, settles_by),
        injections,
        assumptions: vec![
            "inertia ratio 1".into(),
            "no stochastic injections during the plan".into(),
        ],
        max_speed,
    };
    plan.assert_times_increasing()?;
    let requirements = commitments.len();
    Ok((
        FlushPlan {
            plan,
            settles_by,
            routes,
            requirements,
            retries: 0,
        },
        commitments,
    ))
}

/// Plans injections that empty the cell from an admissible state: every
/// resident follows its forced prefix and then a proper path out, with disk
/// spins prepared just in time. Fails with `NotAdmissible` for trapped
/// particles or same-instant forced contacts on one disk, and with
/// `PlanSearchExhausted` when the randomized conflict perturbation runs out
/// of retries.
pub fn plan_flush(
    state: &SystemState,
    dom: &DomainSpec,
    params: &PhysicalParams,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<FlushPlan, PlanError> {
    if params.eta != 1.0 {
        return Err(PlanError::Infeasible(
            "flush planning requires inertia ratio 1".into(),
        ));
    }
    for p in &state.particles {
        if is_trapped(p, dom) {
            return Err(PlanError::NotAdmissible(format!(
                "particle {} is trapped",
                p.id
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut styles = vec![PathStyle::default(); state.particle_count()];
    let mut last = String::from("no attempts made");
    for attempt in 0..=cfg.retry_cap {
        match build_schedule(state, dom, cfg, &styles) {
            Ok((mut flush, _)) => {
                flush.retries = attempt;
                return Ok(flush);
            }
            Err(BuildFailure::Retryable { slot, why }) => {
                last = why;
                styles[slot] = PathStyle {
                    connector_fraction: rng.random_range(0.72..0.92),
                    delta_fraction: rng.random_range(0.45..0.7),
                    exit_lift: rng.random_range(0.25..0.75),
                };
            }
            Err(BuildFailure::Fatal(e)) => return Err(e),
        }
    }
    Err(PlanError::PlanSearchExhausted {
        retries: cfg.retry_cap,
        last,
    })
}
