//! Setting a disk's angular velocity (and full state) with injected
//! particles, inertia ratio 1.
//!
//! Disk 1 is set with a single strike: a fast particle from the left opening
//! hits the leftmost rim point carrying exactly the target rim speed as its
//! tangential component; the swap deposits it and the particle leaves
//! backwards. Higher disks are set recursively: disk `k` is first primed so
//! that a messenger particle arriving at its bottom pole is deflected under
//! the chain, bounced off the bottom wall, and lands on disk `k+1` at the
//! unique angle where its tangential component equals the target rim speed;
//! while the messenger is away, disk `k` is re-primed so the returning
//! messenger is flung out of the cell below every disk. All speeds scale
//! like the inverse of the time budget.

use super::path::first_disk_contact;
use super::{InjectionPlan, PlanError, PlannerConfig};
use crate::dynamics::{evolve, DiskState, PhysicalParams, ScheduledInjection, Side, SystemState};
use crate::geometry::{
    disk_hit_time, next_boundary_event_from, BoundaryKind, DomainSpec, GeometryError, Surface, Vec2,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Internal product of the recursive planner.
#[derive(Debug, Clone)]
pub(crate) struct OmegaPieces {
    pub injections: Vec<ScheduledInjection>,
    /// Time of the single collision with the target disk.
    pub touch_time: f64,
    /// All injected particles are out of the cell by this time.
    pub exit_by: f64,
    pub max_speed: f64,
    pub roster: BTreeMap<usize, u64>,
}

impl OmegaPieces {
    fn merge(&mut self, other: OmegaPieces) {
        self.injections.extend(other.injections);
        self.exit_by = self.exit_by.max(other.exit_by);
        self.max_speed = self.max_speed.max(other.max_speed);
        for (d, c) in other.roster {
            *self.roster.entry(d).or_insert(0) += c;
        }
    }
}

/// Geometry of the bounce leg: the direction ratio of the unfolded segment
/// from the bottom pole of disk `k` (mirrored across the bottom wall) to the
/// rim point of disk `k+1` at angle `theta`.
fn leg_slope(theta: f64, r: f64) -> f64 {
    (r * theta.sin() + 2.0 - r) / (2.0 + r * theta.cos())
}

/// Tangential component per unit of horizontal speed at the landing angle.
fn tangential_fraction(theta: f64, r: f64) -> f64 {
    theta.sin() - leg_slope(theta, r) * theta.cos()
}

/// Landing angle on the lower-left quadrant of the target disk for which the
/// messenger's tangential component equals `w_target`, given horizontal
/// speed `v`.
fn solve_landing_angle(v: f64, w_target: f64, r: f64) -> Result<f64, PlanError> {
    let mut lo = std::f64::consts::PI + 1e-9;
    let mut hi = 1.5 * std::f64::consts::PI - 1e-9;
    let h = |theta: f64| v * tangential_fraction(theta, r) - w_target;
    let (h_lo, h_hi) = (h(lo), h(hi));
    if !(h_lo > 0.0 && h_hi < 0.0) {
        return Err(PlanError::Infeasible(format!(
            "landing angle not bracketed: h({lo}) = {h_lo}, h({hi}) = {h_hi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expected step of a geometric trace.
#[derive(Debug, Clone, Copy, PartialEq)]
enum TraceStep {
    Wall,
    Disk(usize),
    Exit(Side),
}

/// Traces a free flight and demands an exact event sequence; walls reflect,
/// the final step terminates the trace. Returns `(contact, incoming velocity,
/// elapsed time)` of the final step.
fn trace_expect(
    q0: Vec2,
    v0: Vec2,
    dom: &DomainSpec,
    departing: Option<Surface>,
    steps: &[TraceStep],
) -> Result<(Vec2, Vec2, f64), String> {
    let mut q = q0;
    let mut v = v0;
    let mut t = 0.0;
    let mut dep = departing;
    for (i, step) in steps.iter().enumerate() {
        let ev =
            next_boundary_event_from(q, v, dom, dep).map_err(|e: GeometryError| e.to_string())?;
        t += ev.time;
        q = ev.contact;
        let matches = match (step, ev.kind) {
            (TraceStep::Wall, BoundaryKind::WallTop | BoundaryKind::WallBottom) => true,
            (TraceStep::Disk(j), BoundaryKind::Disk(got)) => *j == got,
            (TraceStep::Exit(Side::Left), BoundaryKind::ExitLeft) => true,
            (TraceStep::Exit(Side::Right), BoundaryKind::ExitRight) => true,
            _ => false,
        };
        if !matches {
            return Err(format!(
                "trace step {i}: expected {step:?}, got {:?} at t={t}",
                ev.kind
            ));
        }
        if i + 1 == steps.len() {
            return Ok((q, v, t));
        }
        match ev.kind {
            BoundaryKind::WallTop => {
                v = Vec2::new(v.x, -v.y);
                dep = Some(Surface::WallTop);
            }
            BoundaryKind::WallBottom => {
                v = Vec2::new(v.x, -v.y);
                dep = Some(Surface::WallBottom);
            }
            _ => return Err(format!("trace step {i}: non-wall mid-step")),
        }
    }
    unreachable!()
}

/// Contact frame components at a rim point, from raw vectors.
fn frame_at(contact: Vec2, v: Vec2, center: Vec2) -> (Vec2, Vec2, f64, f64) {
    let n = (contact - center).scale(1.0 / (contact - center).norm());
    let tangent = Vec2::new(n.y, -n.x);
    (n, tangent, v.dot(tangent), -v.dot(n))
}

/// Injection record for a planned left-bath entry velocity, together with
/// the velocity the simulator will reconstruct from the stored (angle,
/// speed) pair. All planner traces use the reconstructed vector, so plan
/// predictions replay bit-identically in the dynamics.
fn executable_injection(time: f64, position: f64, v: Vec2) -> (ScheduledInjection, Vec2) {
    let speed = v.norm();
    let angle = (-v.y / speed).asin();
    let inj = ScheduledInjection {
        time,
        side: Side::Left,
        position,
        angle,
        speed,
    };
    (inj, Vec2::new(speed * angle.cos(), -speed * angle.sin()))
}

/// Replays a set of planned injections on a scratch copy of the disks to
/// capture their exact floating-point outcome.
fn replay_on_scratch(
    injections: &[ScheduledInjection],
    start: f64,
    until: f64,
    model: &mut [f64],
    dom: &DomainSpec,
) -> Result<(), PlanError> {
    let params = PhysicalParams::new(1.0, 1.0).expect("unit params");
    let mut scratch = SystemState::new(
        start,
        vec![],
        model.iter().map(|&w| DiskState::new(0.0, w)).collect(),
    );
    let mut schedule = injections.iter().copied().peekable();
    evolve(
        &mut scratch,
        dom,
        &params,
        &mut schedule,
        until,
        &mut |_| {},
    )?;
    for (slot, d) in scratch.disks.iter().enumerate() {
        model[slot] = d.omega;
    }
    Ok(())
}

/// Recursive planner: one plan piece that leaves disk `j` with rim speed
/// `w_target` at its final touch, confined to `(a, b)`, touching only disks
/// `1..=j`. `model` tracks the disks' angular velocities through the plan.
pub(crate) fn plan_omega_rec(
    j: usize,
    w_target: f64,
    window: (f64, f64),
    model: &mut [f64],
    dom: &DomainSpec,
    cfg: &PlannerConfig,
) -> Result<OmegaPieces, PlanError> {
    let (a, b) = window;
    let tau = b - a;
    if !(tau > 0.0) {
        return Err(PlanError::Infeasible(format!(
            "empty planning window ({a}, {b})"
        )));
    }
    let r = dom.disk_radius;

    if j == 1 {
        // single strike on the leftmost rim point (1 - R, 0): the incoming
        // vertical component is the deposited rim speed
        let margin = 0.05 * tau;
        let u_x = (5.0 * (1.0 - r) / tau).max(4.0 * w_target.abs()).max(1.0);
        if u_x > cfg.speed_cap {
            return Err(PlanError::BudgetTooTight {
                required: u_x,
                cap: cfg.speed_cap,
            });
        }
        let t_inj = a + margin;
        let (mut injection, v_exec) = executable_injection(t_inj, 0.0, Vec2::new(u_x, w_target));
        // aim the reconstructed velocity at the leftmost rim point
        let xi = -v_exec.y * (1.0 - r) / v_exec.x;
        debug_assert!(xi.abs() < 0.95);
        injection.position = xi;
        let hit = disk_hit_time(Vec2::new(0.0, xi), v_exec, dom.disk_center(1), r)
            .ok_or_else(|| PlanError::Infeasible("strike misses disk 1".into()))?;
        let (_, _, v_t1, _) = frame_at(hit.contact, v_exec, dom.disk_center(1));
        model[0] = v_t1 / r;
        let mut roster = BTreeMap::new();
        roster.insert(1usize, 1u64);
        return Ok(OmegaPieces {
            injections: vec![injection],
            touch_time: t_inj + hit.time,
            exit_by: t_inj + hit.time + hit.contact.x / v_exec.x,
            max_speed: injection.speed,
            roster,
        });
    }

    // recursive case: prime disk k = j - 1, send the messenger, re-prime,
    // fling it out; doubling search over the messenger speed scale
    let k = j - 1;
    let pole = Vec2::new(2.0 * k as f64 - 1.0, -r);
    let target_center = dom.disk_center(j);

    // rough leg length for the initial speed scale
    let leg_est = 2.0 * ((2.0f64).hypot(2.0 - 2.0 * r) + 1.0);
    let v0 = (leg_est / (0.38 * tau))
        .max(2.0 * w_target.abs())
        .max(20.0 * (w_target.abs() + r * model[j - 1].abs()))
        .max(1.0);

    let mut last_err = String::new();
    for attempt in 0..12 {
        let v_scale = v0 * (1u64 << attempt) as f64;
        if v_scale > cfg.speed_cap {
            return Err(PlanError::BudgetTooTight {
                required: v_scale,
                cap: cfg.speed_cap,
            });
        }
        let mut trial_model = model.to_vec();
        match try_messenger(
            j,
            w_target,
            (a, b),
            v_scale,
            &mut trial_model,
            dom,
            cfg,
            pole,
            target_center,
        ) {
            Ok(pieces) => {
                model.copy_from_slice(&trial_model);
                return Ok(pieces);
            }
            Err(PlanError::PlanSearchExhausted { last, .. }) => {
                last_err = last;
                continue;
            }
            Err(other) => return Err(other),
        }
    }
    Err(PlanError::PlanSearchExhausted {
        retries: 12,
        last: last_err,
    })
}

#[allow(clippy::too_many_arguments)]
fn try_messenger(
    j: usize,
    w_target: f64,
    (a, b): (f64, f64),
    v_scale: f64,
    model: &mut [f64],
    dom: &DomainSpec,
    cfg: &PlannerConfig,
    pole: Vec2,
    target_center: Vec2,
) -> Result<OmegaPieces, PlanError> {
    let r = dom.disk_radius;
    let k = j - 1;
    let tau = b - a;
    let retry = |msg: String| PlanError::PlanSearchExhausted {
        retries: 0,
        last: msg,
    };

    // phase A: prime disk k so the pole hit deflects the messenger to the
    // right at (approximately) v_scale, then replay it to capture the exact
    // deflection rim speed including all floating-point residue
    let mut pieces = plan_omega_rec(k, -v_scale, (a, a + 0.42 * tau), model, dom, cfg)?;
    replay_on_scratch(&pieces.injections, a, a + 0.42 * tau, model, dom)?;
    let v_eff = -(r * model[k - 1]);
    if !(v_eff > 0.0) {
        return Err(retry(format!("priming left rim speed {v_eff}")));
    }

    // landing angle on disk j for the exact deflection speed
    let theta = solve_landing_angle(v_eff, w_target, r)?;
    let slope = leg_slope(theta, r);
    let u_y = v_eff * slope;

    // messenger flies in under the disk chain to the bottom pole of disk k
    let xi_m = -1.0 + 0.1 * (1.0 - r);
    let ratio = (-r - xi_m) / (2.0 * k as f64 - 1.0);
    let u_x_in = u_y / ratio;
    if u_x_in > cfg.speed_cap {
        return Err(PlanError::BudgetTooTight {
            required: u_x_in,
            cap: cfg.speed_cap,
        });
    }
    let t1 = a + 0.47 * tau; // pole hit, after the priming window
    let (mut m_inj, v_in) = executable_injection(t1, xi_m, Vec2::new(u_x_in, u_y));
    // re-aim the pole with the reconstructed velocity
    let xi_m = -r - (2.0 * k as f64 - 1.0) * v_in.y / v_in.x;
    m_inj.position = xi_m;
    let inbound_flight = (2.0 * k as f64 - 1.0) / v_in.x;
    let t_m = t1 - inbound_flight;
    m_inj.time = t_m;
    if t_m <= a {
        return Err(retry(format!(
            "messenger injection at {t_m} precedes the window"
        )));
    }
    // inbound: single clean segment below the chain
    let (p1, _, dt_in) = trace_expect(Vec2::new(0.0, xi_m), v_in, dom, None, &[TraceStep::Disk(k)])
        .map_err(retry)?;
    if (p1 - pole).norm() > 1e-9 {
        return Err(retry(format!("inbound missed the pole: {p1:?}")));
    }
    debug_assert!((dt_in - inbound_flight).abs() < 1e-9 * inbound_flight.max(1.0));

    // pole hit: swap against the replayed rim speed
    let (n1, t1_hat, v_t1, v_perp1) = frame_at(p1, v_in, dom.disk_center(k));
    let w_a = r * model[k - 1];
    let v_mid = n1.scale(v_perp1) + t1_hat.scale(w_a);
    model[k - 1] = v_t1 / r;
    if !(v_mid.x > 0.0 && v_mid.y < 0.0) {
        return Err(retry(format!("deflection not down-right: {v_mid:?}")));
    }

    // middle leg: bottom wall, then the landing on disk j
    let (p2, v_land, dt_mid) = trace_expect(
        p1,
        v_mid,
        dom,
        Some(Surface::Disk(k)),
        &[TraceStep::Wall, TraceStep::Disk(j)],
    )
    .map_err(retry)?;
    let t_hit = t1 + dt_mid;
    let expected_landing = target_center + Vec2::new(r * theta.cos(), r * theta.sin());
    if (p2 - expected_landing).norm() > 1e-6 {
        return Err(retry(format!(
            "landing at {p2:?}, expected {expected_landing:?}"
        )));
    }
    let (n2, t2_hat, v_t2, v_perp2) = frame_at(p2, v_land, target_center);
    if (v_t2 - w_target).abs() > 1e-9 * v_eff.max(1.0) {
        return Err(retry(format!(
            "landing tangential speed {v_t2} differs from target {w_target}"
        )));
    }
    if v_perp2 <= 0.0 {
        return Err(retry("tangential landing".into()));
    }
    // target disk takes the rim speed; messenger reflects near-reversed
    let w_pre_j = r * model[j - 1];
    let v_back = n2.scale(v_perp2) + t2_hat.scale(w_pre_j);
    model[j - 1] = v_t2 / r;

    // return leg: wall, then disk k again near the pole
    let (p3, v_ret, dt_ret) = trace_expect(
        p2,
        v_back,
        dom,
        Some(Surface::Disk(j)),
        &[TraceStep::Wall, TraceStep::Disk(k)],
    )
    .map_err(retry)?;
    let t2 = t_hit + dt_ret;
    if (p3 - pole).norm() > 0.5 * r {
        return Err(retry(format!(
            "return contact too far from the pole: {p3:?}"
        )));
    }
    if t2 >= b - 0.1 * tau {
        return Err(retry(format!("return at {t2} leaves no exit margin")));
    }

    // phase C: while the messenger is away, re-prime disk k so the second
    // contact flings the messenger out to the left. The rim speed is found
    // by a geometric ladder, each candidate checked by tracing the actual
    // fling all the way to the opening.
    let (n3, t3_hat, v_t3, v_perp3) = frame_at(p3, v_ret, dom.disk_center(k));
    if v_perp3 <= 0.0 {
        return Err(retry("tangential return".into()));
    }
    let mut fling: Option<(f64, f64)> = None; // (rim speed, exit flight time)
    let mut w_cand = v_perp3.max(2.0 * (2.0 * k as f64) / (b - t2));
    while w_cand <= cfg.speed_cap {
        let v_out = n3.scale(v_perp3) + t3_hat.scale(w_cand);
        if v_out.x < 0.0 && v_out.y < 0.0 {
            if let Ok((_, _, dt_exit)) = trace_expect(
                p3,
                v_out,
                dom,
                Some(Surface::Disk(k)),
                &[TraceStep::Exit(Side::Left)],
            ) {
                if t2 + dt_exit < b - 0.01 * tau {
                    fling = Some((w_cand, dt_exit));
                    break;
                }
            }
        }
        w_cand *= 1.2;
    }
    let Some((w_c, dt_exit)) = fling else {
        return Err(retry(format!(
            "no fling rim speed under the cap clears the cell (return contact {p3:?})"
        )));
    };
    let c_window = (t1 + 0.02 * (t2 - t1), t2 - 0.02 * (t2 - t1));
    let phase_c = plan_omega_rec(k, w_c, c_window, model, dom, cfg)?;
    if phase_c.exit_by >= t2 {
        return Err(retry("re-priming does not finish before the return".into()));
    }
    model[k - 1] = v_t3 / r;
    let exit_by = t2 + dt_exit;

    // assemble: phase A, the messenger, phase C
    let messenger = m_inj;
    pieces.max_speed = pieces
        .max_speed
        .max(v_in.norm())
        .max(v_mid.norm())
        .max((v_perp3 * v_perp3 + w_c * w_c).sqrt());
    pieces.injections.push(messenger);
    pieces.merge(phase_c);
    *pieces.roster.entry(k).or_insert(0) += 2;
    *pieces.roster.entry(j).or_insert(0) += 1;
    pieces.touch_time = t_hit;
    pieces.exit_by = pieces.exit_by.max(exit_by);
    pieces.injections.sort_by(|x, y| x.time.total_cmp(&y.time));
    Ok(pieces)
}

/// Metadata of a spin plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaPlanMeta {
    /// Time of the single collision with the target disk.
    pub touch_time: f64,
    /// Expected collisions per disk.
    pub roster: BTreeMap<usize, u64>,
    pub max_speed: f64,
}

/// Plans a sequence of left-bath injections that leaves disk `j` with
/// angular velocity `omega_target` within `budget` time units, touching only
/// disks `1..j` plus one collision with disk `j`, all injected particles
/// exiting before the budget ends.
///
/// Requires inertia ratio 1 and that no resident particle reaches any disk
/// within the budget; both are checked.
pub fn plan_set_omega(
    j: usize,
    omega_target: f64,
    budget: f64,
    state: &SystemState,
    dom: &DomainSpec,
    params: &PhysicalParams,
    cfg: &PlannerConfig,
) -> Result<(InjectionPlan, OmegaPlanMeta), PlanError> {
    if params.eta != 1.0 {
        return Err(PlanError::Infeasible(format!(
            "spin planning is only constructed for inertia ratio 1, got {}",
            params.eta
        )));
    }
    if j < 1 || j > dom.n_disks {
        return Err(PlanError::Infeasible(format!("no disk {j}")));
    }
    // resident lookahead: nothing may touch a disk inside deterrent window
    for p in &state.particles {
        if p.is_frozen() {
            continue;
        }
        if let Some((d, t)) = first_disk_contact(p.q, p.v, dom) {
            if t <= budget {
                return Err(PlanError::Infeasible(format!(
                    "resident particle {} reaches disk {d} after {t:.6}, inside the budget",
                    p.id
                )));
            }
        }
    }
    let window = (state.time, state.time + budget);
    let build = |target_rim: f64| -> Result<(InjectionPlan, OmegaPieces), PlanError> {
        let mut model: Vec<f64> = state.disks.iter().map(|d| d.omega).collect();
        let pieces = plan_omega_rec(j, target_rim, window, &mut model, dom, cfg)?;
        let plan = InjectionPlan {
            objective: format!("set disk {j} angular velocity to {omega_target}"),
            window,
            injections: pieces.injections.clone(),
            assumptions: vec![
                "inertia ratio 1".into(),
                "no resident particle reaches a disk within the budget".into(),
            ],
            max_speed: pieces.max_speed,
        };
        plan.assert_times_increasing()?;
        Ok((plan, pieces))
    };
    // deep recursions carry floating-point residue proportional to the
    // largest planned speed; one correction pass retargets by the measured
    // residual of a trial execution
    let (mut plan, mut pieces) = build(dom.disk_radius * omega_target)?;
    let (trial, _, _) = super::execute_plan(state, dom, params, &plan)?;
    let residual = trial.disks[j - 1].omega - omega_target;
    if residual.abs() > 1e-11 {
        if let Ok((plan2, pieces2)) = build(dom.disk_radius * (omega_target - residual)) {
            let (trial2, _, _) = super::execute_plan(state, dom, params, &plan2)?;
            if (trial2.disks[j - 1].omega - omega_target).abs() < residual.abs() {
                plan = plan2;
                pieces = pieces2;
            }
        }
    }
    Ok((
        plan,
        OmegaPlanMeta {
            touch_time: pieces.touch_time,
            roster: pieces.roster,
            max_speed: pieces.max_speed,
        },
    ))
}

/// A full disk-state plan: two spin phases and a tuned wait between them so
/// the phase lands on target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskStatePlan {
    pub plan: InjectionPlan,
    pub intermediate_omega: f64,
    pub wait: f64,
    pub predicted_phi: f64,
}

/// Plans (left-bath) injections landing disk `j` on `(phi_target,
/// omega_target)` at exactly `state.time + t_budget`. Requires an empty cell
/// and inertia ratio 1.
#[allow(clippy::too_many_arguments)]
pub fn plan_set_disk_state(
    j: usize,
    phi_target: f64,
    omega_target: f64,
    t_budget: f64,
    state: &SystemState,
    dom: &DomainSpec,
    params: &PhysicalParams,
    cfg: &PlannerConfig,
) -> Result<DiskStatePlan, PlanError> {
    if params.eta != 1.0 {
        return Err(PlanError::Infeasible(
            "disk-state planning requires inertia ratio 1".into(),
        ));
    }
    if state.particle_count() != 0 {
        return Err(PlanError::Infeasible(
            "disk-state planning requires an empty cell".into(),
        ));
    }
    let tau = std::f64::consts::TAU;
    let t0 = state.time;
    let t_end = t0 + t_budget;
    // the intermediate spin must cover a full turn relative to the target
    // during a third of the budget
    let omega1 = omega_target + 1.25 * 3.0 * tau / t_budget + 1.0;

    let mut model: Vec<f64> = state.disks.iter().map(|d| d.omega).collect();
    let omega0 = model[j - 1];
    let phi0 = state.disks[j - 1].phi;

    let phase1 = plan_omega_rec(
        j,
        dom.disk_radius * omega1,
        (t0, t0 + t_budget / 3.0),
        &mut model,
        dom,
        cfg,
    )?;
    let phase2 = plan_omega_rec(
        j,
        dom.disk_radius * omega_target,
        (t0 + t_budget / 3.0, t0 + 2.0 * t_budget / 3.0),
        &mut model,
        dom,
        cfg,
    )?;

    // phase at t_end if phase 2 ran unshifted
    let touch1 = phase1.touch_time;
    let touch2 = phase2.touch_time;
    let phi_unshifted = phi0
        + omega0 * (touch1 - t0)
        + omega1 * (touch2 - touch1)
        + omega_target * (t_end - touch2);
    // each unit of wait advances the final phase by (ω₁ - ω')
    let wait = (phi_target - phi_unshifted).rem_euclid(tau) / (omega1 - omega_target);
    debug_assert!(wait < t_budget / 3.0);

    let mut injections = phase1.injections;
    let mut max_speed = phase1.max_speed;
    for mut inj in phase2.injections {
        inj.time += wait;
        injections.push(inj);
    }
    max_speed = max_speed.max(phase2.max_speed);
    injections.sort_by(|x, y| x.time.total_cmp(&y.time));
    let predicted_phi = (phi_unshifted + wait * (omega1 - omega_target)).rem_euclid(tau);

    let plan = InjectionPlan {
        objective: format!(
            "set disk {j} to angular position {phi_target} and angular velocity {omega_target}"
        ),
        window: (t0, t_end),
        injections,
        assumptions: vec!["inertia ratio 1".into(), "empty cell".into()],
        max_speed,
    };
    plan.assert_times_increasing()?;
    Ok(DiskStatePlan {
        plan,
        intermediate_omega: omega1,
        wait,
        predicted_phi,
    })
}
