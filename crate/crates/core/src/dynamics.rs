//! The particle–disk exchange law and the exact event-driven evolution.
//!
//! Between events every particle flies straight and every disk phase advances
//! linearly; events are resolved from the closed-form contact times in
//! [`crate::geometry`]. Two particles reaching the same disk at the same
//! instant halt the run: the dynamics is not defined there. Grazing contacts
//! apply the full exchange law; a grazing contact that stops the particle
//! freezes it in place and raises a diagnostic flag.

use crate::geometry::{
    contact_frame, next_boundary_event_from, BoundaryKind, DomainSpec, GeometryError, Surface,
    Vec2, TIE_TOL,
};
use serde::{Deserialize, Serialize};
use std::iter::Peekable;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// An injection was scheduled in the past of the evolving state.
    #[error("injection at t={0} precedes current time {1}")]
    InjectionInPast(f64, f64),
}

/// Opening side of the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallSide {
    Top,
    Bottom,
}

/// One free particle. `id` is an opaque tag for the event log; states compare
/// as unordered collections of (q, v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub q: Vec2,
    pub v: Vec2,
    pub id: u64,
    /// Surface the particle is currently departing from, if it sits exactly
    /// on one. Suppresses zero-time re-detection of the contact just applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub departing: Option<Surface>,
}

impl ParticleState {
    pub fn new(q: Vec2, v: Vec2, id: u64) -> Self {
        ParticleState {
            q,
            v,
            id,
            departing: None,
        }
    }

    /// A particle frozen by a tangential stop: zero velocity forever.
    pub fn is_frozen(&self) -> bool {
        self.v.x == 0.0 && self.v.y == 0.0
    }
}

/// Angular position (radians, normalized to `[0, 2π)`) and angular velocity
/// of one disk. Positive `omega` moves the rim at `R ω` along the contact
/// frame tangent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskState {
    pub phi: f64,
    pub omega: f64,
}

impl DiskState {
    pub fn new(phi: f64, omega: f64) -> Self {
        DiskState {
            phi: phi.rem_euclid(std::f64::consts::TAU),
            omega,
        }
    }
}

/// Mass of the particles and the dimensionless inertia ratio
/// `η = Θ / (m R²)`; `η = 1` makes a disk collision an exact swap of the
/// tangential velocity with the rim speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub eta: f64,
    pub mass: f64,
}

impl PhysicalParams {
    pub fn new(eta: f64, mass: f64) -> Result<Self, String> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(format!("eta must be finite and positive, got {eta}"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(format!("mass must be finite and positive, got {mass}"));
        }
        Ok(PhysicalParams { eta, mass })
    }

    /// Moment of inertia of a disk of radius `r`.
    pub fn moment_of_inertia(&self, r: f64) -> f64 {
        self.eta * self.mass * r * r
    }
}

/// Full state of the cell at an instant: clock, particles, disk states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub time: f64,
    pub particles: Vec<ParticleState>,
    pub disks: Vec<DiskState>,
    next_id: u64,
}

impl SystemState {
    pub fn new(time: f64, particles: Vec<ParticleState>, disks: Vec<DiskState>) -> Self {
        let next_id = particles.iter().map(|p| p.id + 1).max().unwrap_or(0);
        SystemState {
            time,
            particles,
            disks,
            next_id,
        }
    }

    /// Empty cell with all disks at rest.
    pub fn empty(dom: &DomainSpec) -> Self {
        SystemState::new(0.0, Vec::new(), vec![DiskState::new(0.0, 0.0); dom.n_disks])
    }

    pub fn particle_count(&self) -> usize {
        self.particles.len()
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Total energy: particle kinetic plus disk rotational.
    pub fn energy(&self, params: &PhysicalParams, dom: &DomainSpec) -> f64 {
        let theta = params.moment_of_inertia(dom.disk_radius);
        let particles: f64 = self
            .particles
            .iter()
            .map(|p| 0.5 * params.mass * p.v.norm_sq())
            .sum();
        let disks: f64 = self
            .disks
            .iter()
            .map(|d| 0.5 * theta * d.omega * d.omega)
            .sum();
        particles + disks
    }
}

/// Why a run halted. Only simultaneous collisions with the same disk are
/// undefined; trapped particles and tangential stops are diagnostics and do
/// not halt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum HaltReason {
    SimultaneousSameDisk { disk: usize },
}

/// One resolved event with its before/after data, serialized as one JSON
/// object per line in event logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Wall {
        wall: WallSide,
    },
    Disk {
        disk: usize,
        grazing: bool,
        tangential_stop: bool,
        pre_disk: DiskState,
        post_disk: DiskState,
    },
    Exit {
        side: Side,
    },
    Injection {
        side: Side,
    },
    Halt {
        #[serde(flatten)]
        reason: HaltReason,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_v: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_v: Option<Vec2>,
}

/// Specular reflection at the horizontal walls.
pub fn reflect_wall(v: Vec2) -> Vec2 {
    Vec2::new(v.x, -v.y)
}

/// The exchange law at a disk contact, in contact-frame components.
///
/// Input `v_perp >= 0` is the approach speed; the returned normal component
/// is `-v_perp`, to be read as outward motion. Conserves the energy
/// `m(v_t² + v_⊥²)/2 + Θω²/2` and the combination `v_t + η R ω` exactly.
/// At `η = 1` the law is literally a swap of `v_t` and `R ω`, computed as
/// such so the swap is exact in floating point.
pub fn collide_disk(v_t: f64, v_perp: f64, r_omega: f64, eta: f64) -> (f64, f64, f64) {
    if eta == 1.0 {
        return (r_omega, -v_perp, v_t);
    }
    let diff = v_t - r_omega;
    let v_t_out = v_t - 2.0 * eta / (1.0 + eta) * diff;
    let r_omega_out = r_omega + 2.0 / (1.0 + eta) * diff;
    (v_t_out, -v_perp, r_omega_out)
}

/// Rim speed at which a grazing contact stops the particle: with `v_⊥ = 0`,
/// the outgoing speed is `|v_t'|`, and `v_t' = 0` exactly when
/// `R ω = (η - 1) v_t / (2η)`.
pub fn tangential_stop_r_omega(v_t: f64, eta: f64) -> f64 {
    (eta - 1.0) * v_t / (2.0 * eta)
}

/// True if a grazing contact with rim speed `r_omega` would leave the
/// particle with zero velocity.
pub fn classify_tangential_stop(v_t: f64, r_omega: f64, eta: f64) -> bool {
    let scale = v_t.abs().max(r_omega.abs()).max(1e-300);
    (r_omega - tangential_stop_r_omega(v_t, eta)).abs() <= 1e-12 * scale
}

/// True if the particle can never interact with a disk again: zero velocity,
/// or zero horizontal velocity while positioned in one of the vertical bands
/// between consecutive disks (or between an end disk and its opening).
///
/// The horizontal-velocity test is exact, not tolerance-based: the set is a
/// measure-zero diagnostic, and a tolerance would flag slow particles that
/// do interact.
pub fn is_trapped(p: &ParticleState, dom: &DomainSpec) -> bool {
    if p.v.x == 0.0 && p.v.y == 0.0 {
        return true;
    }
    if p.v.x != 0.0 {
        return false;
    }
    let r = dom.disk_radius;
    let x = p.q.x;
    if x < 0.0 || x > dom.width() {
        return false;
    }
    if x <= 1.0 - r {
        return true;
    }
    (1..=dom.n_disks).any(|j| {
        let c = 2.0 * j as f64;
        x >= c - (1.0 - r) && x <= (c + (1.0 - r)).min(dom.width())
    })
}

/// Outcome of a single event step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    /// An event at or before the horizon was resolved.
    Event(EventRecord),
    /// No event occurs before the horizon; the state was advanced to it.
    HorizonReached,
    /// The dynamics is undefined from here on.
    Halted(EventRecord),
}

fn advance_free(state: &mut SystemState, t: f64) {
    let dt = t - state.time;
    if dt != 0.0 {
        // `departing` stays set until the next contact replaces it: the
        // suppression window is `TIE_TOL` of flight time, which a genuine
        // later return to the same surface always exceeds
        for p in state.particles.iter_mut() {
            p.q = p.q + p.v.scale(dt);
        }
        for d in state.disks.iter_mut() {
            d.phi = (d.phi + d.omega * dt).rem_euclid(std::f64::consts::TAU);
        }
    }
    state.time = t;
}

/// Advances the state to the earliest boundary event at or before `horizon`
/// and applies it, or to the horizon if nothing happens first.
///
/// Simultaneous events at distinct boundaries are processed one per call in
/// a fixed order (walls, then disks by index, then exits, then by particle
/// slot); two contacts with the same disk within [`TIE_TOL`] halt the run.
pub fn step_event(
    state: &mut SystemState,
    dom: &DomainSpec,
    params: &PhysicalParams,
    horizon: f64,
) -> Result<StepOutcome, DynamicsError> {
    debug_assert!(horizon >= state.time);

    struct Pending {
        idx: usize,
        t_abs: f64,
        kind: BoundaryKind,
        contact: Vec2,
        grazing: bool,
    }

    let mut pending: Vec<Pending> = Vec::with_capacity(state.particles.len());
    for (idx, p) in state.particles.iter().enumerate() {
        if p.is_frozen() {
            continue;
        }
        let ev = next_boundary_event_from(p.q, p.v, dom, p.departing)?;
        pending.push(Pending {
            idx,
            t_abs: state.time + ev.time,
            kind: ev.kind,
            contact: ev.contact,
            grazing: ev.grazing,
        });
    }

    let Some(best) = pending
        .iter()
        .min_by(|a, b| {
            (a.t_abs, a.kind.rank(), a.idx)
                .partial_cmp(&(b.t_abs, b.kind.rank(), b.idx))
                .unwrap()
        })
        .map(|b| Pending {
            idx: b.idx,
            t_abs: b.t_abs,
            kind: b.kind,
            contact: b.contact,
            grazing: b.grazing,
        })
    else {
        advance_free(state, horizon);
        return Ok(StepOutcome::HorizonReached);
    };

    if best.t_abs > horizon {
        advance_free(state, horizon);
        return Ok(StepOutcome::HorizonReached);
    }

    // the undefined configuration: another particle contacting the same disk
    // within the simultaneity tolerance
    if let BoundaryKind::Disk(j) = best.kind {
        let clash = pending.iter().any(|c| {
            c.idx != best.idx && c.kind == BoundaryKind::Disk(j) && c.t_abs - best.t_abs <= TIE_TOL
        });
        if clash {
            advance_free(state, best.t_abs);
            let rec = EventRecord {
                t: best.t_abs,
                kind: EventKind::Halt {
                    reason: HaltReason::SimultaneousSameDisk { disk: j },
                },
                particle: Some(state.particles[best.idx].id),
                q: Some(best.contact),
                pre_v: None,
                post_v: None,
            };
            return Ok(StepOutcome::Halted(rec));
        }
    }

    advance_free(state, best.t_abs);
    let rec = match best.kind {
        BoundaryKind::WallTop | BoundaryKind::WallBottom => {
            let p = &mut state.particles[best.idx];
            let pre_v = p.v;
            p.q = best.contact;
            p.v = reflect_wall(p.v);
            let wall = if best.kind == BoundaryKind::WallTop {
                p.departing = Some(Surface::WallTop);
                WallSide::Top
            } else {
                p.departing = Some(Surface::WallBottom);
                WallSide::Bottom
            };
            EventRecord {
                t: state.time,
                kind: EventKind::Wall { wall },
                particle: Some(p.id),
                q: Some(p.q),
                pre_v: Some(pre_v),
                post_v: Some(p.v),
            }
        }
        BoundaryKind::Disk(j) => {
            let p = &mut state.particles[best.idx];
            let pre_v = p.v;
            p.q = best.contact;
            let frame = contact_frame(p.q, p.v, j, dom)?;
            let disk = &mut state.disks[j - 1];
            let pre_disk = *disk;
            let (v_t_out, _, r_omega_out) = collide_disk(
                frame.v_t,
                frame.v_perp,
                dom.disk_radius * disk.omega,
                params.eta,
            );
            disk.omega = r_omega_out / dom.disk_radius;
            p.v = frame.outgoing_velocity(v_t_out);
            p.departing = Some(Surface::Disk(j));
            let tangential_stop = best.grazing && p.v.x == 0.0 && p.v.y == 0.0;
            EventRecord {
                t: state.time,
                kind: EventKind::Disk {
                    disk: j,
                    grazing: best.grazing,
                    tangential_stop,
                    pre_disk,
                    post_disk: *disk,
                },
                particle: Some(p.id),
                q: Some(p.q),
                pre_v: Some(pre_v),
                post_v: Some(p.v),
            }
        }
        BoundaryKind::ExitLeft | BoundaryKind::ExitRight => {
            let p = state.particles.remove(best.idx);
            let side = if best.kind == BoundaryKind::ExitLeft {
                Side::Left
            } else {
                Side::Right
            };
            EventRecord {
                t: state.time,
                kind: EventKind::Exit { side },
                particle: Some(p.id),
                q: Some(best.contact),
                pre_v: Some(p.v),
                post_v: None,
            }
        }
    };
    Ok(StepOutcome::Event(rec))
}

/// One injection to perform at an absolute time: entry position on the
/// opening, angle from the inward normal, speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledInjection {
    pub time: f64,
    pub side: Side,
    pub position: f64,
    pub angle: f64,
    pub speed: f64,
}

impl ScheduledInjection {
    /// Entry state of the injected particle: from the left,
    /// `v = s (cos δ, -sin δ)`; from the right, mirrored in x.
    pub fn entry(&self, dom: &DomainSpec) -> (Vec2, Vec2) {
        let (vx, vy) = (
            self.speed * self.angle.cos(),
            -self.speed * self.angle.sin(),
        );
        match self.side {
            Side::Left => (Vec2::new(0.0, self.position), Vec2::new(vx, vy)),
            Side::Right => (Vec2::new(dom.width(), self.position), Vec2::new(-vx, vy)),
        }
    }
}

/// Terminal condition of an [`evolve`] call.
#[derive(Debug, Clone, PartialEq)]
pub enum EvolveOutcome {
    Completed,
    Halted(HaltReason),
}

/// Drives the state to `t_end`, merging the scheduled injections (an
/// ascending-time stream) with the autonomous events. Every record is passed
/// to `on_event` in time order; the injection stream is left positioned at
/// the first undelivered injection, so runs can be resumed.
pub fn evolve<I>(
    state: &mut SystemState,
    dom: &DomainSpec,
    params: &PhysicalParams,
    injections: &mut Peekable<I>,
    t_end: f64,
    on_event: &mut dyn FnMut(&EventRecord),
) -> Result<EvolveOutcome, DynamicsError>
where
    I: Iterator<Item = ScheduledInjection>,
{
    loop {
        let next_inj = injections.peek().map(|i| i.time).filter(|&t| t <= t_end);
        if let Some(t) = next_inj {
            if t < state.time {
                return Err(DynamicsError::InjectionInPast(t, state.time));
            }
        }
        let horizon = next_inj.unwrap_or(t_end);
        match step_event(state, dom, params, horizon)? {
            StepOutcome::Event(rec) => on_event(&rec),
            StepOutcome::Halted(rec) => {
                let EventKind::Halt { reason } = rec.kind else {
                    unreachable!()
                };
                on_event(&rec);
                return Ok(EvolveOutcome::Halted(reason));
            }
            StepOutcome::HorizonReached => {
                if next_inj.is_some() {
                    let inj = injections.next().unwrap();
                    let (q, v) = inj.entry(dom);
                    let id = state.fresh_id();
                    state.particles.push(ParticleState::new(q, v, id));
                    on_event(&EventRecord {
                        t: state.time,
                        kind: EventKind::Injection { side: inj.side },
                        particle: Some(id),
                        q: Some(q),
                        pre_v: None,
                        post_v: Some(v),
                    });
                } else {
                    return Ok(EvolveOutcome::Completed);
                }
            }
        }
    }
}
