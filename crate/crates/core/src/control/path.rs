//! Proper exit paths: finite polylines through the cell that are specular at
//! the horizontal walls, touch the openings only at their endpoints, and
//! meet disks only at non-tangential reflection vertices.
//!
//! At a disk vertex any strictly outward outgoing direction is realizable by
//! preparing the disk's angular velocity, so a path constrains directions,
//! not speeds: the outgoing speed at each disk vertex follows from the
//! preserved normal component.
//!
//! The constructor follows a ladder scheme: from a rim point with enough
//! height, bounce once off the near horizontal wall onto the disk's pole,
//! then run straight to an opening above every other disk's pole height.
//! Rim points too close to the equator first take a connector segment to a
//! neighboring disk (or straight to the adjacent opening); the connector
//! height is capped by the tangent-line bound `2R√(1-R)/(2-R)` from the
//! equatorial point to the neighbor.

use super::PlanError;
use crate::dynamics::{Side, WallSide};
use crate::geometry::{contact_frame, disk_hit_time, DomainSpec, Vec2};
use serde::{Deserialize, Serialize};

/// Height on a neighboring disk reachable by a straight segment from the
/// equatorial point next to it: `2R√(1-R)/(2-R)`.
pub fn connector_height_bound(r: f64) -> f64 {
    2.0 * r * (1.0 - r).sqrt() / (2.0 - r)
}

/// One vertex of a path polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathVertex {
    /// First point: on a disk rim or in the interior.
    Start {
        point: Vec2,
    },
    WallBounce {
        point: Vec2,
        wall: WallSide,
    },
    DiskReflection {
        point: Vec2,
        disk: usize,
    },
    Exit {
        point: Vec2,
        side: Side,
    },
}

impl PathVertex {
    pub fn point(&self) -> Vec2 {
        match self {
            PathVertex::Start { point }
            | PathVertex::WallBounce { point, .. }
            | PathVertex::DiskReflection { point, .. }
            | PathVertex::Exit { point, .. } => *point,
        }
    }
}

/// A candidate proper path: vertices joined by straight segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub vertices: Vec<PathVertex>,
}

impl PathSpec {
    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        self.vertices
            .windows(2)
            .map(|w| (w[0].point(), w[1].point()))
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }
}

/// A reported violation of the path conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathViolation {
    pub vertex: usize,
    pub message: String,
}

const DIR_TOL: f64 = 1e-9;
const POINT_TOL: f64 = 1e-9;

fn violation(out: &mut Vec<PathViolation>, vertex: usize, message: impl Into<String>) {
    out.push(PathViolation {
        vertex,
        message: message.into(),
    });
}

/// Distance from segment `a..b` interior to the disk, and whether the
/// segment crosses or touches it away from its endpoints.
fn segment_disk_contact(a: Vec2, b: Vec2, center: Vec2, r: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return None;
    }
    let t = ((center - a).dot(d) / len2).clamp(0.0, 1.0);
    let closest = a + d.scale(t);
    let dist = (closest - center).norm();
    if dist <= r + POINT_TOL {
        Some((t, dist))
    } else {
        None
    }
}

/// Checks the path conditions; violations come back as data.
///
/// Conditions: at least one segment; specular wall vertices on the walls;
/// openings touched only at the path's endpoints; segments inside the cell
/// and never tangent to or crossing a disk except at reflection vertices,
/// where both directions must be strictly non-tangential.
pub fn validate_proper_path(path: &PathSpec, dom: &DomainSpec) -> (bool, Vec<PathViolation>) {
    let mut out = Vec::new();
    let n = path.vertices.len();
    if n < 2 {
        violation(&mut out, 0, "path needs at least one segment");
        return (false, out);
    }
    if !matches!(path.vertices[0], PathVertex::Start { .. }) {
        violation(&mut out, 0, "path must begin with a start vertex");
    }
    for (i, v) in path.vertices.iter().enumerate() {
        let p = v.point();
        if !p.is_finite() {
            violation(&mut out, i, "non-finite vertex");
            return (false, out);
        }
        if p.y.abs() > 1.0 + POINT_TOL || p.x < -POINT_TOL || p.x > dom.width() + POINT_TOL {
            violation(&mut out, i, "vertex outside the cell");
        }
        let on_opening = p.x.abs() <= POINT_TOL || (p.x - dom.width()).abs() <= POINT_TOL;
        match v {
            PathVertex::Exit { point, side } => {
                if i != n - 1 {
                    violation(&mut out, i, "exit vertex before the end of the path");
                }
                let expected_x = match side {
                    Side::Left => 0.0,
                    Side::Right => dom.width(),
                };
                if (point.x - expected_x).abs() > POINT_TOL {
                    violation(&mut out, i, "exit vertex not on its opening");
                }
            }
            PathVertex::Start { .. } => {
                if i != 0 {
                    violation(&mut out, i, "interior start vertex");
                }
            }
            PathVertex::WallBounce { point, wall } => {
                let y = match wall {
                    WallSide::Top => 1.0,
                    WallSide::Bottom => -1.0,
                };
                if (point.y - y).abs() > POINT_TOL {
                    violation(&mut out, i, "wall vertex not on its wall");
                }
                if on_opening {
                    violation(&mut out, i, "interior opening contact");
                }
            }
            PathVertex::DiskReflection { point, disk } => {
                if *disk < 1 || *disk > dom.n_disks {
                    violation(&mut out, i, "no such disk");
                } else {
                    let dist = (*point - dom.disk_center(*disk)).norm();
                    if (dist - dom.disk_radius).abs() > POINT_TOL {
                        violation(&mut out, i, "disk vertex not on the rim");
                    }
                }
                if on_opening {
                    violation(&mut out, i, "interior opening contact");
                }
            }
        }
        // interior vertices must stay off the openings
        if i != 0 && i != n - 1 && on_opening {
            // already reported for wall/disk kinds; starts can't be interior
        }
    }

    // per-segment geometry
    for (i, (a, b)) in path.segments().enumerate() {
        let d = b - a;
        if d.norm() <= POINT_TOL {
            violation(&mut out, i, "degenerate segment");
            continue;
        }
        let dir = d.scale(1.0 / d.norm());
        // walls: straight segments attain extremes at endpoints; also forbid
        // riding along a wall
        if a.y.abs() > 1.0 + POINT_TOL || b.y.abs() > 1.0 + POINT_TOL {
            violation(&mut out, i, "segment leaves the strip");
        }
        // openings crossed mid-flight: impossible when endpoint x stay in
        // range, which was checked above
        for j in 1..=dom.n_disks {
            let c = dom.disk_center(j);
            let rr = dom.disk_radius;
            let a_on = ((a - c).norm() - rr).abs() <= POINT_TOL;
            let b_on = ((b - c).norm() - rr).abs() <= POINT_TOL;
            if let Some((t, dist)) = segment_disk_contact(a, b, c, rr) {
                let at_a = t <= POINT_TOL.max(1e-6 / d.norm());
                let at_b = t >= 1.0 - POINT_TOL.max(1e-6 / d.norm());
                if dist < rr - POINT_TOL {
                    // penetration is allowed only as the immediate
                    // neighborhood of a rim endpoint (the chord of a curved
                    // rim dips below the circle at the contact itself)
                    if !((at_a && a_on) || (at_b && b_on)) {
                        violation(&mut out, i, format!("segment crosses disk {j}"));
                    }
                } else if !((at_a && a_on) || (at_b && b_on)) {
                    violation(&mut out, i, format!("segment tangent to disk {j}"));
                }
            }
            // rim endpoints: non-tangential departure/arrival
            if a_on {
                let n_out = (a - c).scale(1.0 / (a - c).norm());
                if dir.dot(n_out) <= DIR_TOL {
                    violation(&mut out, i, format!("tangential departure from disk {j}"));
                }
            }
            if b_on {
                let n_out = (b - c).scale(1.0 / (b - c).norm());
                if (-dir.x * n_out.x - dir.y * n_out.y) <= DIR_TOL {
                    violation(&mut out, i, format!("tangential arrival at disk {j}"));
                }
            }
        }
    }

    // vertex direction rules
    #[allow(clippy::needless_range_loop)]
    for i in 1..n - 1 {
        let prev = path.vertices[i - 1].point();
        let here = path.vertices[i].point();
        let next = path.vertices[i + 1].point();
        let din = (here - prev).scale(1.0 / (here - prev).norm());
        let dout = (next - here).scale(1.0 / (next - here).norm());
        match path.vertices[i] {
            PathVertex::WallBounce { .. } => {
                let specular = Vec2::new(din.x, -din.y);
                if (dout - specular).norm() > 1e-9 {
                    violation(&mut out, i, "non-specular wall vertex");
                }
            }
            PathVertex::DiskReflection { disk, .. } => {
                let c = dom.disk_center(disk);
                let n_out = (here - c).scale(1.0 / (here - c).norm());
                if din.dot(n_out) >= -DIR_TOL {
                    violation(&mut out, i, "tangential or outward arrival at disk vertex");
                }
                if dout.dot(n_out) <= DIR_TOL {
                    violation(&mut out, i, "tangential or inward departure at disk vertex");
                }
            }
            _ => {}
        }
    }

    // every disk vertex must admit a finite rim requirement; the profile
    // computation recomputes them all from the exchange-law inversion
    if out.is_empty() {
        if let Err(e) = path_profile(path, dom, 1.0, 1.0) {
            violation(&mut out, 0, format!("rim requirement not computable: {e}"));
        }
    }

    (out.is_empty(), out)
}

/// One disk reflection a path demands: disk, when, the rim speed to prepare,
/// and the tangential component the collision will leave on the disk.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiskRequirement {
    pub vertex: usize,
    pub disk: usize,
    pub time_offset: f64,
    pub r_omega: f64,
    pub v_t_in: f64,
}

/// Speeds and rim requirements along a validated path, given the arrival
/// speed on the first segment. At each disk vertex the normal speed is
/// preserved, fixing the outgoing speed and the required rim speed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathProfile {
    /// Per-segment speeds (same length as segment count).
    pub speeds: Vec<f64>,
    /// Per-segment flight times.
    pub times: Vec<f64>,
    pub requirements: Vec<DiskRequirement>,
    /// Total time from the start vertex to the exit.
    pub total_time: f64,
}

/// Computes the speed profile and per-disk-vertex rim requirements for a
/// path traversed at `speed0` on its first segment.
pub fn path_profile(
    path: &PathSpec,
    dom: &DomainSpec,
    eta: f64,
    speed0: f64,
) -> Result<PathProfile, PlanError> {
    let mut speeds = Vec::new();
    let mut times = Vec::new();
    let mut requirements = Vec::new();
    let mut speed = speed0;
    let mut clock = 0.0;
    let verts = &path.vertices;
    for i in 0..verts.len() - 1 {
        let a = verts[i].point();
        let b = verts[i + 1].point();
        let len = (b - a).norm();
        speeds.push(speed);
        times.push(len / speed);
        clock += len / speed;
        if let PathVertex::DiskReflection { point, disk } = verts[i + 1] {
            let din = (b - a).scale(1.0 / len);
            let v_in = din.scale(speed);
            let frame = contact_frame(point, v_in, disk, dom)
                .map_err(|e| PlanError::Infeasible(e.to_string()))?;
            let next = verts
                .get(i + 2)
                .ok_or_else(|| PlanError::Infeasible("disk vertex at path end".into()))?
                .point();
            let dout = next - point;
            let r_omega = super::required_r_omega_for_direction(&frame, dout, eta)?;
            requirements.push(DiskRequirement {
                vertex: i + 1,
                disk,
                time_offset: clock,
                r_omega,
                v_t_in: frame.v_t,
            });
            // outgoing speed preserves the normal component
            let dn = dout.scale(1.0 / dout.norm()).dot(frame.normal_out);
            speed = frame.v_perp / dn;
        }
    }
    Ok(PathProfile {
        speeds,
        times,
        requirements,
        total_time: clock,
    })
}

/// Knobs for the path constructor; randomized retries perturb these.
#[derive(Debug, Clone, Copy)]
pub struct PathStyle {
    /// Connector target height as a fraction of the tangent bound (in
    /// `(delta_fraction, 1)`).
    pub connector_fraction: f64,
    /// Equator band `δ` as a fraction of the tangent bound (in `(0, 1)`).
    pub delta_fraction: f64,
    /// Exit height above the pole as a fraction of the pole-to-wall gap.
    pub exit_lift: f64,
}

impl Default for PathStyle {
    fn default() -> Self {
        PathStyle {
            connector_fraction: 0.8,
            delta_fraction: 0.6,
            exit_lift: 0.5,
        }
    }
}

/// Mirror a path in y (used to build lower-half ladders from the upper-half
/// construction).
fn mirror_y(path: PathSpec) -> PathSpec {
    let vertices = path
        .vertices
        .into_iter()
        .map(|v| match v {
            PathVertex::Start { point } => PathVertex::Start {
                point: Vec2::new(point.x, -point.y),
            },
            PathVertex::WallBounce { point, wall } => PathVertex::WallBounce {
                point: Vec2::new(point.x, -point.y),
                wall: match wall {
                    WallSide::Top => WallSide::Bottom,
                    WallSide::Bottom => WallSide::Top,
                },
            },
            PathVertex::DiskReflection { point, disk } => PathVertex::DiskReflection {
                point: Vec2::new(point.x, -point.y),
                disk,
            },
            PathVertex::Exit { point, side } => PathVertex::Exit {
                point: Vec2::new(point.x, -point.y),
                side,
            },
        })
        .collect();
    PathSpec { vertices }
}

/// Exit side reachable from disk `j` with the fewest disks in between.
fn nearer_exit(j: usize, dom: &DomainSpec) -> Side {
    if j - 1 <= dom.n_disks - j {
        Side::Left
    } else {
        Side::Right
    }
}

/// Ladder tail from the top pole of disk `j` to an opening, strictly above
/// every other disk's pole height.
fn pole_to_exit(j: usize, dom: &DomainSpec, style: &PathStyle) -> Vec<PathVertex> {
    let r = dom.disk_radius;
    let side = nearer_exit(j, dom);
    let y_exit = r + style.exit_lift * (1.0 - r);
    let x_exit = match side {
        Side::Left => 0.0,
        Side::Right => dom.width(),
    };
    vec![PathVertex::Exit {
        point: Vec2::new(x_exit, y_exit),
        side,
    }]
}

/// Wall-bounce hop between two rim points of disk `j`, by unfolding the top
/// wall.
fn hop_vertices(from: Vec2, to_theta: f64, j: usize, dom: &DomainSpec) -> [PathVertex; 2] {
    let r = dom.disk_radius;
    let c = dom.disk_center(j);
    let to = c + Vec2::new(r * to_theta.cos(), r * to_theta.sin());
    let mirrored = Vec2::new(to.x, 2.0 - to.y);
    let d = mirrored - from;
    let t = (1.0 - from.y) / d.y;
    [
        PathVertex::WallBounce {
            point: from + d.scale(t),
            wall: WallSide::Top,
        },
        PathVertex::DiskReflection { point: to, disk: j },
    ]
}

/// Builds the ladder from a rim point in the upper half with `sin θ` above
/// the equator band: wall bounces onto the top pole, then out. For wide
/// disks a single bounce can leave the rim inward, so the path climbs
/// toward the pole with as many wall–rim hops as the geometry needs (this
/// is the several-collisions form of the construction).
fn ladder_from(
    j: usize,
    theta: f64,
    dom: &DomainSpec,
    style: &PathStyle,
    as_reflection: bool,
) -> Result<PathSpec, PlanError> {
    let r = dom.disk_radius;
    let c = dom.disk_center(j);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let start = c + Vec2::new(r * theta.cos(), r * theta.sin());
    // normalize so the distance to the pole is measured along the short way
    let theta = theta.rem_euclid(std::f64::consts::TAU);
    let mut last_err = String::new();
    for hops in 0..24 {
        let mut vertices = vec![PathVertex::Start { point: start }];
        if (start - (c + Vec2::new(0.0, r))).norm() > POINT_TOL {
            let mut th = theta;
            let step = (half_pi - th) / (hops as f64 + 1.0);
            for _ in 0..hops {
                th += step;
                let from = vertices.last().unwrap().point();
                vertices.extend(hop_vertices(from, th, j, dom));
            }
            let from = vertices.last().unwrap().point();
            vertices.extend(hop_vertices(from, half_pi, j, dom));
        }
        vertices.extend(pole_to_exit(j, dom, style));
        let mut path = PathSpec { vertices };
        let (ok, violations) = validate_proper_path(&path, dom);
        if ok {
            if as_reflection {
                path.vertices[0] = PathVertex::DiskReflection {
                    point: start,
                    disk: j,
                };
            }
            return Ok(path);
        }
        last_err = format!("{violations:?}");
    }
    Err(PlanError::PlanSearchExhausted {
        retries: 24,
        last: format!("rim ladder from θ={theta} on disk {j}: {last_err}"),
    })
}

/// Proper path from the rim point of disk `j` at angular position `theta` to
/// an opening. The returned path starts with a `Start` vertex at the rim
/// point; when used as a continuation of an incoming flight the caller
/// treats that vertex as a reflection.
pub fn proper_path_from(
    j: usize,
    theta: f64,
    dom: &DomainSpec,
    style: &PathStyle,
) -> Result<PathSpec, PlanError> {
    let r = dom.disk_radius;
    let bound = connector_height_bound(r);
    let delta = style.delta_fraction * bound;
    let y = r * theta.sin();

    let path = if y.abs() > delta {
        // ladder in the appropriate half-plane
        if y > 0.0 {
            ladder_from(j, theta, dom, style, false)?
        } else {
            mirror_y(ladder_from(j, -theta, dom, style, false)?)
        }
    } else {
        // connector toward the facing side, then a ladder from the
        // neighbor (or straight out when the opening is adjacent)
        let facing_right = theta.cos() > 0.0;
        let c = dom.disk_center(j);
        let start = c + Vec2::new(r * theta.cos(), r * theta.sin());
        let y_target = if y >= 0.0 { 1.0 } else { -1.0 } * style.connector_fraction * bound;
        if facing_right && j == dom.n_disks {
            let exit = Vec2::new(dom.width(), y_target);
            PathSpec {
                vertices: vec![
                    PathVertex::Start { point: start },
                    PathVertex::Exit {
                        point: exit,
                        side: Side::Right,
                    },
                ],
            }
        } else if !facing_right && j == 1 {
            let exit = Vec2::new(0.0, y_target);
            PathSpec {
                vertices: vec![
                    PathVertex::Start { point: start },
                    PathVertex::Exit {
                        point: exit,
                        side: Side::Left,
                    },
                ],
            }
        } else {
            let neighbor = if facing_right { j + 1 } else { j - 1 };
            // landing angle on the facing half of the neighbor
            let asin = (y_target / r).asin();
            let theta_land = if facing_right {
                std::f64::consts::PI - asin
            } else {
                asin
            };
            let tail = {
                let t = if y_target > 0.0 {
                    ladder_from(neighbor, theta_land, dom, style, true)?
                } else {
                    mirror_y(ladder_from(neighbor, -theta_land, dom, style, true)?)
                };
                t.vertices
            };
            let mut vertices = vec![PathVertex::Start { point: start }];
            vertices.extend(tail);
            PathSpec { vertices }
        }
    };

    let (ok, violations) = validate_proper_path(&path, dom);
    if !ok {
        return Err(PlanError::PlanSearchExhausted {
            retries: 0,
            last: format!("constructed path invalid: {violations:?}"),
        });
    }
    Ok(path)
}

/// Forced events of a free flight until it exits or meets a disk
/// non-tangentially: wall bounces and tangential touches handled by rim
/// matching.
#[derive(Debug, Clone, PartialEq)]
pub enum ItineraryOutcome {
    ExitsFreely {
        time: f64,
        side: Side,
    },
    FirstContact {
        disk: usize,
        contact: Vec2,
        time: f64,
        velocity: Vec2,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeItinerary {
    /// Tangential rim touches `(disk, time, matched rim speed)` the plan
    /// must prepare so the particle keeps straight.
    pub tangential_touches: Vec<(usize, f64, f64)>,
    pub outcome: ItineraryOutcome,
}

/// Traces a particle under walls-only dynamics (tangential disk touches pass
/// straight through) until an exit or a non-tangential disk contact.
pub fn trace_free_itinerary(
    q: Vec2,
    v: Vec2,
    start_time: f64,
    dom: &DomainSpec,
    max_events: usize,
) -> Result<FreeItinerary, PlanError> {
    use crate::geometry::{next_boundary_event_from, BoundaryKind, Surface};
    let mut q = q;
    let mut v = v;
    let mut t = start_time;
    let mut departing: Option<Surface> = None;
    let mut touches = Vec::new();
    for _ in 0..max_events {
        let ev = next_boundary_event_from(q, v, dom, departing)
            .map_err(|e| PlanError::NotAdmissible(e.to_string()))?;
        t += ev.time;
        q = ev.contact;
        match ev.kind {
            BoundaryKind::WallTop => {
                v = Vec2::new(v.x, -v.y);
                departing = Some(Surface::WallTop);
            }
            BoundaryKind::WallBottom => {
                v = Vec2::new(v.x, -v.y);
                departing = Some(Surface::WallBottom);
            }
            BoundaryKind::ExitLeft => {
                return Ok(FreeItinerary {
                    tangential_touches: touches,
                    outcome: ItineraryOutcome::ExitsFreely {
                        time: t,
                        side: Side::Left,
                    },
                });
            }
            BoundaryKind::ExitRight => {
                return Ok(FreeItinerary {
                    tangential_touches: touches,
                    outcome: ItineraryOutcome::ExitsFreely {
                        time: t,
                        side: Side::Right,
                    },
                });
            }
            BoundaryKind::Disk(j) => {
                if ev.grazing {
                    // rim-matched tangential touch: velocity unchanged
                    let frame = contact_frame(q, v, j, dom)
                        .map_err(|e| PlanError::NotAdmissible(e.to_string()))?;
                    touches.push((j, t, frame.v_t));
                    departing = Some(Surface::Disk(j));
                } else {
                    return Ok(FreeItinerary {
                        tangential_touches: touches,
                        outcome: ItineraryOutcome::FirstContact {
                            disk: j,
                            contact: q,
                            time: t,
                            velocity: v,
                        },
                    });
                }
            }
        }
    }
    Err(PlanError::PlanSearchExhausted {
        retries: 0,
        last: "free itinerary did not terminate".into(),
    })
}

/// First contact solver used by traces: exposed for tests.
pub fn first_disk_contact(q: Vec2, v: Vec2, dom: &DomainSpec) -> Option<(usize, f64)> {
    (1..=dom.n_disks)
        .filter_map(|j| {
            disk_hit_time(q, v, dom.disk_center(j), dom.disk_radius).map(|h| (j, h.time))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}
