//! The cell geometry and exact boundary queries.
//!
//! The cell is a rectangle of height 2 (`y ∈ [-1, 1]`) and width `2N` holding
//! `N` pinned disks of radius `R < 1` centered at `(2j - 1, 0)`. The two
//! vertical sides `x = 0` and `x = 2N` are openings: a particle reaching one
//! leaves the cell. Everything here is a pure function; all contact times are
//! roots of closed-form equations, never integrated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Discriminant threshold (relative to `|v|² R²`) below which a disk contact
/// counts as grazing. Grazing contacts are flagged, not dropped: the exchange
/// law still applies to them.
pub const GRAZING_DISC_TOL: f64 = 1e-12;

/// Two boundary events closer than this in time are treated as simultaneous.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// No boundary event exists for a particle at rest.
    #[error("particle has zero velocity: no boundary event exists")]
    StuckParticle,
    /// A contact frame was requested for a point not on the disk rim.
    #[error("point ({0}, {1}) is not on disk {2}")]
    NotOnDisk(f64, f64, usize),
}

/// Plane vector used for both positions and velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// The cell: `N` disks of radius `R` in a `2N × 2` rectangle with open
/// vertical sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub n_disks: usize,
    pub disk_radius: f64,
}

impl DomainSpec {
    pub fn new(n_disks: usize, disk_radius: f64) -> Result<Self, String> {
        if n_disks == 0 {
            return Err("n_disks must be at least 1".into());
        }
        if !(disk_radius > 0.0 && disk_radius < 1.0) {
            return Err(format!(
                "disk_radius must lie strictly in (0, 1), got {disk_radius}"
            ));
        }
        Ok(DomainSpec {
            n_disks,
            disk_radius,
        })
    }

    /// Width of the cell; the right opening sits at `x = width()`.
    pub fn width(&self) -> f64 {
        2.0 * self.n_disks as f64
    }

    /// Center of disk `j` (1-based, matching the physical layout).
    pub fn disk_center(&self, j: usize) -> Vec2 {
        debug_assert!(j >= 1 && j <= self.n_disks);
        Vec2::new(2.0 * j as f64 - 1.0, 0.0)
    }

    /// Free area of the cell: rectangle minus the disks.
    pub fn area(&self) -> f64 {
        let n = self.n_disks as f64;
        4.0 * n - n * std::f64::consts::PI * self.disk_radius * self.disk_radius
    }

    /// Length of each opening.
    pub fn opening_length(&self) -> f64 {
        2.0
    }

    /// True if `q` lies in the closed cell (inside the rectangle, outside
    /// every open disk).
    pub fn contains(&self, q: Vec2) -> bool {
        if q.x < 0.0 || q.x > self.width() || q.y.abs() > 1.0 {
            return false;
        }
        let r2 = self.disk_radius * self.disk_radius;
        (1..=self.n_disks).all(|j| (q - self.disk_center(j)).norm_sq() >= r2 * (1.0 - 1e-12))
    }
}

/// A boundary surface a particle can currently be departing from. Used to
/// suppress an immediate re-detection of the contact just resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    WallTop,
    WallBottom,
    Disk(usize),
}

/// Kind of the first boundary contact of a free flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    WallTop,
    WallBottom,
    Disk(usize),
    ExitLeft,
    ExitRight,
}

impl BoundaryKind {
    /// Processing rank for simultaneous events: walls, then disks by index,
    /// then exits.
    pub fn rank(&self) -> usize {
        match self {
            BoundaryKind::WallTop => 0,
            BoundaryKind::WallBottom => 1,
            BoundaryKind::Disk(j) => 2 + j,
            BoundaryKind::ExitLeft => usize::MAX - 1,
            BoundaryKind::ExitRight => usize::MAX,
        }
    }

    pub fn surface(&self) -> Option<Surface> {
        match self {
            BoundaryKind::WallTop => Some(Surface::WallTop),
            BoundaryKind::WallBottom => Some(Surface::WallBottom),
            BoundaryKind::Disk(j) => Some(Surface::Disk(*j)),
            _ => None,
        }
    }
}

/// First boundary contact of a free flight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEvent {
    pub time: f64,
    pub kind: BoundaryKind,
    pub contact: Vec2,
    pub grazing: bool,
}

/// A resolved disk contact: time of flight, contact point, grazing flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskHit {
    pub time: f64,
    pub contact: Vec2,
    pub grazing: bool,
}

/// First positive time at which the ray `q + t v` meets the circle of radius
/// `radius` around `center` while approaching it. Returns `None` when the ray
/// misses or only recedes. A contact whose quadratic discriminant is within
/// `GRAZING_DISC_TOL · |v|² R²` of zero is reported with the grazing flag set.
pub fn disk_hit_time(q: Vec2, v: Vec2, center: Vec2, radius: f64) -> Option<DiskHit> {
    let d = q - center;
    let a = v.norm_sq();
    if a == 0.0 {
        return None;
    }
    let b = d.dot(v); // half the linear coefficient
    let c0 = d.norm_sq() - radius * radius;
    let disc4 = 4.0 * (b * b - a * c0);
    let tol = GRAZING_DISC_TOL * a * radius * radius;
    if disc4 < -tol {
        return None;
    }
    if disc4.abs() <= tol {
        // tangency: double root at the closest approach
        let t = -b / a;
        if t <= 0.0 {
            return None;
        }
        return Some(DiskHit {
            time: t,
            contact: q + v.scale(t),
            grazing: true,
        });
    }
    // entering root; inward approach holds automatically at it. Zero and
    // ulp-negative times are real contacts of a particle sitting on (or a
    // rounding error inside) the rim while still approaching it.
    let t = (-b - (b * b - a * c0).sqrt()) / a;
    if t < -TIE_TOL {
        return None;
    }
    let t = t.max(0.0);
    Some(DiskHit {
        time: t,
        contact: q + v.scale(t),
        grazing: false,
    })
}

/// First boundary contact for a free flight starting at `q` with velocity `v`.
///
/// `departing` suppresses re-detection of the surface just left within
/// `TIE_TOL` of flight time. Simultaneous wall/exit contacts (corner hits)
/// resolve to the exit.
pub fn next_boundary_event_from(
    q: Vec2,
    v: Vec2,
    dom: &DomainSpec,
    departing: Option<Surface>,
) -> Result<BoundaryEvent, GeometryError> {
    if v.x == 0.0 && v.y == 0.0 {
        return Err(GeometryError::StuckParticle);
    }

    let mut candidates: Vec<BoundaryEvent> = Vec::with_capacity(dom.n_disks + 2);
    // an approaching plane contact at zero (or ulp-negative) flight time is
    // real: it happens when simultaneous events are processed one at a time
    let plane_time = |t: f64| {
        if t >= -TIE_TOL {
            Some(t.max(0.0))
        } else {
            None
        }
    };

    if v.y > 0.0 {
        if let Some(t) = plane_time((1.0 - q.y) / v.y) {
            candidates.push(BoundaryEvent {
                time: t,
                kind: BoundaryKind::WallTop,
                contact: Vec2::new(q.x + t * v.x, 1.0),
                grazing: false,
            });
        }
    } else if v.y < 0.0 {
        if let Some(t) = plane_time((-1.0 - q.y) / v.y) {
            candidates.push(BoundaryEvent {
                time: t,
                kind: BoundaryKind::WallBottom,
                contact: Vec2::new(q.x + t * v.x, -1.0),
                grazing: false,
            });
        }
    }
    if v.x < 0.0 {
        if let Some(t) = plane_time(-q.x / v.x) {
            candidates.push(BoundaryEvent {
                time: t,
                kind: BoundaryKind::ExitLeft,
                contact: Vec2::new(0.0, q.y + t * v.y),
                grazing: false,
            });
        }
    } else if v.x > 0.0 {
        if let Some(t) = plane_time((dom.width() - q.x) / v.x) {
            candidates.push(BoundaryEvent {
                time: t,
                kind: BoundaryKind::ExitRight,
                contact: Vec2::new(dom.width(), q.y + t * v.y),
                grazing: false,
            });
        }
    }
    for j in 1..=dom.n_disks {
        if let Some(hit) = disk_hit_time(q, v, dom.disk_center(j), dom.disk_radius) {
            candidates.push(BoundaryEvent {
                time: hit.time,
                kind: BoundaryKind::Disk(j),
                contact: hit.contact,
                grazing: hit.grazing,
            });
        }
    }

    if let Some(surface) = departing {
        candidates.retain(|c| !(c.kind.surface() == Some(surface) && c.time <= TIE_TOL));
    }

    let t_min = candidates
        .iter()
        .map(|c| c.time)
        .fold(f64::INFINITY, f64::min);
    // a moving particle strictly inside the strip always reaches a wall or
    // an opening, so candidates can only be empty for degenerate inputs
    let tied: Vec<BoundaryEvent> = candidates
        .into_iter()
        .filter(|c| c.time <= t_min + TIE_TOL)
        .collect();
    // a pure wall/exit tie is a corner hit, which counts as an exit; any
    // tied disk contact still takes precedence in rank order
    if !tied.iter().any(|c| matches!(c.kind, BoundaryKind::Disk(_))) {
        if let Some(exit) = tied
            .iter()
            .find(|c| matches!(c.kind, BoundaryKind::ExitLeft | BoundaryKind::ExitRight))
        {
            return Ok(*exit);
        }
    }
    tied.into_iter()
        .min_by_key(|c| c.kind.rank())
        .ok_or(GeometryError::StuckParticle)
}

/// `next_boundary_event_from` with no departing-surface suppression.
pub fn next_boundary_event(
    q: Vec2,
    v: Vec2,
    dom: &DomainSpec,
) -> Result<BoundaryEvent, GeometryError> {
    next_boundary_event_from(q, v, dom, None)
}

/// Local frame at a disk contact.
///
/// `theta` is the angular position of the contact point measured
/// counterclockwise from the positive x-axis at the disk center. The frame
/// directions are `normal_out = (cos θ, sin θ)` and
/// `tangent = (sin θ, -cos θ)`; a disk with angular velocity `ω` moves its
/// rim at `R ω` along `tangent`. For an incoming velocity `v`:
///
/// - `v_t = v · tangent` is the tangential component,
/// - `v_perp = -v · normal_out` is the normal speed, positive for an
///   approaching particle, and equal to the outward normal speed after the
///   collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactFrame {
    pub theta: f64,
    pub tangent: Vec2,
    pub normal_out: Vec2,
    pub v_t: f64,
    pub v_perp: f64,
}

impl ContactFrame {
    /// Reconstructs the incoming velocity from the stored components.
    pub fn incoming_velocity(&self) -> Vec2 {
        self.tangent.scale(self.v_t) - self.normal_out.scale(self.v_perp)
    }

    /// Velocity leaving the contact with tangential component `v_t_out` and
    /// the normal speed reversed outward.
    pub fn outgoing_velocity(&self, v_t_out: f64) -> Vec2 {
        self.tangent.scale(v_t_out) + self.normal_out.scale(self.v_perp)
    }
}

/// Relative tolerance on `| |contact - c_j| - R |` for `contact_frame`.
const ON_DISK_TOL: f64 = 1e-9;

/// Contact frame for the point `contact` on disk `j` with incoming velocity `v`.
pub fn contact_frame(
    contact: Vec2,
    v: Vec2,
    j: usize,
    dom: &DomainSpec,
) -> Result<ContactFrame, GeometryError> {
    let d = contact - dom.disk_center(j);
    let dist = d.norm();
    if (dist - dom.disk_radius).abs() > ON_DISK_TOL * dom.disk_radius {
        return Err(GeometryError::NotOnDisk(contact.x, contact.y, j));
    }
    let normal_out = d.scale(1.0 / dist);
    let tangent = Vec2::new(normal_out.y, -normal_out.x);
    Ok(ContactFrame {
        theta: f64::atan2(d.y, d.x),
        tangent,
        normal_out,
        v_t: v.dot(tangent),
        v_perp: -v.dot(normal_out),
    })
}
