//! Closed-form injection and disk-response maps with numerical verification
//! of their derivatives.
//!
//! Two maps are implemented and cross-checked:
//!
//! - the injection map `(τ, ξ, δ, s) → (x, y, vx, vy)` of a particle entering
//!   a wall with an opening and flying freely until horizon `t`, with its
//!   closed-form inverse and Jacobian determinant `-s² cos δ`;
//! - the disk response map `Ψ_t: (x, y, vx, vy) → (φ_t, ω_t)` of a particle
//!   striking a freely rotating disk (inertia ratio 1), whose 2×4 derivative
//!   has rank 2 exactly away from the degenerate locus `R ω = v_t`.
//!
//! Analytic formulas are the implementation; central differences (with step
//! halving to confirm second-order convergence) are the independent check.

use crate::geometry::{disk_hit_time, Vec2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum JacobianError {
    #[error("no preimage: recovered entry time {0} outside (0, horizon)")]
    NoPreimage(f64),
    #[error("no preimage: vx = {0} is not positive")]
    NotInward(f64),
    #[error("trajectory misses the disk before the horizon")]
    NoCollision,
}

/// Injection parameters: entry time, entry position, angle from the inward
/// normal, speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionCoords {
    pub tau: f64,
    pub xi: f64,
    pub delta: f64,
    pub s: f64,
}

/// Free-flight phase-space point at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeFlightCoords {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

/// Position and velocity at horizon `t` of a particle injected at `(τ, ξ)`
/// with angle `δ` and speed `s`:
/// `x = (t-τ) s cos δ`, `y = -(t-τ) s sin δ + ξ`, `v = s (cos δ, -sin δ)`.
pub fn injection_map(c: &InjectionCoords, t: f64) -> FreeFlightCoords {
    let dt = t - c.tau;
    let (sin_d, cos_d) = c.delta.sin_cos();
    FreeFlightCoords {
        x: dt * c.s * cos_d,
        y: -dt * c.s * sin_d + c.xi,
        vx: c.s * cos_d,
        vy: -c.s * sin_d,
    }
}

/// Closed-form inverse of [`injection_map`]: `s = |v|`,
/// `δ = arctan(-vy/vx)`, `ξ = y + x tan δ`, `τ = t - x/vx`.
pub fn injection_map_inverse(
    f: &FreeFlightCoords,
    t: f64,
) -> Result<InjectionCoords, JacobianError> {
    if !(f.vx > 0.0) {
        return Err(JacobianError::NotInward(f.vx));
    }
    let s = (f.vx * f.vx + f.vy * f.vy).sqrt();
    let delta = (-f.vy / f.vx).atan();
    let xi = f.y + f.x * (-f.vy / f.vx);
    let tau = t - f.x / f.vx;
    if !(tau > 0.0 && tau < t) {
        return Err(JacobianError::NoPreimage(tau));
    }
    Ok(InjectionCoords { tau, xi, delta, s })
}

/// Analytic Jacobian determinant of the injection map, `-s² cos δ`.
pub fn injection_jacobian_det(c: &InjectionCoords) -> f64 {
    -c.s * c.s * c.delta.cos()
}

/// Determinant of a 4×4 matrix by partial-pivot elimination.
#[allow(clippy::needless_range_loop)]
fn det4(mut m: [[f64; 4]; 4]) -> f64 {
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    det
}

/// Result of comparing the analytic injection-map determinant against a
/// central-difference evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JacobianCheck {
    pub analytic: f64,
    pub numeric: f64,
    /// `|analytic - numeric| / max(|analytic|, tiny)`
    pub discrepancy: f64,
}

/// Central-difference 4×4 Jacobian determinant of the injection map with
/// per-coordinate relative step `rel_step`.
pub fn injection_jacobian_check(c: &InjectionCoords, t: f64, rel_step: f64) -> JacobianCheck {
    let coords = [c.tau, c.xi, c.delta, c.s];
    let mut jac = [[0.0; 4]; 4];
    for (k, &base) in coords.iter().enumerate() {
        let h = rel_step * base.abs().max(1.0);
        let mut up = *c;
        let mut dn = *c;
        match k {
            0 => {
                up.tau += h;
                dn.tau -= h;
            }
            1 => {
                up.xi += h;
                dn.xi -= h;
            }
            2 => {
                up.delta += h;
                dn.delta -= h;
            }
            _ => {
                up.s += h;
                dn.s -= h;
            }
        }
        let fu = injection_map(&up, t);
        let fd = injection_map(&dn, t);
        let col = [
            (fu.x - fd.x) / (2.0 * h),
            (fu.y - fd.y) / (2.0 * h),
            (fu.vx - fd.vx) / (2.0 * h),
            (fu.vy - fd.vy) / (2.0 * h),
        ];
        for (row, value) in col.iter().enumerate() {
            jac[row][k] = *value;
        }
    }
    let analytic = injection_jacobian_det(c);
    let numeric = det4(jac);
    JacobianCheck {
        analytic,
        numeric,
        discrepancy: (analytic - numeric).abs() / analytic.abs().max(1e-300),
    }
}

/// Initial conditions for the disk response map: particle phase-space point
/// and disk state, with the disk of radius `r` centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskResponseInput {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub phi: f64,
    pub omega: f64,
}

/// Output of the disk response map at horizon `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskResponse {
    pub collision_time: f64,
    pub theta: f64,
    pub phi_t: f64,
    pub omega_t: f64,
    pub x_t: f64,
    pub y_t: f64,
    pub vx_t: f64,
    pub vy_t: f64,
}

/// Closed-form state at horizon `t` of a particle that strikes the disk once
/// (inertia ratio 1): collision at time `τ` and angle `θ`, with
/// `v_t = (vx·y - vy·x)/R`, outgoing velocity
/// `v' = v_⊥ (cos θ, sin θ) + R ω (sin θ, -cos θ)`, disk response
/// `ω_t = v_t / R`, `φ_t = φ + ω τ + (v_t/R)(t - τ) mod 2π`.
pub fn disk_response_map(
    input: &DiskResponseInput,
    r: f64,
    t: f64,
) -> Result<DiskResponse, JacobianError> {
    let q = Vec2::new(input.x, input.y);
    let v = Vec2::new(input.vx, input.vy);
    let hit = disk_hit_time(q, v, Vec2::ZERO, r).ok_or(JacobianError::NoCollision)?;
    if hit.time >= t {
        return Err(JacobianError::NoCollision);
    }
    let tau = hit.time;
    let contact = hit.contact;
    let theta = f64::atan2(contact.y, contact.x);
    let n = contact.scale(1.0 / r);
    let tangent = Vec2::new(n.y, -n.x);
    let v_t = v.dot(tangent);
    let v_perp = -v.dot(n);
    let v_out = n.scale(v_perp) + tangent.scale(r * input.omega);
    let dt = t - tau;
    let omega_t = v_t / r;
    let phi_t = (input.phi + input.omega * tau + omega_t * dt).rem_euclid(std::f64::consts::TAU);
    Ok(DiskResponse {
        collision_time: tau,
        theta,
        phi_t,
        omega_t,
        x_t: contact.x + v_out.x * dt,
        y_t: contact.y + v_out.y * dt,
        vx_t: v_out.x,
        vy_t: v_out.y,
    })
}

/// Signed angular difference `a - b` wrapped to `(-π, π]`.
fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    }
    d
}

/// Derivative data of `Ψ_t = (φ_t, ω_t)` with respect to `(x, y, vx, vy)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankCheck {
    /// Rows: (φ_t, ω_t); columns: (x, y, vx, vy). Central differences.
    pub derivative: [[f64; 4]; 2],
    pub sv_large: f64,
    pub sv_small: f64,
    /// Analytic ω-row `(-vy, vx, y, -x)/R²` against its finite-difference
    /// estimate, as a relative discrepancy.
    pub omega_row_discrepancy: f64,
    /// `|R ω - v_t|` at the collision: zero on the degenerate locus.
    pub locus_gap: f64,
    pub degenerate: bool,
}

/// Central-difference derivative of the disk response and its singular
/// values. The degenerate flag is set when `|R ω - v_t|` is below `tol`.
pub fn disk_response_rank_check(
    input: &DiskResponseInput,
    r: f64,
    t: f64,
    rel_step: f64,
    tol: f64,
) -> Result<RankCheck, JacobianError> {
    let base = disk_response_map(input, r, t)?;
    let v_t = base.omega_t * r;
    let locus_gap = (r * input.omega - v_t).abs();

    let mut derivative = [[0.0; 4]; 2];
    let coords = [input.x, input.y, input.vx, input.vy];
    for (k, &c) in coords.iter().enumerate() {
        let h = rel_step * c.abs().max(0.5);
        let mut up = *input;
        let mut dn = *input;
        match k {
            0 => {
                up.x += h;
                dn.x -= h;
            }
            1 => {
                up.y += h;
                dn.y -= h;
            }
            2 => {
                up.vx += h;
                dn.vx -= h;
            }
            _ => {
                up.vy += h;
                dn.vy -= h;
            }
        }
        let fu = disk_response_map(&up, r, t)?;
        let fd = disk_response_map(&dn, r, t)?;
        derivative[0][k] = angle_diff(fu.phi_t, fd.phi_t) / (2.0 * h);
        derivative[1][k] = (fu.omega_t - fd.omega_t) / (2.0 * h);
    }

    // singular values of the 2×4 matrix from the 2×2 Gram matrix
    let mut gram = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            gram[i][j] = (0..4).map(|k| derivative[i][k] * derivative[j][k]).sum();
        }
    }
    let tr = gram[0][0] + gram[1][1];
    let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let sv_large = (0.5 * (tr + disc)).max(0.0).sqrt();
    let sv_small = (0.5 * (tr - disc)).max(0.0).sqrt();

    // ω_t = (vx·y - vy·x)/R², so its gradient is (-vy, vx, y, -x)/R²
    let r2 = r * r;
    let analytic_row = [-input.vy / r2, input.vx / r2, input.y / r2, -input.x / r2];
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..4 {
        num += (analytic_row[k] - derivative[1][k]).powi(2);
        den += analytic_row[k].powi(2);
    }
    let omega_row_discrepancy = (num / den.max(1e-300)).sqrt();

    Ok(RankCheck {
        derivative,
        sv_large,
        sv_small,
        omega_row_discrepancy,
        locus_gap,
        degenerate: locus_gap <= tol,
    })
}

/// Constructs a disk-response input whose collision satisfies `R ω = v_t`
/// exactly: pick the contact angle and approach speed, set the tangential
/// component to `R ω`, and back the particle off along the incoming ray.
pub fn on_locus_input(
    theta: f64,
    omega: f64,
    v_perp: f64,
    back_time: f64,
    r: f64,
    phi: f64,
) -> DiskResponseInput {
    let n = Vec2::new(theta.cos(), theta.sin());
    let tangent = Vec2::new(n.y, -n.x);
    let v = tangent.scale(r * omega) - n.scale(v_perp);
    let contact = n.scale(r);
    let q = contact - v.scale(back_time);
    DiskResponseInput {
        x: q.x,
        y: q.y,
        vx: v.x,
        vy: v.y,
        phi,
        omega,
    }
}
