//! Replicated open-system runs and the equilibrium steady-state battery.
//!
//! A run drives independent replicas (one RNG stream pair per replica) to a
//! time horizon, snapshots the state at fixed intervals after burn-in, thins
//! the snapshots by the measured autocorrelation of the particle count, and
//! tests the thinned ensemble against the equilibrium law: Poisson particle
//! count, Gaussian disk and particle velocity marginals, uniform positions
//! and disk phases.
//!
//! ## Stationary marginals implied by the equilibrium bath
//!
//! A bath at temperature `T` emits with velocity density
//! `∝ |v| cos(δ) · e^{-m|v|²/T}` over the inward half-plane, which is the
//! flux factor `v_x` times the Gaussian `e^{-m|v|²/T}`. The stationary
//! one-particle velocity density is that Gaussian with the flux factor
//! removed, so each velocity component is `N(0, T/2m)`; since disk collisions
//! exchange `v_t` with `R ω` conserving energy, the matching disk marginal is
//! `ω ~ N(0, T/2Θ)`. Flux balance with these marginals fixes the mean count
//! at `λ = 2√π · (area/|γ|) · ρ √(m/T)`, which is the tested count law. The
//! `T/2` scale is not a free choice: with `N(0, T/m)` marginals the same
//! balance would give a mean count smaller by `√2`, contradicting the count
//! law the battery verifies.

use crate::baths::{BathSpec, BathStream, EquilibriumBath, MergedBaths, PositionLaw, SpeedLaw};
use crate::dynamics::{
    evolve, DiskState, DynamicsError, EventKind, EventRecord, EvolveOutcome, HaltReason,
    PhysicalParams, Side, SystemState,
};
use crate::geometry::{DomainSpec, Vec2};
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("need at least {needed} decorrelated samples, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
    #[error("the equilibrium formulas require equal baths: {0}")]
    UnequalBaths(String),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}

/// Full configuration of a replicated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dom: DomainSpec,
    pub params: PhysicalParams,
    pub left: BathSpec,
    pub right: BathSpec,
    pub seed: u64,
    pub t_end: f64,
    pub burn_in: f64,
    pub sample_interval: f64,
    pub replicas: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            return Err(EnsembleError::InvalidConfig(format!(
                "burn_in {} must be nonnegative and below t_end {}",
                self.burn_in, self.t_end
            )));
        }
        if !(self.sample_interval > 0.0) {
            return Err(EnsembleError::InvalidConfig(
                "sample_interval must be positive".into(),
            ));
        }
        if self.replicas == 0 {
            return Err(EnsembleError::InvalidConfig(
                "need at least one replica".into(),
            ));
        }
        self.left
            .validate()
            .map_err(|e| EnsembleError::InvalidConfig(e.to_string()))?;
        self.right
            .validate()
            .map_err(|e| EnsembleError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// The shared `(rate, temperature)` of an equal equilibrium bath pair;
    /// rejects anything else.
    pub fn equilibrium_preset(&self) -> Result<(f64, f64), EnsembleError> {
        let of = |b: &BathSpec| -> Option<(f64, f64)> {
            match (&b.position, &b.angle, &b.speed) {
                (
                    PositionLaw::Uniform,
                    crate::baths::AngleLaw::Cosine,
                    SpeedLaw::Maxwell { temperature, .. },
                ) => Some((b.rate, *temperature)),
                _ => None,
            }
        };
        let l = of(&self.left).ok_or_else(|| {
            EnsembleError::UnequalBaths("left bath is not the equilibrium preset".into())
        })?;
        let r = of(&self.right).ok_or_else(|| {
            EnsembleError::UnequalBaths("right bath is not the equilibrium preset".into())
        })?;
        if l != r {
            return Err(EnsembleError::UnequalBaths(format!(
                "left (rate, T) = {l:?} differs from right {r:?}"
            )));
        }
        Ok(l)
    }
}

/// Snapshot of the flow between events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSample {
    pub time: f64,
    pub count: usize,
    pub particles: Vec<(Vec2, Vec2)>,
    pub disks: Vec<DiskState>,
}

/// Output of one replica.
#[derive(Debug, Clone)]
pub struct ReplicaOutput {
    pub replica: usize,
    pub samples: Vec<SteadyStateSample>,
    pub injections: u64,
    pub exits: u64,
    pub tangential_stops: u64,
    pub final_count: usize,
    pub halted: Option<HaltReason>,
}

/// Mean particle count of the equilibrium steady state:
/// `λ = 2√π · (area/|γ|) · ρ √(m/T)`.
pub fn equilibrium_mean_count(dom: &DomainSpec, rho: f64, m: f64, t: f64) -> f64 {
    2.0 * std::f64::consts::PI.sqrt() * dom.area() / dom.opening_length() * rho * (m / t).sqrt()
}

/// Stationary variance of each particle velocity component under an
/// equilibrium bath at temperature `t` (see the module docs for why this is
/// `T/2m` rather than `T/m`).
pub fn stationary_velocity_variance(t: f64, m: f64) -> f64 {
    t / (2.0 * m)
}

/// Stationary variance of a disk's angular velocity, `T / 2Θ`.
pub fn stationary_omega_variance(t: f64, moment_of_inertia: f64) -> f64 {
    t / (2.0 * moment_of_inertia)
}

/// Default burn-in: 20 mean residence times, residence `λ / (ρ_L + ρ_R)`.
pub fn default_burn_in(dom: &DomainSpec, rho: f64, m: f64, t: f64) -> f64 {
    20.0 * equilibrium_mean_count(dom, rho, m, t) / (2.0 * rho)
}

/// RNG stream ids: replica `r` uses `4r` (left bath) and `4r + 1` (right).
pub fn bath_stream_ids(replica: usize) -> (u64, u64) {
    (4 * replica as u64, 4 * replica as u64 + 1)
}

/// Runs one replica: evolve with both bath streams to `t_end`, snapshotting
/// every `sample_interval` after `burn_in`. Deterministic given
/// `(config, replica)`. Event records stream through `on_event`.
pub fn run_replica(
    cfg: &RunConfig,
    replica: usize,
    on_event: &mut dyn FnMut(&EventRecord),
) -> Result<ReplicaOutput, EnsembleError> {
    cfg.validate()?;
    let (ls, rs) = bath_stream_ids(replica);
    let left = BathStream::new(
        cfg.left.clone(),
        crate::baths::stream_rng(cfg.seed, ls),
        0.0,
    );
    let right = BathStream::new(
        cfg.right.clone(),
        crate::baths::stream_rng(cfg.seed, rs),
        0.0,
    );
    let mut injections_iter = MergedBaths::new(left, right).peekable();

    let mut state = SystemState::empty(&cfg.dom);
    let mut samples = Vec::new();
    let mut injections = 0u64;
    let mut exits = 0u64;
    let mut tangential_stops = 0u64;
    let mut halted = None;

    let mut t_sample = cfg.burn_in;
    loop {
        let target = t_sample.min(cfg.t_end);
        let outcome = evolve(
            &mut state,
            &cfg.dom,
            &cfg.params,
            &mut injections_iter,
            target,
            &mut |rec| {
                match rec.kind {
                    EventKind::Injection { .. } => injections += 1,
                    EventKind::Exit { .. } => exits += 1,
                    EventKind::Disk {
                        tangential_stop: true,
                        ..
                    } => tangential_stops += 1,
                    _ => {}
                }
                on_event(rec);
            },
        )?;
        if let EvolveOutcome::Halted(reason) = outcome {
            halted = Some(reason);
            break;
        }
        if state.time >= cfg.t_end {
            break;
        }
        // snapshot at the sample time just reached
        samples.push(SteadyStateSample {
            time: state.time,
            count: state.particle_count(),
            particles: state.particles.iter().map(|p| (p.q, p.v)).collect(),
            disks: state.disks.clone(),
        });
        t_sample += cfg.sample_interval;
    }

    Ok(ReplicaOutput {
        replica,
        samples,
        injections,
        exits,
        tangential_stops,
        final_count: state.particle_count(),
        halted,
    })
}

/// Merged output of all replicas, thinned to approximately independent
/// snapshots.
#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub thinned: Vec<SteadyStateSample>,
    pub raw_samples: usize,
    pub effective_sample_size: f64,
    pub thin_stride: usize,
    pub injections: u64,
    pub exits: u64,
    pub tangential_stops: u64,
    pub final_counts: Vec<usize>,
    pub halted_replicas: usize,
}

/// Runs all replicas in parallel and merges their sample streams by replica
/// id (an order-independent reduction). Halted replicas are dropped from the
/// statistics and counted.
pub fn run_ensemble(cfg: &RunConfig) -> Result<EnsembleRun, EnsembleError> {
    cfg.validate()?;
    let outputs: Vec<Result<ReplicaOutput, EnsembleError>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| run_replica(cfg, r, &mut |_| {}))
        .collect();

    let mut thinned = Vec::new();
    let mut raw = 0usize;
    let mut ess_total = 0.0;
    let mut stride_max = 1usize;
    let mut injections = 0;
    let mut exits = 0;
    let mut tangential_stops = 0;
    let mut halted = 0;
    let mut final_counts = Vec::new();
    for out in outputs {
        let out = out?;
        if out.halted.is_some() {
            halted += 1;
            continue;
        }
        injections += out.injections;
        exits += out.exits;
        tangential_stops += out.tangential_stops;
        final_counts.push(out.final_count);
        raw += out.samples.len();
        let counts: Vec<f64> = out.samples.iter().map(|s| s.count as f64).collect();
        let tau = stats::integrated_autocorr_time(&counts);
        let stride = tau.ceil() as usize;
        stride_max = stride_max.max(stride);
        ess_total += counts.len() as f64 / tau;
        thinned.extend(out.samples.into_iter().step_by(stride.max(1)));
    }
    Ok(EnsembleRun {
        thinned,
        raw_samples: raw,
        effective_sample_size: ess_total,
        thin_stride: stride_max,
        injections,
        exits,
        tangential_stops,
        final_counts,
        halted_replicas: halted,
    })
}

/// One test of the battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub level: f64,
    pub pass: bool,
    pub null: String,
}

impl TestReport {
    fn new(
        name: impl Into<String>,
        statistic: f64,
        p_value: f64,
        level: f64,
        null: String,
    ) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            p_value,
            level,
            pass: p_value >= level,
            null,
        }
    }
}

/// Chi-square test of the snapshot particle counts against Poisson(λ), tail
/// bins pooled to expected count ≥ 5. Needs ≥ 10³ decorrelated samples.
pub fn poisson_count_test(
    counts: &[u64],
    lambda: f64,
    level: f64,
) -> Result<TestReport, EnsembleError> {
    if counts.len() < 1000 {
        return Err(EnsembleError::InsufficientSamples {
            needed: 1000,
            have: counts.len(),
        });
    }
    let (obs, exp) = stats::pool_poisson_bins(counts, lambda, 5.0);
    let (stat, _, p) = stats::chi_square_gof(&obs, &exp);
    Ok(TestReport::new(
        "particle_count_poisson",
        stat,
        p,
        level,
        format!("Poisson(λ={lambda:.6})"),
    ))
}

/// The marginal battery against explicit nulls: per-disk `ω` and `φ`, pooled
/// particle velocity components, and the disk-masked position grid.
/// `var_v` and `var_omega` are the expected stationary variances.
pub fn marginal_tests(
    samples: &[SteadyStateSample],
    dom: &DomainSpec,
    var_v: f64,
    var_omega: f64,
    level: f64,
) -> Result<Vec<TestReport>, EnsembleError> {
    if samples.len() < 1000 {
        return Err(EnsembleError::InsufficientSamples {
            needed: 1000,
            have: samples.len(),
        });
    }
    let mut reports = Vec::new();
    let sd_omega = var_omega.sqrt();
    let sd_v = var_v.sqrt();
    let tau = std::f64::consts::TAU;

    for j in 0..dom.n_disks {
        let mut omegas: Vec<f64> = samples.iter().map(|s| s.disks[j].omega).collect();
        let (stat, p) = stats::ks_test(&mut omegas, |x| stats::normal_cdf(x, 0.0, sd_omega));
        reports.push(TestReport::new(
            format!("disk_{}_omega_gaussian", j + 1),
            stat,
            p,
            level,
            format!("Normal(0, {var_omega:.6})"),
        ));
        let mut phis: Vec<f64> = samples.iter().map(|s| s.disks[j].phi).collect();
        let (stat, p) = stats::ks_test(&mut phis, |x| (x / tau).clamp(0.0, 1.0));
        reports.push(TestReport::new(
            format!("disk_{}_phi_uniform", j + 1),
            stat,
            p,
            level,
            "Uniform[0, 2π)".to_string(),
        ));
    }

    let mut vx: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.particles.iter().map(|(_, v)| v.x))
        .collect();
    let mut vy: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.particles.iter().map(|(_, v)| v.y))
        .collect();
    if vx.len() < 1000 {
        return Err(EnsembleError::InsufficientSamples {
            needed: 1000,
            have: vx.len(),
        });
    }
    let (stat, p) = stats::ks_test(&mut vx, |x| stats::normal_cdf(x, 0.0, sd_v));
    reports.push(TestReport::new(
        "particle_vx_gaussian",
        stat,
        p,
        level,
        format!("Normal(0, {var_v:.6})"),
    ));
    let (stat, p) = stats::ks_test(&mut vy, |x| stats::normal_cdf(x, 0.0, sd_v));
    reports.push(TestReport::new(
        "particle_vy_gaussian",
        stat,
        p,
        level,
        format!("Normal(0, {var_v:.6})"),
    ));

    reports.push(position_grid_test(samples, dom, level));
    Ok(reports)
}

/// Position-uniformity chi-square on a rectangular grid masked by the disks:
/// cell probabilities are proportional to the free area of each cell.
fn position_grid_test(samples: &[SteadyStateSample], dom: &DomainSpec, level: f64) -> TestReport {
    let nx = 4 * dom.n_disks;
    let ny = 4;
    let w = dom.width() / nx as f64;
    let h = 2.0 / ny as f64;
    let mut areas = vec![0.0; nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            let x0 = ix as f64 * w;
            let y0 = -1.0 + iy as f64 * h;
            let mut a = w * h;
            for j in 1..=dom.n_disks {
                let c = dom.disk_center(j);
                a -= stats::circle_rect_overlap(c.x, c.y, dom.disk_radius, x0, x0 + w, y0, y0 + h);
            }
            areas[ix * ny + iy] = a.max(0.0);
        }
    }
    let total_area: f64 = areas.iter().sum();
    let mut obs = vec![0.0; nx * ny];
    let mut n = 0.0;
    for s in samples {
        for (q, _) in &s.particles {
            let ix = ((q.x / w) as usize).min(nx - 1);
            let iy = (((q.y + 1.0) / h) as usize).min(ny - 1);
            obs[ix * ny + iy] += 1.0;
            n += 1.0;
        }
    }
    // pool low-expectation cells (slivers cut by the disks) together
    let mut pooled_obs = Vec::new();
    let mut pooled_exp = Vec::new();
    let mut small_o = 0.0;
    let mut small_e = 0.0;
    for i in 0..nx * ny {
        let e = n * areas[i] / total_area;
        if e >= 5.0 {
            pooled_obs.push(obs[i]);
            pooled_exp.push(e);
        } else {
            small_o += obs[i];
            small_e += e;
        }
    }
    if small_e >= 5.0 {
        pooled_obs.push(small_o);
        pooled_exp.push(small_e);
    } else if let (Some(o), Some(e)) = (pooled_obs.last_mut(), pooled_exp.last_mut()) {
        *o += small_o;
        *e += small_e;
    }
    let (stat, _, p) = stats::chi_square_gof(&pooled_obs, &pooled_exp);
    TestReport::new(
        "particle_position_uniform",
        stat,
        p,
        level,
        "uniform on the free area".to_string(),
    )
}

/// Full report of an equilibrium verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryReport {
    pub lambda: f64,
    pub var_v: f64,
    pub var_omega: f64,
    pub base_level: f64,
    pub bonferroni_level: f64,
    pub raw_samples: usize,
    pub effective_sample_size: f64,
    pub halted_replicas: usize,
    pub injections: u64,
    pub exits: u64,
    pub reports: Vec<TestReport>,
    pub all_pass: bool,
}

/// Runs the battery with explicit nulls (used both for the real verification
/// and for negative controls with deliberately wrong nulls).
pub fn run_battery(
    run: &EnsembleRun,
    dom: &DomainSpec,
    lambda: f64,
    var_v: f64,
    var_omega: f64,
    base_level: f64,
) -> Result<BatteryReport, EnsembleError> {
    let n_tests = 3 + 2 * dom.n_disks; // count, vx, vy, grid... plus per-disk ω and φ
    let level = base_level / (n_tests + 1) as f64;
    let counts: Vec<u64> = run.thinned.iter().map(|s| s.count as u64).collect();
    let mut reports = vec![poisson_count_test(&counts, lambda, level)?];
    reports.extend(marginal_tests(&run.thinned, dom, var_v, var_omega, level)?);
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(BatteryReport {
        lambda,
        var_v,
        var_omega,
        base_level,
        bonferroni_level: level,
        raw_samples: run.raw_samples,
        effective_sample_size: run.effective_sample_size,
        halted_replicas: run.halted_replicas,
        injections: run.injections,
        exits: run.exits,
        reports,
        all_pass,
    })
}

/// Verifies the equilibrium steady state of an equal-bath configuration.
pub fn verify_equilibrium(
    cfg: &RunConfig,
    base_level: f64,
) -> Result<BatteryReport, EnsembleError> {
    let (rho, t) = cfg.equilibrium_preset()?;
    let run = run_ensemble(cfg)?;
    let lambda = equilibrium_mean_count(&cfg.dom, rho, cfg.params.mass, t);
    let theta = cfg.params.moment_of_inertia(cfg.dom.disk_radius);
    run_battery(
        &run,
        &cfg.dom,
        lambda,
        stationary_velocity_variance(t, cfg.params.mass),
        stationary_omega_variance(t, theta),
        base_level,
    )
}

/// Convenience equilibrium configuration used by the verification runs.
#[allow(clippy::too_many_arguments)]
pub fn equilibrium_config(
    n_disks: usize,
    disk_radius: f64,
    eta: f64,
    mass: f64,
    temperature: f64,
    rate: f64,
    seed: u64,
    target_ess: usize,
    replicas: usize,
) -> RunConfig {
    let dom = DomainSpec::new(n_disks, disk_radius).unwrap();
    let params = PhysicalParams::new(eta, mass).unwrap();
    let eq = EquilibriumBath { temperature, rate };
    let lambda = equilibrium_mean_count(&dom, rate, mass, temperature);
    let residence = lambda / (2.0 * rate);
    let burn_in = default_burn_in(&dom, rate, mass, temperature);
    let sample_interval = residence;
    // pad raw samples: thinning costs roughly a factor of τ ≈ 2 at this
    // spacing
    let per_replica = (target_ess * 3) / replicas + 1;
    let t_end = burn_in + sample_interval * per_replica as f64;
    RunConfig {
        dom,
        params,
        left: BathSpec::equilibrium(Side::Left, &eq, mass),
        right: BathSpec::equilibrium(Side::Right, &eq, mass),
        seed,
        t_end,
        burn_in,
        sample_interval,
        replicas,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_formula_examples() {
        let dom = DomainSpec::new(1, 0.5).unwrap();
        let lambda = equilibrium_mean_count(&dom, 1.0, 1.0, 1.0);
        let expect = 2.0 * std::f64::consts::PI.sqrt() * (4.0 - std::f64::consts::PI * 0.25) / 2.0;
        assert!((lambda - expect).abs() < 1e-12);
        assert!((expect - 5.698).abs() < 1e-3);
        // monotone vanishing in T
        assert!(equilibrium_mean_count(&dom, 1.0, 1.0, 1e6) < 1e-2);
        // linear in rho
        assert!((equilibrium_mean_count(&dom, 2.0, 1.0, 1.0) - 2.0 * lambda).abs() < 1e-12);
    }

    #[test]
    fn mean_count_scales_with_mass_temperature_and_rate() {
        // away from unit parameters: ρ=0.8, T=2, m=1.5, η=0.7
        let (rho, t, m, eta) = (0.8, 2.0, 1.5, 0.7);
        let cfg = equilibrium_config(1, 0.4, eta, m, t, rho, 99, 4000, 8);
        let run = run_ensemble(&cfg).unwrap();
        let lambda = equilibrium_mean_count(&cfg.dom, rho, m, t);
        let counts: Vec<f64> = run.thinned.iter().map(|s| s.count as f64).collect();
        let mean_count = stats::mean(&counts);
        let se = (lambda / counts.len() as f64).sqrt() * 2.0;
        assert!(
            (mean_count - lambda).abs() < 6.0 * se,
            "mean count {mean_count:.4} vs λ {lambda:.4}"
        );
        let vs: Vec<f64> = run
            .thinned
            .iter()
            .flat_map(|s| s.particles.iter().flat_map(|(_, v)| [v.x, v.y]))
            .collect();
        let var = stats::variance(&vs);
        let expect = stationary_velocity_variance(t, m);
        let se_var = expect * (2.0 / vs.len() as f64).sqrt();
        assert!(
            (var - expect).abs() < 6.0 * se_var,
            "velocity variance {var:.5} vs {expect:.5}"
        );
        let omegas: Vec<f64> = run.thinned.iter().map(|s| s.disks[0].omega).collect();
        let var_w = stats::variance(&omegas);
        let theta = cfg.params.moment_of_inertia(cfg.dom.disk_radius);
        let expect_w = stationary_omega_variance(t, theta);
        let se_w = expect_w * (2.0 / omegas.len() as f64).sqrt();
        assert!(
            (var_w - expect_w).abs() < 6.0 * se_w,
            "spin variance {var_w:.5} vs {expect_w:.5}"
        );
    }

    #[test]
    fn long_dense_run_keeps_books_straight() {
        // cold baths pack ~20 resident particles; a long run must stay free
        // of spurious halts and keep the particle ledger exact
        let mut cfg = equilibrium_config(1, 0.3, 4.0, 1.0, 0.1, 1.0, 31, 800, 1);
        cfg.t_end = cfg.burn_in + 4000.0;
        let mut events = 0u64;
        let out = run_replica(&cfg, 0, &mut |_| events += 1).unwrap();
        assert!(out.halted.is_none());
        assert!(events > 20_000, "only {events} events");
        assert_eq!(out.injections, out.exits + out.final_count as u64);
        let lambda = equilibrium_mean_count(&cfg.dom, 1.0, 1.0, 0.1);
        let counts: Vec<f64> = out.samples.iter().map(|s| s.count as f64).collect();
        let mean_count = stats::mean(&counts);
        assert!(
            (mean_count - lambda).abs() < 0.15 * lambda,
            "mean count {mean_count:.2} vs λ {lambda:.2}"
        );
    }

    #[test]
    fn unequal_baths_rejected() {
        let mut cfg = equilibrium_config(1, 0.3, 1.0, 1.0, 1.0, 0.5, 1, 1000, 2);
        cfg.right.rate = 0.7;
        assert!(matches!(
            cfg.equilibrium_preset(),
            Err(EnsembleError::UnequalBaths(_))
        ));
        let cfg2 = equilibrium_config(1, 0.3, 1.0, 1.0, 1.0, 0.5, 1, 1000, 2);
        let (rho, t) = cfg2.equilibrium_preset().unwrap();
        assert_eq!((rho, t), (0.5, 1.0));
    }

    #[test]
    fn silent_baths_leave_empty_cell_with_constant_spins() {
        let mut cfg = equilibrium_config(1, 0.3, 1.0, 1.0, 1.0, 0.5, 5, 400, 1);
        cfg.left.rate = 0.0;
        cfg.right.rate = 0.0;
        let out = run_replica(&cfg, 0, &mut |_| {}).unwrap();
        assert_eq!(out.injections, 0);
        assert!(out.samples.iter().all(|s| s.count == 0));
        assert!(out.halted.is_none());
        // disks rotate freely and never change angular velocity
        let first = &out.samples[0];
        assert!(out
            .samples
            .iter()
            .all(|s| s.disks[0].omega == first.disks[0].omega));
    }

    #[test]
    fn replica_bookkeeping_balances() {
        let cfg = equilibrium_config(1, 0.3, 1.0, 1.0, 1.0, 0.5, 7, 400, 2);
        let out = run_replica(&cfg, 0, &mut |_| {}).unwrap();
        assert!(out.halted.is_none());
        assert_eq!(
            out.injections,
            out.exits + out.final_count as u64,
            "particle bookkeeping must balance exactly"
        );
        assert!(!out.samples.is_empty());
        // repeatability
        let out2 = run_replica(&cfg, 0, &mut |_| {}).unwrap();
        assert_eq!(out.samples.len(), out2.samples.len());
        for (a, b) in out.samples.iter().zip(&out2.samples) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ensemble_ess_not_exceeding_raw() {
        let cfg = equilibrium_config(1, 0.3, 1.0, 1.0, 1.0, 0.5, 3, 600, 3);
        let run = run_ensemble(&cfg).unwrap();
        assert!(run.effective_sample_size <= run.raw_samples as f64 + 1e-9);
        assert!(run.thinned.len() <= run.raw_samples);
        // flux balance: total drift equals in-system count
        let residual: u64 = run.final_counts.iter().map(|&c| c as u64).sum();
        assert_eq!(run.injections, run.exits + residual);
    }

    // The discriminating check for the stationary marginal scale: measure the
    // velocity-component variance on a medium run and compare against both
    // candidate scales. The bath-implied T/2m must fit and T/m must not.
    #[test]
    fn stationary_velocity_variance_is_bath_implied() {
        let cfg = equilibrium_config(1, 0.3, 1.0, 1.0, 1.0, 0.5, 12345, 4000, 8);
        let run = run_ensemble(&cfg).unwrap();
        let vs: Vec<f64> = run
            .thinned
            .iter()
            .flat_map(|s| s.particles.iter().flat_map(|(_, v)| [v.x, v.y]))
            .collect();
        assert!(vs.len() > 10_000, "only {} components", vs.len());
        let var = crate::stats::variance(&vs);
        // variance of v² summaries: Var(v²) = 2σ⁴ for Gaussian; the standard
        // error of the variance estimate is σ²√(2/n)
        let n = vs.len() as f64;
        let bath_implied = stationary_velocity_variance(1.0, 1.0);
        let se = bath_implied * (2.0 / n).sqrt();
        assert!(
            (var - bath_implied).abs() < 6.0 * se,
            "measured {var:.5} vs bath-implied {bath_implied:.5} (se {se:.5})"
        );
        let naive = 1.0; // T/m
        assert!(
            (var - naive).abs() > 20.0 * se,
            "measured {var:.5} should be far from T/m = {naive:.5}"
        );
        // and the mean count matches the tested λ at this scale
        let counts: Vec<f64> = run.thinned.iter().map(|s| s.count as f64).collect();
        let lambda = equilibrium_mean_count(&cfg.dom, 0.5, 1.0, 1.0);
        let mean_count = crate::stats::mean(&counts);
        let se_count = (lambda / counts.len() as f64).sqrt() * 2.0;
        assert!(
            (mean_count - lambda).abs() < 6.0 * se_count,
            "mean count {mean_count:.4} vs λ {lambda:.4}"
        );
    }
}
