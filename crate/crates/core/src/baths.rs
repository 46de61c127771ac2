//! Heat-bath injection processes.
//!
//! Each bath emits particles at Poisson times with independent draws for the
//! entry position on its opening, the angle from the inward normal, and the
//! speed. The equilibrium preset at temperature `T` draws `(s, δ)` with joint
//! density `(4 (mβ)^{3/2} / √π) · s² e^{-mβ s²} · cos(δ)/2`, `β = 1/T`: the
//! speed is the norm of three centered Gaussians of standard deviation
//! `√(T / 2m)`, the angle is `arcsin(2u - 1)`. Custom laws are supplied as
//! tabulated densities sampled by piecewise-linear inverse CDF.
//!
//! Each bath owns its own counter-based RNG stream derived from the master
//! seed, so per-bath sequences do not depend on how the two streams happen to
//! interleave in a run.

use crate::dynamics::{ParticleState, ScheduledInjection, Side};
use crate::geometry::DomainSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BathError {
    #[error("injection rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("tabulated density needs at least two points")]
    TableTooShort,
    #[error(
        "tabulated density must be strictly positive inside its support (offending value {0})"
    )]
    NonPositiveDensity(f64),
    #[error("tabulated density support must be strictly increasing")]
    UnsortedTable,
}

/// Minimum resolution of the resampled inverse-CDF grid for tabulated laws.
pub const TABLE_RESOLUTION: usize = 1 << 12;

/// A probability density given as sorted `(value, density)` pairs, resampled
/// onto a uniform grid of at least [`TABLE_RESOLUTION`] cells and sampled by
/// inverse CDF with linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedDensity {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedDensity {
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, BathError> {
        if points.len() < 2 {
            return Err(BathError::TableTooShort);
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(BathError::UnsortedTable);
            }
        }
        for &(v, d) in points {
            if !(d > 0.0) {
                return Err(BathError::NonPositiveDensity(v));
            }
        }
        let lo = points[0].0;
        let hi = points[points.len() - 1].0;
        let n = TABLE_RESOLUTION.max(points.len() * 4);
        let step = (hi - lo) / n as f64;
        let interp = |x: f64| -> f64 {
            let i = points.partition_point(|p| p.0 <= x).min(points.len() - 1);
            let (x0, d0) = points[i - 1];
            let (x1, d1) = points[i];
            d0 + (d1 - d0) * (x - x0) / (x1 - x0)
        };
        let grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
        let mut cdf = vec![0.0; n + 1];
        for i in 1..=n {
            let a = interp(grid[i - 1].max(lo));
            let b = interp(grid[i].min(hi));
            cdf[i] = cdf[i - 1] + 0.5 * (a + b) * step;
        }
        let total = cdf[n];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Ok(TabulatedDensity { grid, cdf })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        if i == 0 {
            return self.grid[0];
        }
        if i >= self.cdf.len() {
            return *self.grid.last().unwrap();
        }
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.grid[i - 1] + frac * (self.grid[i] - self.grid[i - 1])
    }
}

/// Entry-position law on the opening, as a y-coordinate in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum PositionLaw {
    Uniform,
    Table(TabulatedDensity),
}

/// Entry-angle law on `(-π/2, π/2)`, measured from the inward normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum AngleLaw {
    /// `cos(δ)/2`: the equilibrium flux angle law.
    Cosine,
    Uniform,
    Table(TabulatedDensity),
}

/// Speed law on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SpeedLaw {
    /// Density `∝ s² e^{-m s² / T}`: norm of three Gaussians of standard
    /// deviation `√(T / 2m)`. Untruncated.
    Maxwell {
        temperature: f64,
        mass: f64,
    },
    Table(TabulatedDensity),
}

impl SpeedLaw {
    /// Per-component Gaussian scale of the Maxwell construction.
    pub fn maxwell_sigma(temperature: f64, mass: f64) -> f64 {
        (temperature / (2.0 * mass)).sqrt()
    }

    /// Closed-form CDF of the Maxwell speed law.
    pub fn maxwell_cdf(s: f64, temperature: f64, mass: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let sigma = Self::maxwell_sigma(temperature, mass);
        let z = s / sigma;
        libm::erf(z / std::f64::consts::SQRT_2)
            - (2.0 / std::f64::consts::PI).sqrt() * z * (-0.5 * z * z).exp()
    }
}

/// One bath: its opening, Poisson rate, and the three independent draw laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub side: Side,
    pub rate: f64,
    pub position: PositionLaw,
    pub angle: AngleLaw,
    pub speed: SpeedLaw,
}

impl BathSpec {
    pub fn validate(&self) -> Result<(), BathError> {
        // a zero rate is a silent bath: it absorbs but never emits
        if !(self.rate >= 0.0) {
            return Err(BathError::NegativeRate(self.rate));
        }
        Ok(())
    }

    /// The equilibrium preset: uniform positions, cosine angles, Maxwell
    /// speeds at the bath temperature.
    pub fn equilibrium(side: Side, eq: &EquilibriumBath, mass: f64) -> BathSpec {
        BathSpec {
            side,
            rate: eq.rate,
            position: PositionLaw::Uniform,
            angle: AngleLaw::Cosine,
            speed: SpeedLaw::Maxwell {
                temperature: eq.temperature,
                mass,
            },
        }
    }
}

/// Parameters of an equilibrium bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumBath {
    pub temperature: f64,
    pub rate: f64,
}

impl EquilibriumBath {
    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// Normalization constant of the emission velocity density
    /// `c e^{-mβ|v|²} |v| cos(δ)` over the inward half-plane.
    pub fn normalization(&self, mass: f64) -> f64 {
        2.0 * (mass * self.beta()).powf(1.5) / std::f64::consts::PI.sqrt()
    }
}

/// One sampled emission: absolute time, entry position, angle, speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionEvent {
    pub tau: f64,
    pub xi: f64,
    pub delta: f64,
    pub s: f64,
}

impl InjectionEvent {
    pub fn scheduled(&self, side: Side) -> ScheduledInjection {
        ScheduledInjection {
            time: self.tau,
            side,
            position: self.xi,
            angle: self.delta,
            speed: self.s,
        }
    }
}

fn draw_open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// Draws `(speed, angle)` from the equilibrium emission law at temperature
/// `t` for particle mass `m`.
pub fn equilibrium_velocity_sampler(t: f64, m: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let sigma = SpeedLaw::maxwell_sigma(t, m);
    let (a, b, c): (f64, f64, f64) = (
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    );
    let s = sigma * (a * a + b * b + c * c).sqrt();
    let delta = (2.0 * draw_open_unit(rng) - 1.0).asin();
    (s, delta)
}

fn sample_angle(law: &AngleLaw, rng: &mut ChaCha8Rng) -> f64 {
    match law {
        AngleLaw::Cosine => (2.0 * draw_open_unit(rng) - 1.0).asin(),
        AngleLaw::Uniform => std::f64::consts::FRAC_PI_2 * (2.0 * draw_open_unit(rng) - 1.0),
        AngleLaw::Table(t) => t.sample(rng),
    }
}

fn sample_speed(law: &SpeedLaw, rng: &mut ChaCha8Rng) -> f64 {
    match law {
        SpeedLaw::Maxwell { temperature, mass } => {
            let sigma = SpeedLaw::maxwell_sigma(*temperature, *mass);
            let (a, b, c): (f64, f64, f64) = (
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            );
            sigma * (a * a + b * b + c * c).sqrt()
        }
        SpeedLaw::Table(t) => t.sample(rng),
    }
}

fn sample_position(law: &PositionLaw, rng: &mut ChaCha8Rng) -> f64 {
    match law {
        PositionLaw::Uniform => rng.random_range(-1.0..1.0),
        PositionLaw::Table(t) => t.sample(rng),
    }
}

/// Next emission of `bath` strictly after `now`: an exponential waiting time
/// at the bath rate, with position, angle, and speed drawn independently.
pub fn sample_next_injection(bath: &BathSpec, now: f64, rng: &mut ChaCha8Rng) -> InjectionEvent {
    let gap = Exp::new(bath.rate).expect("validated rate").sample(rng);
    InjectionEvent {
        tau: now + gap,
        xi: sample_position(&bath.position, rng),
        delta: sample_angle(&bath.angle, rng),
        s: sample_speed(&bath.speed, rng),
    }
}

/// Entry state of an injection: `q = (0, ξ)` with `v = s(cos δ, -sin δ)`
/// from the left, mirrored in x from the right.
pub fn injection_to_particle(
    ev: &InjectionEvent,
    side: Side,
    dom: &DomainSpec,
    id: u64,
) -> ParticleState {
    let (q, v) = ev.scheduled(side).entry(dom);
    ParticleState::new(q, v, id)
}

/// Derives an independent ChaCha stream from a master seed; stream
/// assignments are recorded in run summaries.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Infinite ascending stream of one bath's emissions.
pub struct BathStream {
    spec: BathSpec,
    rng: ChaCha8Rng,
    now: f64,
}

impl BathStream {
    pub fn new(spec: BathSpec, rng: ChaCha8Rng, start: f64) -> Self {
        BathStream {
            spec,
            rng,
            now: start,
        }
    }
}

impl Iterator for BathStream {
    type Item = ScheduledInjection;

    fn next(&mut self) -> Option<ScheduledInjection> {
        if self.spec.rate == 0.0 {
            return None;
        }
        let ev = sample_next_injection(&self.spec, self.now, &mut self.rng);
        self.now = ev.tau;
        Some(ev.scheduled(self.spec.side))
    }
}

/// Merge of the two bath streams by timestamp. Each stream keeps its own
/// RNG, so the merged order never affects either bath's draw sequence.
pub struct MergedBaths {
    left: std::iter::Peekable<BathStream>,
    right: std::iter::Peekable<BathStream>,
}

impl MergedBaths {
    pub fn new(left: BathStream, right: BathStream) -> Self {
        MergedBaths {
            left: left.peekable(),
            right: right.peekable(),
        }
    }
}

impl Iterator for MergedBaths {
    type Item = ScheduledInjection;

    fn next(&mut self) -> Option<ScheduledInjection> {
        let tl = self.left.peek().map(|i| i.time).unwrap_or(f64::INFINITY);
        let tr = self.right.peek().map(|i| i.time).unwrap_or(f64::INFINITY);
        if tl <= tr {
            self.left.next()
        } else {
            self.right.next()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;

    fn eq_bath(side: Side) -> BathSpec {
        BathSpec::equilibrium(
            side,
            &EquilibriumBath {
                temperature: 1.0,
                rate: 1.0,
            },
            1.0,
        )
    }

    #[test]
    fn exponential_gap_mean() {
        let bath = eq_bath(Side::Left);
        let mut rng = stream_rng(42, 0);
        let n = 100_000;
        let mut now = 0.0;
        let mut sum = 0.0;
        for _ in 0..n {
            let ev = sample_next_injection(&bath, now, &mut rng);
            sum += ev.tau - now;
            now = ev.tau;
        }
        let mean_gap = sum / n as f64;
        // Exp(1): mean 1, sd 1
        assert!(
            (mean_gap - 1.0).abs() < 3.0 / (n as f64).sqrt(),
            "{mean_gap}"
        );
    }

    #[test]
    fn uniform_position_mean() {
        let bath = eq_bath(Side::Left);
        let mut rng = stream_rng(43, 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_next_injection(&bath, 0.0, &mut rng).xi)
            .sum::<f64>()
            / n as f64;
        let sd = 2.0 / 12f64.sqrt();
        assert!(mean.abs() < 3.0 * sd / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn identical_seeds_identical_draws() {
        let bath = eq_bath(Side::Right);
        let mut a = stream_rng(7, 3);
        let mut b = stream_rng(7, 3);
        for _ in 0..1000 {
            let ea = sample_next_injection(&bath, 1.0, &mut a);
            let eb = sample_next_injection(&bath, 1.0, &mut b);
            assert_eq!(ea, eb);
        }
    }

    #[test]
    fn equilibrium_density_normalizes() {
        // Simpson quadrature of c e^{-mβ s²} s² cos δ over (0, s_max)×(-π/2, π/2)
        let (m, t) = (1.3, 0.7);
        let eq = EquilibriumBath {
            temperature: t,
            rate: 1.0,
        };
        let c = eq.normalization(m);
        let beta = eq.beta();
        let s_max = 30.0 / (m * beta).sqrt();
        let n = 20_001;
        let h = s_max / (n - 1) as f64;
        let speed_part: f64 = (0..n)
            .map(|i| {
                let s = i as f64 * h;
                let w = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * s * s * (-m * beta * s * s).exp()
            })
            .sum::<f64>()
            * h
            / 3.0;
        let total = c * speed_part * 2.0; // ∫cos over (-π/2, π/2) = 2
        assert!((total - 1.0).abs() < 1e-8, "normalization {total}");
    }

    #[test]
    fn maxwell_cdf_matches_quadrature() {
        let (m, t): (f64, f64) = (1.0, 1.0);
        let beta = 1.0 / t;
        let norm = 4.0 * (m * beta).powf(1.5) / std::f64::consts::PI.sqrt();
        for s_hi in [0.3, 0.8, 1.5, 2.5] {
            let n = 40_001;
            let h = s_hi / (n - 1) as f64;
            let quad: f64 = (0..n)
                .map(|i| {
                    let s = i as f64 * h;
                    let w = if i == 0 || i == n - 1 {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    w * s * s * (-m * beta * s * s).exp()
                })
                .sum::<f64>()
                * h
                / 3.0
                * norm;
            let cdf = SpeedLaw::maxwell_cdf(s_hi, t, m);
            assert!((quad - cdf).abs() < 1e-9, "s={s_hi}: {quad} vs {cdf}");
        }
    }

    #[test]
    fn equilibrium_sampler_moments_and_ks() {
        let mut rng = stream_rng(11, 0);
        let n = 1_000_000;
        let mut speeds = Vec::with_capacity(n);
        let mut neg_angles = 0u64;
        for _ in 0..n {
            let (s, d) = equilibrium_velocity_sampler(1.0, 1.0, &mut rng);
            speeds.push(s);
            if d < 0.0 {
                neg_angles += 1;
            }
        }
        // E[s] = 2/√π for m = β = 1; sd of s ≈ 0.476
        let mean_s = crate::stats::mean(&speeds);
        let expect = 2.0 / std::f64::consts::PI.sqrt();
        let sd_s = (1.5 - expect * expect).sqrt();
        assert!(
            (mean_s - expect).abs() < 3.0 * sd_s / (n as f64).sqrt(),
            "mean {mean_s} vs {expect}"
        );
        // angle symmetry: binomial 3σ
        let half = n as f64 / 2.0;
        let dev = (neg_angles as f64 - half).abs();
        assert!(dev < 3.0 * (n as f64 * 0.25).sqrt(), "dev {dev}");
        // KS against the closed-form speed CDF on a 10⁵ subsample
        let mut sub: Vec<f64> = speeds[..100_000].to_vec();
        let (_, p) = crate::stats::ks_test(&mut sub, |s| SpeedLaw::maxwell_cdf(s, 1.0, 1.0));
        assert!(p > 1e-3, "KS p = {p}");
    }

    #[test]
    fn injections_always_point_inward() {
        let dom = DomainSpec::new(2, 0.3).unwrap();
        for side in [Side::Left, Side::Right] {
            let bath = eq_bath(side);
            let mut rng = stream_rng(13, 1);
            for i in 0..10_000 {
                let ev = sample_next_injection(&bath, 0.0, &mut rng);
                let p = injection_to_particle(&ev, side, &dom, i);
                match side {
                    Side::Left => assert!(p.v.x > 0.0 && p.q.x == 0.0),
                    Side::Right => assert!(p.v.x < 0.0 && p.q.x == dom.width()),
                }
                assert!(p.q.y >= -1.0 && p.q.y <= 1.0);
            }
        }
    }

    #[test]
    fn injection_entry_examples() {
        let dom = DomainSpec::new(1, 0.5).unwrap();
        let ev = InjectionEvent {
            tau: 0.0,
            xi: 0.0,
            delta: 0.0,
            s: 1.0,
        };
        let p = injection_to_particle(&ev, Side::Left, &dom, 0);
        assert_eq!(p.q, Vec2::new(0.0, 0.0));
        assert_eq!(p.v, Vec2::new(1.0, 0.0));
        // 45 degrees downward drift at speed √2
        let ev = InjectionEvent {
            tau: 0.0,
            xi: 0.0,
            delta: std::f64::consts::FRAC_PI_4,
            s: std::f64::consts::SQRT_2,
        };
        let p = injection_to_particle(&ev, Side::Left, &dom, 0);
        assert!((p.v.x - 1.0).abs() < 1e-15);
        assert!((p.v.y + 1.0).abs() < 1e-15);
        // right bath mirror
        let ev = InjectionEvent {
            tau: 0.0,
            xi: 0.0,
            delta: 0.0,
            s: 1.0,
        };
        let p = injection_to_particle(&ev, Side::Right, &dom, 0);
        assert_eq!(p.q, Vec2::new(2.0, 0.0));
        assert_eq!(p.v, Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn merged_stream_is_poisson_with_summed_rate() {
        let left = BathStream::new(eq_bath(Side::Left), stream_rng(17, 0), 0.0);
        let mut right_spec = eq_bath(Side::Right);
        right_spec.rate = 0.5;
        let right = BathStream::new(right_spec, stream_rng(17, 1), 0.0);
        let mut merged = MergedBaths::new(left, right);
        // counts in unit windows are Poisson(1.5)
        let windows = 20_000usize;
        let mut counts = vec![0u64; windows];
        for inj in merged.by_ref() {
            let w = inj.time.floor() as usize;
            if w >= windows {
                break;
            }
            counts[w] += 1;
        }
        let (obs, exp) = crate::stats::pool_poisson_bins(&counts, 1.5, 5.0);
        let (_, _, p) = crate::stats::chi_square_gof(&obs, &exp);
        assert!(p > 1e-3, "merged-stream Poisson χ² p = {p}");
    }

    #[test]
    fn per_bath_sequences_survive_interleaving() {
        // consuming the right stream must not disturb the left stream's draws
        let solo: Vec<ScheduledInjection> =
            BathStream::new(eq_bath(Side::Left), stream_rng(19, 0), 0.0)
                .take(200)
                .collect();
        let left = BathStream::new(eq_bath(Side::Left), stream_rng(19, 0), 0.0);
        let right = BathStream::new(eq_bath(Side::Right), stream_rng(19, 1), 0.0);
        let merged: Vec<ScheduledInjection> = MergedBaths::new(left, right).take(600).collect();
        let left_only: Vec<ScheduledInjection> = merged
            .into_iter()
            .filter(|i| i.side == Side::Left)
            .take(200)
            .collect();
        assert_eq!(solo.len(), left_only.len());
        for (a, b) in solo.iter().zip(&left_only) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tabulated_density_matches_shape() {
        // triangular density on [0, 2]: f(x) = x/2 ... check mean = 4/3
        let table = TabulatedDensity::from_points(&[(0.0, 1e-9), (2.0, 1.0)]).unwrap();
        let mut rng = stream_rng(23, 0);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| table.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 4.0 / 3.0).abs() < 0.01, "mean {mean}");
        // rejects bad tables
        assert!(TabulatedDensity::from_points(&[(0.0, 1.0)]).is_err());
        assert!(TabulatedDensity::from_points(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(TabulatedDensity::from_points(&[(1.0, 1.0), (0.0, 1.0)]).is_err());
    }
}
