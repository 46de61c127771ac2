//! The run configuration file: a single JSON document with flat sections.
//! Unknown keys are rejected so typos fail loudly before any run.

use anyhow::{bail, Context, Result};
use diskgas::baths::{
    AngleLaw, BathSpec, EquilibriumBath, PositionLaw, SpeedLaw, TabulatedDensity,
};
use diskgas::dynamics::{PhysicalParams, Side};
use diskgas::ensemble::{default_burn_in, equilibrium_mean_count, RunConfig};
use diskgas::geometry::DomainSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub format_version: u32,
    pub geometry: GeometrySection,
    pub physics: PhysicsSection,
    pub baths: BathsSection,
    pub run: RunSection,
    #[serde(default)]
    pub planner: PlannerSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub n_disks: usize,
    pub disk_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub eta: f64,
    pub mass: f64,
}

/// Either the equal-bath equilibrium preset or two explicit bath sections.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum BathsSection {
    Equilibrium {
        preset: EquilibriumPresetTag,
        temperature: f64,
        rate: f64,
    },
    Custom {
        left: BathSection,
        right: BathSection,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumPresetTag {
    Equilibrium,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub rate: f64,
    pub position: LawSection,
    pub angle: LawSection,
    pub speed: LawSection,
}

/// One draw law: a named preset or a two-column density table file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSection {
    Uniform,
    Cosine,
    Maxwell { temperature: f64, mass: f64 },
    Table { file: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub t_end: f64,
    #[serde(default)]
    pub burn_in: Option<f64>,
    #[serde(default)]
    pub sample_interval: Option<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
}

fn default_replicas() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    #[serde(default = "default_speed_cap")]
    pub speed_cap: f64,
    #[serde(default = "default_retry_cap")]
    pub retry_cap: u32,
}

fn default_speed_cap() -> f64 {
    1e6
}

fn default_retry_cap() -> u32 {
    64
}

impl Default for PlannerSection {
    fn default() -> Self {
        PlannerSection {
            speed_cap: default_speed_cap(),
            retry_cap: default_retry_cap(),
        }
    }
}

impl PlannerSection {
    pub fn to_planner_config(&self) -> diskgas::control::PlannerConfig {
        diskgas::control::PlannerConfig {
            speed_cap: self.speed_cap,
            retry_cap: self.retry_cap,
        }
    }
}

/// Reads a two-column `value density` text table, `#` comments allowed.
pub fn load_density_table(path: &Path) -> Result<TabulatedDensity> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading density table {}", path.display()))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split_whitespace();
        let (Some(v), Some(d)) = (cols.next(), cols.next()) else {
            bail!("{}:{}: expected two columns", path.display(), lineno + 1);
        };
        points.push((
            v.parse::<f64>()
                .with_context(|| format!("{}:{}: bad value", path.display(), lineno + 1))?,
            d.parse::<f64>()
                .with_context(|| format!("{}:{}: bad density", path.display(), lineno + 1))?,
        ));
    }
    TabulatedDensity::from_points(&points).map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e))
}

fn resolve_law_position(law: &LawSection, base: &Path) -> Result<PositionLaw> {
    Ok(match law {
        LawSection::Uniform => PositionLaw::Uniform,
        LawSection::Table { file } => PositionLaw::Table(load_density_table(&base.join(file))?),
        other => bail!("position law must be uniform or a table, got {other:?}"),
    })
}

fn resolve_law_angle(law: &LawSection, base: &Path) -> Result<AngleLaw> {
    Ok(match law {
        LawSection::Uniform => AngleLaw::Uniform,
        LawSection::Cosine => AngleLaw::Cosine,
        LawSection::Table { file } => AngleLaw::Table(load_density_table(&base.join(file))?),
        other => bail!("angle law must be cosine, uniform, or a table, got {other:?}"),
    })
}

fn resolve_law_speed(law: &LawSection, base: &Path) -> Result<SpeedLaw> {
    Ok(match law {
        LawSection::Maxwell { temperature, mass } => SpeedLaw::Maxwell {
            temperature: *temperature,
            mass: *mass,
        },
        LawSection::Table { file } => SpeedLaw::Table(load_density_table(&base.join(file))?),
        other => bail!("speed law must be maxwell or a table, got {other:?}"),
    })
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ConfigFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.format_version != CONFIG_FORMAT_VERSION {
            bail!(
                "config format version {} unsupported (expected {})",
                cfg.format_version,
                CONFIG_FORMAT_VERSION
            );
        }
        Ok(cfg)
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        DomainSpec::new(self.geometry.n_disks, self.geometry.disk_radius)
            .map_err(|e| anyhow::anyhow!("geometry: {e}"))
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.physics.eta, self.physics.mass)
            .map_err(|e| anyhow::anyhow!("physics: {e}"))
    }

    /// The `(rate, temperature)` of an equilibrium preset, if configured.
    pub fn equilibrium_preset(&self) -> Option<(f64, f64)> {
        match &self.baths {
            BathsSection::Equilibrium {
                rate, temperature, ..
            } => Some((*rate, *temperature)),
            BathsSection::Custom { .. } => None,
        }
    }

    /// Assembles the full run configuration, loading any density tables
    /// relative to `base` and filling bath-derived defaults for burn-in and
    /// sampling.
    pub fn to_run_config(&self, base: &Path) -> Result<RunConfig> {
        let dom = self.domain()?;
        let params = self.params()?;
        let (left, right) = match &self.baths {
            BathsSection::Equilibrium {
                temperature, rate, ..
            } => {
                let eq = EquilibriumBath {
                    temperature: *temperature,
                    rate: *rate,
                };
                (
                    BathSpec::equilibrium(Side::Left, &eq, params.mass),
                    BathSpec::equilibrium(Side::Right, &eq, params.mass),
                )
            }
            BathsSection::Custom { left, right } => (
                BathSpec {
                    side: Side::Left,
                    rate: left.rate,
                    position: resolve_law_position(&left.position, base)?,
                    angle: resolve_law_angle(&left.angle, base)?,
                    speed: resolve_law_speed(&left.speed, base)?,
                },
                BathSpec {
                    side: Side::Right,
                    rate: right.rate,
                    position: resolve_law_position(&right.position, base)?,
                    angle: resolve_law_angle(&right.angle, base)?,
                    speed: resolve_law_speed(&right.speed, base)?,
                },
            ),
        };
        // bath-derived defaults: burn-in of 20 mean residence times, samples
        // one residence time apart; for custom baths fall back to unit gaps
        let (burn_in, sample_interval) = match self.equilibrium_preset() {
            Some((rate, t)) => {
                let residence = equilibrium_mean_count(&dom, rate, params.mass, t) / (2.0 * rate);
                (
                    default_burn_in(&dom, rate, params.mass, t),
                    residence.max(1e-6),
                )
            }
            None => (10.0, 1.0),
        };
        let cfg = RunConfig {
            dom,
            params,
            left,
            right,
            seed: self.run.seed,
            t_end: self.run.t_end,
            burn_in: self.run.burn_in.unwrap_or(burn_in),
            sample_interval: self.run.sample_interval.unwrap_or(sample_interval),
            replicas: self.run.replicas,
        };
        cfg.validate().map_err(|e| anyhow::anyhow!("run: {e}"))?;
        Ok(cfg)
    }
}

/// A saved system state with enough context to resume or plan against it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SnapshotFile {
    pub format_version: u32,
    pub dom: DomainSpec,
    pub params: PhysicalParams,
    pub state: diskgas::dynamics::SystemState,
}

impl SnapshotFile {
    pub fn load(path: &Path) -> Result<SnapshotFile> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading state {}", path.display()))?;
        let snap: SnapshotFile =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if snap.format_version != SNAPSHOT_FORMAT_VERSION {
            bail!(
                "snapshot format version {} unsupported",
                snap.format_version
            );
        }
        Ok(snap)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", path.display()))
    }
}
