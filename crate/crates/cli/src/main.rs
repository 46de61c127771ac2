//! Command-line driver: runs, equilibrium verification, planners, and
//! derivative checks. Exit codes are a stable contract:
//! 0 pass, 1 test or objective failure, 2 dynamics halt, 3 config error.

mod config;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use config::{ConfigFile, SnapshotFile, SNAPSHOT_FORMAT_VERSION};
use diskgas::control::path::PathStyle;
use diskgas::control::{
    execute_plan, plan_flush, plan_set_disk_state, plan_set_omega, proper_path_from,
    validate_proper_path, PlanError,
};
use diskgas::dynamics::{is_trapped, DiskState, SystemState};
use diskgas::ensemble::{
    equilibrium_mean_count, run_battery, run_ensemble, stationary_omega_variance,
    stationary_velocity_variance,
};
use diskgas::geometry::DomainSpec;
use diskgas::jacobian::{
    disk_response_rank_check, injection_jacobian_check, on_locus_input, DiskResponseInput,
    InjectionCoords,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_HALT: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(
    name = "diskgas",
    version,
    about = "Disk-chain gas simulator and planners"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated simulations, writing event logs and snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $DISKGAS_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional initial state file used by every replica.
        #[arg(long)]
        initial_state: Option<PathBuf>,
    },
    /// Run the equilibrium steady-state battery.
    VerifyEquilibrium {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base significance level, Bonferroni-split across the battery.
        #[arg(long, default_value_t = 1e-3)]
        level: f64,
    },
    /// Plan and execute a disk spin change.
    PlanOmega {
        #[arg(long)]
        disk: usize,
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = 1)]
        n_disks: usize,
        #[arg(long, default_value_t = 0.3)]
        radius: f64,
        /// Comma-separated initial disk angular velocities.
        #[arg(long)]
        disk_omegas: Option<String>,
        /// Write the plan (a JSON array of timed injections) here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional config file supplying the planner section (speed cap,
        /// retry cap).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plan and execute a full (phi, omega) disk-state change.
    PlanState {
        #[arg(long)]
        disk: usize,
        #[arg(long, allow_negative_numbers = true)]
        phi: f64,
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = 1)]
        n_disks: usize,
        #[arg(long, default_value_t = 0.3)]
        radius: f64,
        #[arg(long)]
        disk_omegas: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plan and execute a flush of a saved state to the empty cell.
    Flush {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build and validate an exit path from a disk rim point.
    Path {
        #[arg(long)]
        disk: usize,
        /// Angular position of the start point on the rim, radians.
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        n_disks: usize,
        #[arg(long, default_value_t = 0.3)]
        radius: f64,
    },
    /// Verify the analytic injection/disk-response derivatives numerically.
    CheckJacobians {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("DISKGAS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn plan_error_json(e: &PlanError) -> serde_json::Value {
    let code = match e {
        PlanError::Infeasible(_) => "infeasible",
        PlanError::BudgetTooTight { .. } => "budget_too_tight",
        PlanError::PlanSearchExhausted { .. } => "plan_search_exhausted",
        PlanError::NotAdmissible(_) => "not_admissible",
        PlanError::Dynamics(_) => "dynamics",
    };
    json!({ "error": { "code": code, "message": e.to_string() } })
}

fn planner_config(config: &Option<PathBuf>) -> Result<diskgas::control::PlannerConfig> {
    Ok(match config {
        Some(path) => ConfigFile::load(path)?.planner.to_planner_config(),
        None => diskgas::control::PlannerConfig::default(),
    })
}

fn parse_omegas(n: usize, flag: &Option<String>) -> Result<Vec<f64>> {
    match flag {
        None => Ok(vec![0.0; n]),
        Some(s) => {
            let vals: Vec<f64> = s
                .split(',')
                .map(|x| x.trim().parse::<f64>().context("parsing --disk-omegas"))
                .collect::<Result<_>>()?;
            anyhow::ensure!(vals.len() == n, "--disk-omegas needs {n} values");
            Ok(vals)
        }
    }
}

struct ReplicaRun {
    injections: u64,
    exits: u64,
    tangential_stops: u64,
    final_state: SystemState,
    halted: Option<diskgas::dynamics::HaltReason>,
}

/// Replica run that can start from a resident state. The empty start defers
/// to the library runner but additionally carries the final state out.
fn run_replica_with_initial(
    cfg: &diskgas::ensemble::RunConfig,
    replica: usize,
    initial: Option<SystemState>,
    on_event: &mut dyn FnMut(&diskgas::dynamics::EventRecord),
) -> Result<ReplicaRun> {
    use diskgas::baths::{stream_rng, BathStream, MergedBaths};
    use diskgas::dynamics::{evolve, EventKind, EvolveOutcome};
    use diskgas::ensemble::bath_stream_ids;

    let state0 = initial.unwrap_or_else(|| SystemState::empty(&cfg.dom));
    let (ls, rs) = bath_stream_ids(replica);
    let left = BathStream::new(cfg.left.clone(), stream_rng(cfg.seed, ls), state0.time);
    let right = BathStream::new(cfg.right.clone(), stream_rng(cfg.seed, rs), state0.time);
    let mut merged = MergedBaths::new(left, right).peekable();
    let mut state = state0;
    let mut injections = 0;
    let mut exits = 0;
    let mut tangential_stops = 0;
    let outcome = evolve(
        &mut state,
        &cfg.dom,
        &cfg.params,
        &mut merged,
        cfg.t_end,
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
    Ok(ReplicaRun {
        injections,
        exits,
        tangential_stops,
        final_state: state,
        halted: match outcome {
            EvolveOutcome::Halted(r) => Some(r),
            EvolveOutcome::Completed => None,
        },
    })
}

fn cmd_simulate(config: &Path, out: Option<PathBuf>, initial_state: Option<PathBuf>) -> Result<u8> {
    let cfg_file = ConfigFile::load(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let cfg = cfg_file.to_run_config(base)?;
    let dir = out_dir(out);
    std::fs::create_dir_all(&dir)?;

    let initial = match &initial_state {
        Some(p) => {
            let snap = SnapshotFile::load(p)?;
            anyhow::ensure!(
                snap.dom == cfg.dom && snap.params == cfg.params,
                "initial state geometry/physics differ from the config"
            );
            Some(snap.state)
        }
        None => None,
    };

    let mut halted_any = false;
    let mut replica_summaries = Vec::new();
    for r in 0..cfg.replicas {
        let log_path = dir.join(format!("events-r{r}.jsonl"));
        let mut writer = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
        let run = run_replica_with_initial(&cfg, r, initial.clone(), &mut |rec| {
            serde_json::to_writer(&mut writer, rec).expect("log write");
            writer.write_all(b"\n").expect("log write");
        })?;
        writer.flush()?;
        SnapshotFile {
            format_version: SNAPSHOT_FORMAT_VERSION,
            dom: cfg.dom,
            params: cfg.params,
            state: run.final_state.clone(),
        }
        .save(&dir.join(format!("final-r{r}.json")))?;
        let trapped = run
            .final_state
            .particles
            .iter()
            .filter(|p| is_trapped(p, &cfg.dom))
            .count();
        halted_any |= run.halted.is_some();
        replica_summaries.push(json!({
            "replica": r,
            "injections": run.injections,
            "exits": run.exits,
            "tangential_stops": run.tangential_stops,
            "final_count": run.final_state.particle_count(),
            "trapped_particles": trapped,
            "halted": run.halted,
        }));
    }

    let summary = json!({
        "format_version": 1,
        "seed": cfg.seed,
        "seed_splitting": "chacha8 streams: replica r uses 4r (left bath) and 4r+1 (right bath)",
        "t_end": cfg.t_end,
        "burn_in": cfg.burn_in,
        "sample_interval": cfg.sample_interval,
        "replicas": replica_summaries,
    });
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(if halted_any { EXIT_HALT } else { EXIT_PASS })
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    Ok(())
}

fn histogram_vs_normal(xs: &[f64], sd: f64) -> Vec<Vec<f64>> {
    if xs.is_empty() {
        return Vec::new();
    }
    let lo = -4.0 * sd;
    let bins = 61usize;
    let w = 8.0 * sd / bins as f64;
    let mut rows = Vec::new();
    for b in 0..bins {
        let x0 = lo + b as f64 * w;
        let count = xs.iter().filter(|&&x| x >= x0 && x < x0 + w).count() as f64;
        let density = count / (xs.len() as f64 * w);
        let center = x0 + 0.5 * w;
        let expected = (-0.5 * (center / sd) * (center / sd)).exp()
            / (sd * (2.0 * std::f64::consts::PI).sqrt());
        rows.push(vec![center, density, expected]);
    }
    rows
}

fn cmd_verify(config: &Path, out: Option<PathBuf>, level: f64) -> Result<u8> {
    let cfg_file = ConfigFile::load(config)?;
    let Some((rate, temperature)) = cfg_file.equilibrium_preset() else {
        anyhow::bail!(
            "verify-equilibrium needs the equal-bath equilibrium preset; \
             the count and marginal laws are only stated for it"
        );
    };
    let base = config.parent().unwrap_or(Path::new("."));
    let cfg = cfg_file.to_run_config(base)?;
    let dir = out_dir(out);
    std::fs::create_dir_all(&dir)?;

    let run = run_ensemble(&cfg)?;
    let lambda = equilibrium_mean_count(&cfg.dom, rate, cfg.params.mass, temperature);
    let theta = cfg.params.moment_of_inertia(cfg.dom.disk_radius);
    let report = run_battery(
        &run,
        &cfg.dom,
        lambda,
        stationary_velocity_variance(temperature, cfg.params.mass),
        stationary_omega_variance(temperature, theta),
        level,
    )?;

    let mut reports_file =
        std::io::BufWriter::new(std::fs::File::create(dir.join("reports.jsonl"))?);
    for r in &report.reports {
        serde_json::to_writer(&mut reports_file, r)?;
        reports_file.write_all(b"\n")?;
    }
    reports_file.flush()?;
    std::fs::write(
        dir.join("battery.json"),
        serde_json::to_string_pretty(&json!({
            "format_version": 1,
            "battery": &report,
        }))?,
    )?;

    let counts: Vec<u64> = run.thinned.iter().map(|s| s.count as u64).collect();
    let kmax = counts.iter().copied().max().unwrap_or(0) as usize;
    let rows: Vec<Vec<f64>> = (0..=kmax + 2)
        .map(|k| {
            let obs = counts.iter().filter(|&&c| c as usize == k).count() as f64;
            let exp = counts.len() as f64 * diskgas::stats::poisson_pmf(k as u64, lambda);
            vec![k as f64, obs, exp]
        })
        .collect();
    write_csv(&dir.join("hist-count.csv"), "k,observed,expected", &rows)?;

    for j in 0..cfg.dom.n_disks {
        let omegas: Vec<f64> = run.thinned.iter().map(|s| s.disks[j].omega).collect();
        let sd = stationary_omega_variance(temperature, theta).sqrt();
        write_csv(
            &dir.join(format!("hist-omega-disk{}.csv", j + 1)),
            "bin_center,observed_density,expected_density",
            &histogram_vs_normal(&omegas, sd),
        )?;
    }
    let vx: Vec<f64> = run
        .thinned
        .iter()
        .flat_map(|s| s.particles.iter().map(|(_, v)| v.x))
        .collect();
    write_csv(
        &dir.join("hist-vx.csv"),
        "bin_center,observed_density,expected_density",
        &histogram_vs_normal(
            &vx,
            stationary_velocity_variance(temperature, cfg.params.mass).sqrt(),
        ),
    )?;

    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.all_pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan_omega(
    disk: usize,
    omega: f64,
    budget: f64,
    n_disks: usize,
    radius: f64,
    disk_omegas: &Option<String>,
    out: Option<PathBuf>,
    config: &Option<PathBuf>,
) -> Result<u8> {
    let dom = DomainSpec::new(n_disks, radius).map_err(|e| anyhow::anyhow!(e))?;
    let params = diskgas::dynamics::PhysicalParams::new(1.0, 1.0).unwrap();
    let cfg = planner_config(config)?;
    let omegas = parse_omegas(n_disks, disk_omegas)?;
    let state = SystemState::new(
        0.0,
        vec![],
        omegas.iter().map(|&w| DiskState::new(0.0, w)).collect(),
    );
    let (plan, meta) = match plan_set_omega(disk, omega, budget, &state, &dom, &params, &cfg) {
        Ok(p) => p,
        Err(e) => {
            println!("{}", plan_error_json(&e));
            return Ok(EXIT_FAIL);
        }
    };
    let (final_state, report, _) = execute_plan(&state, &dom, &params, &plan)?;
    if report.halted.is_some() {
        return Ok(EXIT_HALT);
    }
    let achieved = final_state.disks[disk - 1].omega;
    let ok = (achieved - omega).abs() <= 1e-9
        && report.roster.get(&disk) == Some(&1)
        && report.roster.keys().all(|&d| d <= disk)
        && report.remaining_particles == 0;
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&plan.injections)?)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "target_omega": omega,
            "achieved_omega": achieved,
            "abs_error": (achieved - omega).abs(),
            "roster": report.roster,
            "touch_time": meta.touch_time,
            "injections": plan.injections.len(),
            "max_speed": plan.max_speed,
            "pass": ok,
        }))?
    );
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan_state(
    disk: usize,
    phi: f64,
    omega: f64,
    budget: f64,
    n_disks: usize,
    radius: f64,
    disk_omegas: &Option<String>,
    out: Option<PathBuf>,
    config: &Option<PathBuf>,
) -> Result<u8> {
    let dom = DomainSpec::new(n_disks, radius).map_err(|e| anyhow::anyhow!(e))?;
    let params = diskgas::dynamics::PhysicalParams::new(1.0, 1.0).unwrap();
    let cfg = planner_config(config)?;
    let omegas = parse_omegas(n_disks, disk_omegas)?;
    let state = SystemState::new(
        0.0,
        vec![],
        omegas.iter().map(|&w| DiskState::new(0.0, w)).collect(),
    );
    let dsp = match plan_set_disk_state(disk, phi, omega, budget, &state, &dom, &params, &cfg) {
        Ok(p) => p,
        Err(e) => {
            println!("{}", plan_error_json(&e));
            return Ok(EXIT_FAIL);
        }
    };
    let (final_state, report, _) = execute_plan(&state, &dom, &params, &dsp.plan)?;
    if report.halted.is_some() {
        return Ok(EXIT_HALT);
    }
    let d = &final_state.disks[disk - 1];
    let phi_err = {
        let e = (d.phi - phi).rem_euclid(std::f64::consts::TAU);
        e.min(std::f64::consts::TAU - e)
    };
    let ok = phi_err <= 1e-6 && (d.omega - omega).abs() <= 1e-9 && report.remaining_particles == 0;
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&dsp.plan.injections)?)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "target": { "phi": phi, "omega": omega },
            "achieved": { "phi": d.phi, "omega": d.omega },
            "phi_error": phi_err,
            "intermediate_omega": dsp.intermediate_omega,
            "wait": dsp.wait,
            "pass": ok,
        }))?
    );
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_flush(
    state_path: &Path,
    seed: u64,
    out: Option<PathBuf>,
    config: &Option<PathBuf>,
) -> Result<u8> {
    let snap = SnapshotFile::load(state_path)?;
    let cfg = planner_config(config)?;
    let flush = match plan_flush(&snap.state, &snap.dom, &snap.params, &cfg, seed) {
        Ok(f) => f,
        Err(e) => {
            println!("{}", plan_error_json(&e));
            return Ok(EXIT_FAIL);
        }
    };
    let (final_state, report, _) = execute_plan(&snap.state, &snap.dom, &snap.params, &flush.plan)?;
    if report.halted.is_some() {
        return Ok(EXIT_HALT);
    }
    let ok = final_state.particle_count() == 0 && report.tangential_stops == 0;
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&flush.plan.injections)?)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "residents": snap.state.particle_count(),
            "injections": flush.plan.injections.len(),
            "settles_by": flush.settles_by,
            "retries": flush.retries,
            "final_count": final_state.particle_count(),
            "pass": ok,
        }))?
    );
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_path(disk: usize, theta: f64, n_disks: usize, radius: f64) -> Result<u8> {
    let dom = DomainSpec::new(n_disks, radius).map_err(|e| anyhow::anyhow!(e))?;
    let path = match proper_path_from(disk, theta, &dom, &PathStyle::default()) {
        Ok(p) => p,
        Err(e) => {
            println!("{}", plan_error_json(&e));
            return Ok(EXIT_FAIL);
        }
    };
    let (ok, violations) = validate_proper_path(&path, &dom);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "path": path,
            "valid": ok,
            "violations": violations,
        }))?
    );
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_check_jacobians(samples: usize, out: Option<PathBuf>) -> Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(12345);
    let mut rows = Vec::new();
    let mut max_disc = 0.0f64;
    let t = 2.0;
    for i in 0..samples {
        let c = InjectionCoords {
            tau: rng.random_range(0.05..t - 0.05),
            xi: rng.random_range(-1.0..1.0),
            delta: rng.random_range(-1.4..1.4),
            s: rng.random_range(0.1..10.0),
        };
        let check = injection_jacobian_check(&c, t, 1e-5);
        max_disc = max_disc.max(check.discrepancy);
        rows.push(vec![
            i as f64,
            check.analytic,
            check.numeric,
            check.discrepancy,
        ]);
    }

    let r = 0.5;
    let mut min_off_ratio = f64::INFINITY;
    let mut max_on_ratio = 0.0f64;
    let rank_samples = (samples / 10).max(20);
    let mut done = 0;
    while done < rank_samples {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let v_perp = rng.random_range(0.3..4.0);
        let v_t = rng.random_range(-3.0..3.0);
        let omega = rng.random_range(-3.0..3.0);
        let n = diskgas::geometry::Vec2::new(theta.cos(), theta.sin());
        let tangent = diskgas::geometry::Vec2::new(n.y, -n.x);
        let v = tangent.scale(v_t) - n.scale(v_perp);
        let q = n.scale(r) - v.scale(0.2);
        let input = DiskResponseInput {
            x: q.x,
            y: q.y,
            vx: v.x,
            vy: v.y,
            phi: 0.3,
            omega,
        };
        let Ok(check) = disk_response_rank_check(&input, r, 0.3, 1e-6, 1e-9) else {
            continue;
        };
        if check.locus_gap < 0.1 {
            continue;
        }
        min_off_ratio = min_off_ratio.min(check.sv_small / check.sv_large);
        done += 1;
    }
    for i in 0..rank_samples {
        let input = on_locus_input(
            0.1 + 0.05 * i as f64,
            -1.5 + 0.03 * i as f64,
            1.0,
            0.2,
            r,
            0.3,
        );
        let check = disk_response_rank_check(&input, r, 0.3, 1e-6, 1e-9)?;
        max_on_ratio = max_on_ratio.max(check.sv_small / check.sv_large);
    }

    if let Some(path) = out {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "sample,analytic_det,numeric_det,discrepancy")?;
        for row in &rows {
            writeln!(f, "{},{},{},{}", row[0], row[1], row[2], row[3])?;
        }
    }
    let separation = min_off_ratio / max_on_ratio.max(1e-300);
    let ok = max_disc <= 1e-6 && separation >= 1e4;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "samples": samples,
            "max_determinant_discrepancy": max_disc,
            "min_off_locus_sv_ratio": min_off_ratio,
            "max_on_locus_sv_ratio": max_on_ratio,
            "rank_separation": separation,
            "pass": ok,
        }))?
    );
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            initial_state,
        } => cmd_simulate(&config, out, initial_state),
        Command::VerifyEquilibrium { config, out, level } => cmd_verify(&config, out, level),
        Command::PlanOmega {
            disk,
            omega,
            budget,
            n_disks,
            radius,
            disk_omegas,
            out,
            config,
        } => cmd_plan_omega(
            disk,
            omega,
            budget,
            n_disks,
            radius,
            &disk_omegas,
            out,
            &config,
        ),
        Command::PlanState {
            disk,
            phi,
            omega,
            budget,
            n_disks,
            radius,
            disk_omegas,
            out,
            config,
        } => cmd_plan_state(
            disk,
            phi,
            omega,
            budget,
            n_disks,
            radius,
            &disk_omegas,
            out,
            &config,
        ),
        Command::Flush {
            state,
            seed,
            out,
            config,
        } => cmd_flush(&state, seed, out, &config),
        Command::Path {
            disk,
            theta,
            n_disks,
            radius,
        } => cmd_path(disk, theta, n_disks, radius),
        Command::CheckJacobians { samples, out } => cmd_check_jacobians(samples, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
