//! Experiment orchestration: full-order runs with an on-disk cache, ROM
//! tables, `μ` sweeps and the POD tail check, plus their CSV outputs.

mod cache;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use cache::{read_matrix, write_matrix, FORMAT_VERSION, MAGIC};
pub use config::{ExperimentConfig, RomSpec, SystemKind};
pub use output::{format_float, write_energy_csv, write_reports_csv, write_sweep_csv, write_tail_csv};

use crate::error::{invalid, Result};
use crate::hamsys::{build_kdv_fom, build_wave_fom, kdv_initial, wave_initial, GridSpec1D, PolyGradFlow};
use crate::integrate::{integrate, AvfScheme, Trajectory};
use crate::metrics::{e_inf_scalar, e_inf_wave, energy_report, RomReport};
use crate::numkernel::DenseMatrix;
use crate::pod::{collect_snapshots, compute_basis, enrich_with_ic_residual, DEFAULT_RESIDUAL_TOL};
use crate::rom::{reduce_operators, run_rom, FieldBasis, ReducedModel, RomVariant};

/// Full-order reference run shared by every ROM of an experiment.
#[derive(Debug, Clone)]
pub struct FomRun {
    pub grid: GridSpec1D,
    pub flow: Arc<PolyGradFlow>,
    pub u0: Vec<f64>,
    /// States every `error_stride` steps; the comparison baseline.
    pub trajectory: Trajectory,
    /// States every `stride` steps; the snapshot source.
    pub snapshots: Trajectory,
    pub from_cache: bool,
    pub wall_time: Duration,
}

/// Discretization and initial state of the configured system.
pub fn build_system(cfg: &ExperimentConfig) -> Result<(GridSpec1D, PolyGradFlow, Vec<f64>)> {
    let grid = GridSpec1D::new(cfg.n, cfg.length, cfg.origin)?;
    Ok(match cfg.system {
        SystemKind::Wave => (grid, build_wave_fom(cfg.c, &grid)?, wave_initial(&grid)),
        SystemKind::Kdv => (grid, build_kdv_fom(cfg.alpha, cfg.rho, cfg.nu, &grid)?, kdv_initial(&grid)),
    })
}

fn comparison_scheme(cfg: &ExperimentConfig) -> Result<AvfScheme> {
    AvfScheme::new(cfg.dt, cfg.t_end, cfg.error_stride)?.with_picard(cfg.picard_tol, cfg.picard_max_iter)
}

/// Runs the full-order model, or loads it from `cfg.cache_dir` when a
/// matching entry exists. Unreadable or mismatched entries are recomputed.
pub fn run_fom(cfg: &ExperimentConfig) -> Result<FomRun> {
    cfg.validate_parameters()?;
    let (grid, flow, u0) = build_system(cfg)?;
    let scheme = comparison_scheme(cfg)?;
    let start = Instant::now();
    let cached = cfg
        .cache_dir
        .as_deref()
        .and_then(|dir| load_cached(dir, cfg, &flow, &scheme));
    let from_cache = cached.is_some();
    let trajectory = match cached {
        Some(t) => t,
        None => {
            let t = integrate(&flow, &u0, &scheme)?;
            if let Some(dir) = &cfg.cache_dir {
                if let Err(e) = store_cached(dir, cfg, &t) {
                    warn!("could not write FOM cache: {e}");
                }
            }
            t
        }
    };
    let snapshots = trajectory.subsample(cfg.stride / cfg.error_stride)?;
    info!(
        "FOM ready ({} states, {} snapshots, cached: {from_cache})",
        trajectory.recorded(),
        snapshots.recorded()
    );
    Ok(FomRun {
        grid,
        flow: Arc::new(flow),
        u0,
        trajectory,
        snapshots,
        from_cache,
        wall_time: start.elapsed(),
    })
}

fn cache_paths(dir: &Path, cfg: &ExperimentConfig) -> (PathBuf, PathBuf) {
    let digest = Sha256::digest(format!("v{FORMAT_VERSION};{}", cfg.fom_key()).as_bytes());
    let tag: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    (
        dir.join(format!("fom-{tag}-states.hrom")),
        dir.join(format!("fom-{tag}-energy.hrom")),
    )
}

fn load_cached(dir: &Path, cfg: &ExperimentConfig, flow: &PolyGradFlow, scheme: &AvfScheme) -> Option<Trajectory> {
    let (states_path, energy_path) = cache_paths(dir, cfg);
    if !states_path.exists() {
        return None;
    }
    let steps = scheme.steps().ok()?;
    let recorded = steps / scheme.snapshot_stride + 1;
    let loaded = read_matrix(&states_path).and_then(|s| Ok((s, read_matrix(&energy_path)?)));
    match loaded {
        // Energy file: row 0 holds the per-step energies, row 1 starts with
        // the largest Picard count.
        Ok((states, meta)) if states.rows() == flow.dim() && states.cols() == recorded && meta.rows() == 2 && meta.cols() == steps + 1 => {
            Some(Trajectory {
                times: (0..recorded)
                    .map(|k| (k * scheme.snapshot_stride) as f64 * scheme.dt)
                    .collect(),
                states,
                energies: meta.row(0).to_vec(),
                steps_total: steps,
                max_picard_iterations: meta[(1, 0)] as usize,
            })
        }
        Ok(_) => {
            warn!("FOM cache {} does not match the configuration; recomputing", states_path.display());
            None
        }
        Err(e) => {
            warn!("FOM cache unreadable ({e}); recomputing");
            None
        }
    }
}

fn store_cached(dir: &Path, cfg: &ExperimentConfig, traj: &Trajectory) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (states_path, energy_path) = cache_paths(dir, cfg);
    let steps = traj.energies.len();
    let meta = DenseMatrix::from_fn(2, steps, |i, j| match (i, j) {
        (0, j) => traj.energies[j],
        (1, 0) => traj.max_picard_iterations as f64,
        _ => 0.0,
    });
    write_matrix(&states_path, &traj.states)?;
    write_matrix(&energy_path, &meta)
}

/// Per-field POD bases for one ROM specification.
pub fn build_bases(fom: &FomRun, spec: &RomSpec) -> Result<Vec<FieldBasis>> {
    let shifted = spec.variant == RomVariant::Sp2;
    let set = collect_snapshots(&fom.snapshots, &fom.flow, spec.mu, shifted)?;
    fom.flow
        .fields()
        .iter()
        .map(|rows| {
            let mut basis = compute_basis(&set.restrict(rows.clone())?, spec.r)?;
            if spec.variant == RomVariant::Sp1 {
                basis = enrich_with_ic_residual(&basis, &fom.u0[rows.clone()], DEFAULT_RESIDUAL_TOL)?;
            }
            FieldBasis::new(rows.clone(), basis)
        })
        .collect()
}

pub fn build_rom(fom: &FomRun, spec: &RomSpec) -> Result<ReducedModel> {
    reduce_operators(fom.flow.clone(), build_bases(fom, spec)?, spec.variant)
}

/// A finished ROM run with its decoded trajectory.
#[derive(Debug, Clone)]
pub struct RomRun {
    pub report: RomReport,
    pub trajectory: Trajectory,
}

/// Builds, integrates and scores one ROM against the full-order run.
pub fn run_rom_spec(cfg: &ExperimentConfig, fom: &FomRun, spec: &RomSpec) -> Result<RomRun> {
    let start = Instant::now();
    let model = build_rom(fom, spec)?;
    let traj = run_rom(&model, &fom.u0, &comparison_scheme(cfg)?)?;
    let e_inf = match cfg.system {
        SystemKind::Wave => e_inf_wave(&fom.trajectory, &traj)?,
        SystemKind::Kdv => e_inf_scalar(&fom.trajectory, &traj)?,
    };
    let energy = energy_report(&traj, &fom.trajectory)?;
    let report = RomReport {
        variant: spec.variant,
        r: spec.r,
        mu: spec.mu,
        e_inf,
        energy_initial: traj.energies[0],
        energy_final: *traj.energies.last().expect("non-empty energy series"),
        max_energy_drift: energy.drift,
        energy_offset_vs_fom: energy.offset,
        wall_time: start.elapsed(),
        failure: None,
    };
    Ok(RomRun { report, trajectory: traj })
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub fom: FomRun,
    pub runs: Vec<std::result::Result<RomRun, RomReport>>,
}

impl ExperimentResult {
    pub fn reports(&self) -> Vec<RomReport> {
        self.runs
            .iter()
            .map(|r| match r {
                Ok(run) => run.report.clone(),
                Err(failed) => failed.clone(),
            })
            .collect()
    }
}

/// Runs the FOM and every configured ROM (in parallel on the current rayon
/// pool). A failing ROM yields a failed report; the others still run.
/// Writes CSV outputs when `cfg.output_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let fom = run_fom(cfg)?;
    let runs = if cfg.fom_only {
        Vec::new()
    } else {
        cfg.roms
            .par_iter()
            .map(|spec| {
                let start = Instant::now();
                run_rom_spec(cfg, &fom, spec).map_err(|e| {
                    warn!("ROM {spec} failed: {e}");
                    RomReport::failed(spec.variant, spec.r, spec.mu, e.to_string(), start.elapsed())
                })
            })
            .collect()
    };
    let result = ExperimentResult { fom, runs };
    if let Some(dir) = &cfg.output_dir {
        write_experiment(dir, cfg, &result)?;
    }
    Ok(result)
}

fn write_experiment(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_energy_csv(&dir.join("energy_fom.csv"), cfg.dt, &result.fom.trajectory.energies)?;
    if cfg.fom_only {
        return Ok(());
    }
    write_reports_csv(&dir.join("reports.csv"), &result.reports())?;
    for run in result.runs.iter().flatten() {
        let rep = &run.report;
        let name = format!("energy_{}_r{}_mu{}.csv", rep.variant, rep.r, rep.mu);
        write_energy_csv(&dir.join(name), cfg.dt, &run.trajectory.energies)?;
    }
    Ok(())
}

/// Sweep grid used when none is given: 51 points on `[0, 0.2]` for the wave,
/// 21 points on `[0, 1]` for KdV.
pub fn default_mu_grid(system: SystemKind) -> Vec<f64> {
    let (count, top) = match system {
        SystemKind::Wave => (51, 0.2),
        SystemKind::Kdv => (21, 1.0),
    };
    (0..count).map(|k| top * k as f64 / (count - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub mu: f64,
    /// NaN when the run failed.
    pub e_inf: f64,
    pub failure: Option<String>,
}

/// One ROM build and run per `μ`, in parallel on the current rayon pool;
/// rows come back sorted by `μ`.
pub fn mu_sweep(cfg: &ExperimentConfig, fom: &FomRun, mu_grid: &[f64], variant: RomVariant, r: usize) -> Result<Vec<SweepPoint>> {
    if let Some(bad) = mu_grid.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
        return Err(invalid(format!("sweep values must be finite and non-negative, got {bad}")));
    }
    let mut points: Vec<SweepPoint> = mu_grid
        .par_iter()
        .map(|&mu| match run_rom_spec(cfg, fom, &RomSpec { variant, r, mu }) {
            Ok(run) => SweepPoint {
                mu,
                e_inf: run.report.e_inf,
                failure: None,
            },
            Err(e) => {
                warn!("sweep point mu = {mu} failed: {e}");
                SweepPoint {
                    mu,
                    e_inf: f64::NAN,
                    failure: Some(e.to_string()),
                }
            }
        })
        .collect();
    points.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    Ok(points)
}

/// Sweep point with the smallest error, ignoring failures.
pub fn sweep_argmin(points: &[SweepPoint]) -> Option<&SweepPoint> {
    points
        .iter()
        .filter(|p| p.failure.is_none())
        .min_by(|a, b| a.e_inf.total_cmp(&b.e_inf))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub r: usize,
    /// Trapezoid rule for `∫‖u − u_r‖² dt` over the compared states.
    pub integrated_error: f64,
    /// `Σ_{j>r} σⱼ²`, summed over fields.
    pub sigma_tail: f64,
    pub ratio: f64,
}

/// SP-ROM-0 (`μ = 0`) time-integrated squared error against the POD tail.
pub fn tail_bound_check(cfg: &ExperimentConfig, fom: &FomRun, r_list: &[usize]) -> Result<Vec<TailRow>> {
    r_list
        .par_iter()
        .map(|&r| {
            let spec = RomSpec {
                variant: RomVariant::Sp0,
                r,
                mu: 0.0,
            };
            let model = build_rom(fom, &spec)?;
            let traj = run_rom(&model, &fom.u0, &comparison_scheme(cfg)?)?;
            let integrated_error = integrated_squared_error(&fom.trajectory, &traj);
            let sigma_tail = model
                .bases()
                .iter()
                .map(|b| b.basis.sigma_tail(r))
                .sum::<Result<f64>>()?;
            Ok(TailRow {
                r,
                integrated_error,
                sigma_tail,
                ratio: integrated_error / sigma_tail,
            })
        })
        .collect()
}

fn integrated_squared_error(a: &Trajectory, b: &Trajectory) -> f64 {
    let sq: Vec<f64> = (0..a.recorded())
        .map(|k| {
            (0..a.states.rows())
                .map(|i| (a.states[(i, k)] - b.states[(i, k)]).powi(2))
                .sum()
        })
        .collect();
    a.times
        .windows(2)
        .zip(sq.windows(2))
        .map(|(t, e)| 0.5 * (t[1] - t[0]) * (e[0] + e[1]))
        .sum()
}
