//! Error and energy diagnostics of reduced trajectories against the full model.
//!
//! Errors are sampled at the recorded times; both trajectories must share
//! them.

use std::time::Duration;

use crate::error::{invalid, Result};
use crate::integrate::Trajectory;
use crate::rom::RomVariant;

/// `max_{k≥0} max_i √((Δu)ᵢ² + (Δv)ᵢ²)` on stacked `(u, v)` states.
pub fn e_inf_wave(fom: &Trajectory, rom: &Trajectory) -> Result<f64> {
    check_shared_grid(fom, rom)?;
    if fom.states.rows() % 2 != 0 {
        return Err(invalid("wave states must have an even length"));
    }
    let n = fom.states.rows() / 2;
    let mut worst = 0.0_f64;
    for k in 0..fom.recorded() {
        for i in 0..n {
            let du = fom.states[(i, k)] - rom.states[(i, k)];
            let dv = fom.states[(n + i, k)] - rom.states[(n + i, k)];
            worst = worst.max(du.hypot(dv));
        }
    }
    Ok(worst)
}

/// `max_{k>0} max_i |Δuᵢ|`; the initial record is excluded.
pub fn e_inf_scalar(fom: &Trajectory, rom: &Trajectory) -> Result<f64> {
    check_shared_grid(fom, rom)?;
    let mut worst = 0.0_f64;
    for k in 1..fom.recorded() {
        for i in 0..fom.states.rows() {
            worst = worst.max((fom.states[(i, k)] - rom.states[(i, k)]).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `max_k |H_r(t_k) − H_r(t₀)|`.
    pub drift: f64,
    /// `H_r(t₀) − H(t₀)`.
    pub offset: f64,
    /// Time average of `H_r(t_k) − H(t_k)` over all steps.
    pub mean_offset: f64,
}

pub fn energy_report(rom: &Trajectory, fom: &Trajectory) -> Result<EnergyReport> {
    if rom.energies.is_empty() || rom.energies.len() != fom.energies.len() {
        return Err(invalid(format!(
            "energy series lengths differ: {} vs {}",
            rom.energies.len(),
            fom.energies.len()
        )));
    }
    let diff_sum: f64 = rom.energies.iter().zip(&fom.energies).map(|(a, b)| a - b).sum();
    Ok(EnergyReport {
        drift: rom.energy_drift(),
        offset: rom.energies[0] - fom.energies[0],
        mean_offset: diff_sum / rom.energies.len() as f64,
    })
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct RomReport {
    pub variant: RomVariant,
    pub r: usize,
    pub mu: f64,
    pub e_inf: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub max_energy_drift: f64,
    pub energy_offset_vs_fom: f64,
    pub wall_time: Duration,
    /// Set when the run failed; numeric fields are NaN then.
    pub failure: Option<String>,
}

impl RomReport {
    pub fn failed(variant: RomVariant, r: usize, mu: f64, reason: String, wall_time: Duration) -> Self {
        Self {
            variant,
            r,
            mu,
            e_inf: f64::NAN,
            energy_initial: f64::NAN,
            energy_final: f64::NAN,
            max_energy_drift: f64::NAN,
            energy_offset_vs_fom: f64::NAN,
            wall_time,
            failure: Some(reason),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }
}

fn check_shared_grid(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.states.rows() != b.states.rows() || a.recorded() != b.recorded() {
        return Err(invalid(format!(
            "trajectories differ in shape: {}x{} vs {}x{}",
            a.states.rows(),
            a.recorded(),
            b.states.rows(),
            b.recorded()
        )));
    }
    let mismatch = a
        .times
        .iter()
        .zip(&b.times)
        .any(|(s, t)| (s - t).abs() > 1e-9 * (1.0 + s.abs()));
    if mismatch {
        return Err(invalid("trajectories are recorded at different times"));
    }
    Ok(())
}
