//! CSV writers. Floats use 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{SweepPoint, TailRow};
use crate::error::Result;
use crate::metrics::RomReport;

/// Round-trippable float with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_reports_csv(path: &Path, reports: &[RomReport]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "variant,r,mu,e_inf,H0,Hfinal,max_drift,offset,wall_ms")?;
    for rep in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            rep.variant,
            rep.r,
            format_float(rep.mu),
            format_float(rep.e_inf),
            format_float(rep.energy_initial),
            format_float(rep.energy_final),
            format_float(rep.max_energy_drift),
            format_float(rep.energy_offset_vs_fom),
            rep.wall_time.as_millis()
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `t,H` rows, one per time step.
pub fn write_energy_csv(path: &Path, dt: f64, energies: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,H")?;
    for (k, h) in energies.iter().enumerate() {
        writeln!(w, "{},{}", format_float(k as f64 * dt), format_float(*h))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "mu,e_inf")?;
    for p in points {
        writeln!(w, "{},{}", format_float(p.mu), format_float(p.e_inf))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tail_csv(path: &Path, rows: &[TailRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "r,integrated_error,sigma_tail,ratio")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.r,
            format_float(row.integrated_error),
            format_float(row.sigma_tail),
            format_float(row.ratio)
        )?;
    }
    w.flush()?;
    Ok(())
}
