use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hamrom::metrics::RomReport;
use hamrom::rom::RomVariant;
use hamrom::xp::{
    default_mu_grid, format_float, mu_sweep, run_experiment, run_fom, sweep_argmin, tail_bound_check,
    write_energy_csv, write_sweep_csv, write_tail_csv, ExperimentConfig, RomSpec,
};

#[derive(Parser)]
#[command(name = "hamrom", version, about = "Structure-preserving POD reduced-order models for Hamiltonian PDEs")]
struct Cli {
    /// Worker threads for parallel ROM runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full-order model and write its energy series.
    Fom(Common),
    /// Run the ROMs listed in the config, or the one given by --variant/--r/--mu.
    Rom {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        variant: Option<RomVariant>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Error of one ROM variant over a list of gradient weights.
    SweepMu {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "sp0")]
        variant: RomVariant,
        #[arg(long)]
        r: usize,
        /// Comma-separated weights; defaults to the system's standard grid.
        #[arg(long, value_delimiter = ',')]
        mu: Vec<f64>,
    },
    /// Reproduce one of the comparison tables (1: wave r=5, 2: KdV r=40).
    Table {
        #[arg(long)]
        table_id: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Integrated SP-ROM-0 error against the POD singular-value tail.
    TailCheck {
        #[command(flatten)]
        common: Common,
        /// Comma-separated basis sizes.
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
        r: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match cli.command {
        Command::Fom(common) => fom(common.load()?),
        Command::Rom { common, variant, r, mu } => rom(common.load()?, variant, r, mu),
        Command::SweepMu { common, variant, r, mu } => sweep(common.load()?, variant, r, mu),
        Command::Table { table_id, out, cache } => {
            let mut cfg = ExperimentConfig::table(table_id)?;
            cfg.output_dir = out;
            cfg.cache_dir = cache;
            print_reports(&run_experiment(&cfg)?.reports());
            Ok(())
        }
        Command::TailCheck { common, r } => tail(common.load()?, &r),
    }
}

fn fom(mut cfg: ExperimentConfig) -> Result<()> {
    cfg.fom_only = true;
    cfg.roms.clear();
    let result = run_experiment(&cfg)?;
    let traj = &result.fom.trajectory;
    println!("steps           {}", traj.steps_total);
    println!("H0              {}", format_float(traj.energies[0]));
    println!("max drift       {:e}", traj.energy_drift());
    println!("max Picard its  {}", traj.max_picard_iterations);
    println!("wall time       {:.3} s", result.fom.wall_time.as_secs_f64());
    Ok(())
}

fn rom(mut cfg: ExperimentConfig, variant: Option<RomVariant>, r: Option<usize>, mu: Option<f64>) -> Result<()> {
    match (variant, r) {
        (Some(variant), Some(r)) => {
            cfg.roms = vec![RomSpec {
                variant,
                r,
                mu: mu.unwrap_or(0.0),
            }]
        }
        (None, None) if mu.is_none() => {}
        _ => bail!("--variant and --r must be given together (--mu is optional)"),
    }
    cfg.fom_only = false;
    let reports = run_experiment(&cfg)?.reports();
    print_reports(&reports);
    if reports.iter().any(RomReport::is_failed) {
        bail!("some ROM runs failed");
    }
    Ok(())
}

fn sweep(cfg: ExperimentConfig, variant: RomVariant, r: usize, mu: Vec<f64>) -> Result<()> {
    let grid = if mu.is_empty() { default_mu_grid(cfg.system) } else { mu };
    let fom = run_fom(&cfg)?;
    let points = mu_sweep(&cfg, &fom, &grid, variant, r)?;
    println!("{:>24} {:>24}", "mu", "e_inf");
    for p in &points {
        match &p.failure {
            None => println!("{:>24} {:>24}", format_float(p.mu), format_float(p.e_inf)),
            Some(reason) => println!("{:>24} failed: {reason}", format_float(p.mu)),
        }
    }
    if let Some(best) = sweep_argmin(&points) {
        println!("argmin mu = {} (e_inf = {})", best.mu, best.e_inf);
    }
    if let Some(dir) = &cfg.output_dir {
        ensure_dir(dir)?;
        write_sweep_csv(&dir.join(format!("sweep_{variant}_r{r}.csv")), &points)?;
        write_energy_csv(&dir.join("energy_fom.csv"), cfg.dt, &fom.trajectory.energies)?;
    }
    Ok(())
}

fn tail(cfg: ExperimentConfig, r_list: &[usize]) -> Result<()> {
    let fom = run_fom(&cfg)?;
    let rows = tail_bound_check(&cfg, &fom, r_list)?;
    println!("{:>4} {:>24} {:>24} {:>24}", "r", "integrated_error", "sigma_tail", "ratio");
    for row in &rows {
        println!(
            "{:>4} {:>24} {:>24} {:>24}",
            row.r,
            format_float(row.integrated_error),
            format_float(row.sigma_tail),
            format_float(row.ratio)
        );
    }
    if let Some(dir) = &cfg.output_dir {
        ensure_dir(dir)?;
        write_tail_csv(&dir.join("tail_check.csv"), &rows)?;
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn print_reports(reports: &[RomReport]) {
    println!(
        "{:<9} {:>4} {:>8} {:>12} {:>14} {:>14} {:>11} {:>12} {:>9}",
        "variant", "r", "mu", "e_inf", "H0", "Hfinal", "max_drift", "offset", "wall_ms"
    );
    for rep in reports {
        if let Some(reason) = &rep.failure {
            println!("{:<9} {:>4} {:>8} failed: {reason}", rep.variant.label(), rep.r, rep.mu);
            continue;
        }
        println!(
            "{:<9} {:>4} {:>8} {:>12.5e} {:>14.8} {:>14.8} {:>11.3e} {:>12.4e} {:>9}",
            rep.variant.label(),
            rep.r,
            rep.mu,
            rep.e_inf,
            rep.energy_initial,
            rep.energy_final,
            rep.max_energy_drift,
            rep.energy_offset_vs_fom,
            rep.wall_time.as_millis()
        );
    }
}
