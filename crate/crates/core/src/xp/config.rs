use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::integrate::{DEFAULT_PICARD_MAX_ITER, DEFAULT_PICARD_TOL};
use crate::rom::RomVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    Wave,
    Kdv,
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wave" => Ok(SystemKind::Wave),
            "kdv" => Ok(SystemKind::Kdv),
            other => Err(Error::Config(format!("unknown system '{other}'"))),
        }
    }
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SystemKind::Wave => "wave",
            SystemKind::Kdv => "kdv",
        })
    }
}

/// One reduced model to build: variant, basis size per field, gradient weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomSpec {
    pub variant: RomVariant,
    pub r: usize,
    pub mu: f64,
}

impl FromStr for RomSpec {
    type Err = Error;

    /// `variant:r` or `variant:r:mu`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Config(format!("ROM entry '{s}' is not variant:r[:mu]"));
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad());
        }
        let variant = parts[0].parse().map_err(|_| bad())?;
        let r = parts[1].trim().parse().map_err(|_| bad())?;
        let mu = match parts.get(2) {
            Some(m) => m.trim().parse().map_err(|_| bad())?,
            None => 0.0,
        };
        Ok(Self { variant, r, mu })
    }
}

impl std::fmt::Display for RomSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.variant, self.r, self.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    /// Wave speed.
    pub c: f64,
    pub alpha: f64,
    pub rho: f64,
    pub nu: f64,
    pub n: usize,
    pub length: f64,
    pub origin: f64,
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Snapshot every `stride` steps.
    pub stride: usize,
    /// Compare trajectories every `error_stride` steps.
    pub error_stride: usize,
    pub roms: Vec<RomSpec>,
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub fom_only: bool,
    /// Reserved; nothing in the pipeline is random.
    pub seed: u64,
}

impl ExperimentConfig {
    /// Linear wave on `[0, 1]`, `n = 500`, `c = 0.1`, `dt = 0.01`, `T = 50`.
    pub fn wave() -> Self {
        Self {
            system: SystemKind::Wave,
            c: 0.1,
            alpha: 0.0,
            rho: 0.0,
            nu: 0.0,
            n: 500,
            length: 1.0,
            origin: 0.0,
            dt: 0.01,
            t_end: 50.0,
            picard_tol: DEFAULT_PICARD_TOL,
            picard_max_iter: DEFAULT_PICARD_MAX_ITER,
            stride: 50,
            error_stride: 1,
            roms: Vec::new(),
            output_dir: None,
            cache_dir: None,
            fom_only: false,
            seed: 0,
        }
    }

    /// KdV soliton on `[−20, 20]`, `n = 2000`, `α = −6`, `ν = −1`, `dt = 0.02`, `T = 20`.
    pub fn kdv() -> Self {
        Self {
            system: SystemKind::Kdv,
            c: 0.0,
            alpha: -6.0,
            rho: 0.0,
            nu: -1.0,
            n: 2000,
            length: 40.0,
            origin: -20.0,
            dt: 0.02,
            t_end: 20.0,
            stride: 5,
            ..Self::wave()
        }
    }

    /// All four variants at `r = 5`, `μ = 0` on the wave setup.
    pub fn table1() -> Self {
        Self {
            roms: all_variants(5),
            ..Self::wave()
        }
    }

    /// All four variants at `r = 40`, `μ = 0` on the KdV setup.
    pub fn table2() -> Self {
        Self {
            roms: all_variants(40),
            ..Self::kdv()
        }
    }

    pub fn table(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Self::table1()),
            2 => Ok(Self::table2()),
            other => Err(Error::Config(format!("no table preset {other}; expected 1 or 2"))),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. The `system` key
    /// selects the defaults that the remaining keys override.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            entries.push((lineno + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let system = entries
            .iter()
            .find(|(_, k, _)| k == "system")
            .ok_or_else(|| Error::Config("missing required key 'system'".into()))?
            .2
            .parse::<SystemKind>()?;
        let mut cfg = match system {
            SystemKind::Wave => Self::wave(),
            SystemKind::Kdv => Self::kdv(),
        };
        let mut seen = std::collections::HashSet::new();
        for (lineno, key, value) in &entries {
            if !seen.insert(key.clone()) {
                return Err(Error::Config(format!("line {lineno}: duplicate key '{key}'")));
            }
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {lineno}: {e}")))?;
        }
        cfg.validate_parameters()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("invalid value '{v}' for '{key}'"))
        }
        match key {
            "system" => {}
            "c" => self.c = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "rho" => self.rho = num(key, value)?,
            "nu" => self.nu = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "length" => self.length = num(key, value)?,
            "origin" => self.origin = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "picard_tol" => self.picard_tol = num(key, value)?,
            "picard_max_iter" => self.picard_max_iter = num(key, value)?,
            "stride" => self.stride = num(key, value)?,
            "error_stride" => self.error_stride = num(key, value)?,
            "roms" => {
                self.roms = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<RomSpec>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "cache_dir" => self.cache_dir = Some(PathBuf::from(value)),
            "fom_only" => self.fom_only = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Full check for an experiment run: parameters plus a nonempty ROM list
    /// unless `fom_only` is set.
    pub fn validate(&self) -> Result<()> {
        self.validate_parameters()?;
        if !self.fom_only && self.roms.is_empty() {
            return Err(Error::Config("no ROMs requested; set roms or fom_only = true".into()));
        }
        Ok(())
    }

    /// Checks the physical and numerical parameters and any listed ROMs.
    pub fn validate_parameters(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        match self.system {
            SystemKind::Wave if !(self.c > 0.0) => return fail(format!("wave speed c must be positive, got {}", self.c)),
            SystemKind::Kdv if self.alpha == 0.0 && self.nu == 0.0 && self.rho == 0.0 => {
                return fail("KdV needs at least one nonzero coefficient".into())
            }
            _ => {}
        }
        if self.n < 3 {
            return fail(format!("n must be at least 3, got {}", self.n));
        }
        if !(self.length > 0.0) {
            return fail(format!("length must be positive, got {}", self.length));
        }
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return fail("dt and t_end must be positive".into());
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iter == 0 {
            return fail("Picard settings must be positive".into());
        }
        if self.stride == 0 || self.error_stride == 0 {
            return fail("strides must be at least 1".into());
        }
        if self.stride % self.error_stride != 0 {
            return fail("stride must be a multiple of error_stride".into());
        }
        for spec in &self.roms {
            if spec.r == 0 || !(spec.mu >= 0.0) || !spec.mu.is_finite() {
                return fail(format!("invalid ROM entry {spec}"));
            }
        }
        Ok(())
    }

    /// Canonical description of everything that determines the full-order run.
    pub(crate) fn fom_key(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "system={};c={:e};alpha={:e};rho={:e};nu={:e};n={};length={:e};origin={:e};dt={:e};t_end={:e};picard_tol={:e};picard_max_iter={};error_stride={}",
            self.system,
            self.c,
            self.alpha,
            self.rho,
            self.nu,
            self.n,
            self.length,
            self.origin,
            self.dt,
            self.t_end,
            self.picard_tol,
            self.picard_max_iter,
            self.error_stride
        );
        s
    }
}

fn all_variants(r: usize) -> Vec<RomSpec> {
    RomVariant::ALL
        .iter()
        .map(|&variant| RomSpec { variant, r, mu: 0.0 })
        .collect()
}
