use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qwalk_scatter::scattering_core::Statistics;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticsArg {
    Boson,
    Fermion,
    Distinguishable,
}

impl From<StatisticsArg> for Statistics {
    fn from(s: StatisticsArg) -> Self {
        match s {
            StatisticsArg::Boson => Statistics::Boson,
            StatisticsArg::Fermion => Statistics::Fermion,
            StatisticsArg::Distinguishable => Statistics::Distinguishable,
        }
    }
}

/// Parameters shared by all subcommands. Every field is optional so that the same struct
/// serves as command-line flags and as the contents of a `--config` file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Interaction strength U.
    #[arg(long = "U", global = true, allow_negative_numbers = true)]
    #[serde(rename = "U")]
    pub strength: Option<f64>,
    /// Half-width(s) L of the interaction region, comma separated.
    #[arg(long = "L", global = true, value_delimiter = ',')]
    #[serde(rename = "L")]
    pub half_widths: Option<Vec<usize>>,
    /// Wavepacket half-width(s) σ, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Centre of the first wavepacket.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k1: Option<f64>,
    /// Centre of the second wavepacket.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k2: Option<f64>,
    /// σ grid as `start:stop:step` (fidelity-scan) or search range (convergence).
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Quadrature tolerance for 𝓕.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized checks and synthetic noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cross-check against the independent quadrature / time-evolution oracle.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub oracle: Option<bool>,
    /// Particle statistics.
    #[arg(long, global = true, value_enum)]
    pub statistics: Option<StatisticsArg>,
    /// Two-particle energy for j-table.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub energy: Option<f64>,
    /// Largest lattice separation for j-table.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Lattice size M of the time-evolution oracle.
    #[arg(long, global = true)]
    pub sites: Option<usize>,
    /// Free back-evolution time of the prepared packets.
    #[arg(long, global = true)]
    pub lead_time: Option<f64>,
    /// Largest tolerated probability in the outermost lattice sites.
    #[arg(long, global = true)]
    pub leak_tol: Option<f64>,
}

impl Overrides {
    /// Field-wise `self` if set, else `other`.
    fn or(self, other: Overrides) -> Overrides {
        Overrides {
            strength: self.strength.or(other.strength),
            half_widths: self.half_widths.or(other.half_widths),
            sigma: self.sigma.or(other.sigma),
            k1: self.k1.or(other.k1),
            k2: self.k2.or(other.k2),
            grid: self.grid.or(other.grid),
            tol: self.tol.or(other.tol),
            out: self.out.or(other.out),
            threads: self.threads.or(other.threads),
            seed: self.seed.or(other.seed),
            oracle: self.oracle.or(other.oracle),
            statistics: self.statistics.or(other.statistics),
            energy: self.energy.or(other.energy),
            nmax: self.nmax.or(other.nmax),
            sites: self.sites.or(other.sites),
            lead_time: self.lead_time.or(other.lead_time),
            leak_tol: self.leak_tol.or(other.leak_tol),
        }
    }
}

pub fn load_file(path: &Path) -> Result<Overrides, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Resolved parameters. Subcommand-specific defaults (L list, σ grid) stay optional here and
/// are filled in by the subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub strength: f64,
    pub half_widths: Option<Vec<usize>>,
    pub sigma: Option<Vec<f64>>,
    pub k1: f64,
    pub k2: f64,
    pub grid: Option<String>,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub oracle: bool,
    pub statistics: Statistics,
    pub energy: f64,
    pub nmax: usize,
    pub sites: usize,
    pub lead_time: f64,
    pub leak_tol: f64,
}

impl RunConfig {
    /// Flags override file values, which override defaults.
    pub fn resolve(flags: Overrides, file: Option<Overrides>) -> Result<Self, CliError> {
        let o = match file {
            Some(f) => flags.or(f),
            None => flags,
        };
        let cfg = RunConfig {
            strength: o.strength.unwrap_or(2.0 + SQRT_2),
            half_widths: o.half_widths,
            sigma: o.sigma,
            k1: o.k1.unwrap_or(PI / 4.0),
            k2: o.k2.unwrap_or(-PI / 2.0),
            grid: o.grid,
            tol: o.tol.unwrap_or(1e-6),
            out: o.out,
            threads: o.threads,
            seed: o.seed.unwrap_or(0),
            oracle: o.oracle.unwrap_or(false),
            statistics: o.statistics.unwrap_or(StatisticsArg::Boson).into(),
            energy: o.energy.unwrap_or(SQRT_2),
            nmax: o.nmax.unwrap_or(20),
            sites: o.sites.unwrap_or(256),
            lead_time: o.lead_time.unwrap_or(35.0),
            leak_tol: o.leak_tol.unwrap_or(qwalk_scatter::time_oracle::DEFAULT_LEAK_TOL),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let finite = [self.strength, self.k1, self.k2, self.tol, self.energy, self.lead_time, self.leak_tol];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Usage("parameters must be finite".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CliError::Usage(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        if let Some(s) = &self.sigma {
            if s.iter().any(|v| !(*v > 0.0)) {
                return Err(CliError::Usage("σ values must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn half_widths_or(&self, default: &[usize]) -> Vec<usize> {
        self.half_widths.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn single_half_width(&self, default: usize) -> Result<usize, CliError> {
        match self.half_widths.as_deref() {
            None => Ok(default),
            Some([l]) => Ok(*l),
            Some(_) => Err(CliError::Usage("this subcommand takes a single --L".into())),
        }
    }

    pub fn single_sigma(&self, default: f64) -> Result<f64, CliError> {
        match self.sigma.as_deref() {
            None => Ok(default),
            Some([s]) => Ok(*s),
            Some(_) => Err(CliError::Usage("this subcommand takes a single --sigma".into())),
        }
    }

    pub fn centers(&self) -> (f64, f64) {
        (self.k1, self.k2)
    }
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("grid must be start:stop:step, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if stop < start {
        return Ok(Vec::new());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}
