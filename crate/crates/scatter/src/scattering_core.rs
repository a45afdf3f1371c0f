//! Finite-N S-matrix kernel and the asymptotic (N → ∞) closed forms.
//!
//! For finite N,
//!
//! ```text
//! S^N = δ(k1-p1)δ(k2-p2) [± exchange]  -  i b^2 U c_K^† T_N^{-1}(E) c_P δ(E_k - E_p)
//! ```
//!
//! with `K = k1 + k2`, `P = p1 + p2`. The smooth part depends on the momenta only through
//! the two sums and the energy.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::toeplitz_solver::{plane_wave, FactoredKernel, KernelCache};
use crate::{Result, ScatterError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Distinguishable,
    Boson,
    Fermion,
}

impl Statistics {
    /// On-diagonal amplitude factor `b`.
    pub fn b(self) -> f64 {
        match self {
            Statistics::Distinguishable => 1.0,
            Statistics::Boson => std::f64::consts::SQRT_2,
            Statistics::Fermion => 0.0,
        }
    }

    pub fn b_squared(self) -> f64 {
        match self {
            Statistics::Distinguishable => 1.0,
            Statistics::Boson => 2.0,
            Statistics::Fermion => 0.0,
        }
    }
}

/// Two-particle momenta in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumPair {
    pub p1: f64,
    pub p2: f64,
    pub statistics: Statistics,
}

impl MomentumPair {
    pub fn new(p1: f64, p2: f64, statistics: Statistics) -> Result<Self> {
        for p in [p1, p2] {
            if !(-PI..PI).contains(&p) {
                return Err(ScatterError::InvalidInput(format!(
                    "momentum {p} outside [-π, π)"
                )));
            }
        }
        if statistics != Statistics::Distinguishable && p1 >= p2 {
            return Err(ScatterError::InvalidInput(format!(
                "identical particles need p1 < p2, got ({p1}, {p2})"
            )));
        }
        Ok(Self { p1, p2, statistics })
    }

    pub fn energy(&self) -> f64 {
        2.0 * self.p1.cos() + 2.0 * self.p2.cos()
    }

    pub fn total(&self) -> f64 {
        self.p1 + self.p2
    }

    pub fn p_plus(&self) -> f64 {
        0.5 * (self.p1 + self.p2)
    }

    pub fn p_minus(&self) -> f64 {
        0.5 * (self.p1 - self.p2)
    }
}

/// Interaction strength `U`, half-width `L` (N = 2L + 1 sites) and particle statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionConfig {
    pub strength: f64,
    pub half_width: usize,
    pub statistics: Statistics,
}

impl InteractionConfig {
    pub fn new(strength: f64, half_width: usize, statistics: Statistics) -> Self {
        Self {
            strength,
            half_width,
            statistics,
        }
    }

    pub fn sites(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn b(&self) -> f64 {
        self.statistics.b()
    }
}

/// `c_K^† T^{-1} c_P` for a factored kernel.
pub fn quadratic_form(fk: &FactoredKernel, out_sum: f64, in_sum: f64) -> Complex64 {
    let l = fk.kernel.half_width;
    let x = fk.solve(&plane_wave(in_sum, l));
    plane_wave(out_sum, l)
        .iter()
        .zip(&x)
        .map(|(c, xi)| c.conj() * xi)
        .sum()
}

/// `b^2 U c_K^† T_N^{-1}(E) c_P`: the coefficient of `-i δ(E_k - E_p)` in `S^N`.
pub fn finite_kernel(
    out_sum: f64,
    in_sum: f64,
    energy: f64,
    cfg: &InteractionConfig,
    cache: &KernelCache,
) -> Result<Complex64> {
    let b2 = cfg.statistics.b_squared();
    if cfg.strength == 0.0 || b2 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let fk = cache.get_or_build(energy, cfg)?;
    Ok(b2 * cfg.strength * quadratic_form(&fk, out_sum, in_sum))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaPart {
    None,
    Direct,
    Exchanged,
    Both,
}

/// Distributional decomposition of one S-matrix element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrixElement {
    pub delta_part: DeltaPart,
    /// `-i b^2 U c_K^† T^{-1} c_P`, carried by `δ(E_k - E_p)`.
    pub kernel: Complex64,
    pub energy_in: f64,
    pub energy_out: f64,
    /// `E_out != E_in`: the energy delta never fires and the kernel is informational.
    pub off_shell: bool,
}

const MOMENTUM_MATCH: f64 = 1e-12;

fn same_momentum(a: f64, b: f64) -> bool {
    (a - b).abs() <= MOMENTUM_MATCH
}

pub fn s_matrix_element(
    in_pair: &MomentumPair,
    out_pair: &MomentumPair,
    cfg: &InteractionConfig,
    cache: &KernelCache,
) -> Result<SMatrixElement> {
    if in_pair.statistics != out_pair.statistics || in_pair.statistics != cfg.statistics {
        return Err(ScatterError::StatisticsMismatch);
    }
    let direct = same_momentum(out_pair.p1, in_pair.p1) && same_momentum(out_pair.p2, in_pair.p2);
    let exchanged = same_momentum(out_pair.p1, in_pair.p2) && same_momentum(out_pair.p2, in_pair.p1);
    let delta_part = match (direct, exchanged) {
        (true, true) => DeltaPart::Both,
        (true, false) => DeltaPart::Direct,
        (false, true) => DeltaPart::Exchanged,
        (false, false) => DeltaPart::None,
    };
    let energy_in = in_pair.energy();
    let energy_out = out_pair.energy();
    let kernel = finite_kernel(out_pair.total(), in_pair.total(), energy_in, cfg, cache)?;
    Ok(SMatrixElement {
        delta_part,
        kernel: Complex64::new(0.0, -1.0) * kernel,
        energy_in,
        energy_out,
        off_shell: (energy_out - energy_in).abs() > 1e-12,
    })
}

/// Reflection and transmission amplitudes of the translation-invariant interaction.
pub fn asymptotic_rt(p1: f64, p2: f64, strength: f64) -> (Complex64, Complex64) {
    let d = 2.0 * (p1.sin() - p2.sin()).abs();
    if d == 0.0 {
        return (Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let den = Complex64::new(d, strength);
    (Complex64::new(0.0, -strength) / den, Complex64::new(d, 0.0) / den)
}

/// Bosonic scattering phase `(2Δ - iU)/(2Δ + iU)`, `Δ = |sin p1 - sin p2|`.
pub fn asymptotic_boson_phase(p1: f64, p2: f64, strength: f64) -> Complex64 {
    let d = 2.0 * (p1.sin() - p2.sin()).abs();
    if d == 0.0 {
        return Complex64::new(-1.0, 0.0);
    }
    Complex64::new(d, -strength) / Complex64::new(d, strength)
}

/// Finite-L estimate of the bosonic phase from the forward (non-exchange) kernel:
/// `1 - iπ K(P, P) / (N Δ)`, the kernel divided by its forward weight `N/(2π)` and the
/// shell Jacobian `2Δ`.
pub fn finite_boson_phase(pair: &MomentumPair, cfg: &InteractionConfig, cache: &KernelCache) -> Result<Complex64> {
    let delta = (pair.p1.sin() - pair.p2.sin()).abs();
    if delta == 0.0 {
        return Err(ScatterError::ShellDegeneracy { sin: 0.0 });
    }
    let p = pair.total();
    let k = finite_kernel(p, p, pair.energy(), cfg, cache)?;
    Ok(Complex64::new(1.0, 0.0) - Complex64::new(0.0, PI) * k / (cfg.sites() as f64 * delta))
}

/// One row of a momentum-conservation report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeSample {
    pub half_width: usize,
    /// `|b^2 U c_K^† T^{-1} c_P|` at the exchanging point.
    pub raw: f64,
    /// `raw · 2π/N`: exchange weight relative to the forward channel, whose kernel grows like N.
    pub normalized: f64,
}

/// Exchange kernel magnitude at `K != P` on the shell, for each requested L.
pub fn momentum_conservation_check(
    strength: f64,
    statistics: Statistics,
    in_pair: &MomentumPair,
    out_pair: &MomentumPair,
    half_widths: &[usize],
    cache: &KernelCache,
) -> Result<Vec<ExchangeSample>> {
    let e = in_pair.energy();
    if (out_pair.energy() - e).abs() > 1e-10 {
        return Err(ScatterError::InvalidInput("exchange sample is off shell".into()));
    }
    half_widths
        .iter()
        .map(|&l| {
            let cfg = InteractionConfig::new(strength, l, statistics);
            let raw = finite_kernel(out_pair.total(), in_pair.total(), e, &cfg, cache)?.norm();
            Ok(ExchangeSample {
                half_width: l,
                raw,
                normalized: raw * 2.0 * PI / cfg.sites() as f64,
            })
        })
        .collect()
}
