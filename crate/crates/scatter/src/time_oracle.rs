//! Direct time evolution of two particles on a truncated line, `H = H_hop ⊗ 1 + 1 ⊗ H_hop + V`,
//! with `V = U` on the doubly occupied sites `|j| <= L`.
//!
//! Packets are prepared by exact free back-evolution over a lead time `t0`: at `t = t0` each
//! packet would be the bare flat-top transform centred at the origin. After `T = 2 t0` the
//! interacting state is projected on the freely evolved one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::gate_analysis::TwoQubitInput;
use crate::quadrature::gauss_legendre;
use crate::scattering_core::{InteractionConfig, Statistics};
use crate::{Result, ScatterError};

/// Probability allowed in the outermost [`EDGE_SITES`] sites of either coordinate.
pub const DEFAULT_LEAK_TOL: f64 = 1e-2;
pub const EDGE_SITES: usize = 5;
/// Probability allowed inside `|j1|, |j2| <= L + 5` at the final time.
pub const SEPARATION_TOL: f64 = 1e-3;

/// Single-particle amplitude `ψ(j) = (2π)^{-1/2} ∫ a e^{-ijk + 2i t0 cos k} dk` over the packet
/// support, on sites `j = -M/2 .. M/2 - 1`.
pub fn packet_amplitudes(center: f64, half_width: f64, lead_time: f64, sites: usize) -> Vec<Complex64> {
    let half = (sites / 2) as f64;
    let amp = 1.0 / (2.0 * half_width).sqrt() / (2.0 * PI).sqrt();
    // Enough panels that the phase turns by at most ~1 rad per panel.
    let rate = half + 2.0 * lead_time.abs();
    let panels = ((rate * 2.0 * half_width).ceil() as usize).max(4);
    let (x, w) = gauss_legendre(16);
    let h = 2.0 * half_width / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let a = center - half_width + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let k = a + 0.5 * h * (xi + 1.0);
            nodes.push((k, 0.5 * h * wi, Complex64::from_polar(1.0, 2.0 * lead_time * k.cos())));
        }
    }
    (0..sites)
        .map(|s| {
            let j = s as f64 - half;
            let sum: Complex64 = nodes
                .iter()
                .map(|(k, wk, ph)| *wk * ph * Complex64::from_polar(1.0, -j * k))
                .sum();
            amp * sum
        })
        .collect()
}

/// Two-particle amplitudes on an `M x M` grid, row index `j1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeWavefunction {
    pub sites: usize,
    pub amplitudes: Vec<Complex64>,
}

impl LatticeWavefunction {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.par_iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .par_iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn site(&self, s: usize) -> i64 {
        s as i64 - (self.sites / 2) as i64
    }

    /// Probability with either particle in the outermost `width` sites.
    pub fn edge_probability(&self, width: usize) -> f64 {
        let m = self.sites;
        let edge = |s: usize| s < width || s + width >= m;
        self.amplitudes
            .par_chunks(m)
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| edge(r) || edge(*c))
                    .map(|(_, z)| z.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Probability with both particles inside `|j| <= radius`.
    pub fn central_probability(&self, radius: i64) -> f64 {
        let m = self.sites;
        self.amplitudes
            .par_chunks(m)
            .enumerate()
            .filter(|(r, _)| self.site(*r).abs() <= radius)
            .map(|(_, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| self.site(*c).abs() <= radius)
                    .map(|(_, z)| z.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Mean position of the first particle.
    pub fn mean_position_first(&self) -> f64 {
        let m = self.sites;
        let (num, den) = self
            .amplitudes
            .par_chunks(m)
            .enumerate()
            .map(|(r, row)| {
                let p: f64 = row.iter().map(|z| z.norm_sqr()).sum();
                (self.site(r) as f64 * p, p)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        num / den
    }
}

/// Prepared two-particle state together with the single-particle packets it was built from.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub state: LatticeWavefunction,
    pub packet1: Vec<Complex64>,
    pub packet2: Vec<Complex64>,
    /// Position centroids `-2 t0 sin k` at preparation.
    pub centers: (f64, f64),
}

/// Symmetrised (bosons), antisymmetrised (fermions) or plain (distinguishable) product of the
/// two packets. The state is not renormalised after truncation: the mass beyond the grid is
/// accounted for separately by [`extract_scattering_overlap`].
pub fn prepare_state(
    input: &TwoQubitInput,
    statistics: Statistics,
    lead_time: f64,
    sites: usize,
) -> Result<PreparedState> {
    if sites < 16 || !sites.is_multiple_of(2) {
        return Err(ScatterError::InvalidInput(format!("lattice size must be even and >= 16, got {sites}")));
    }
    let mut reach: f64 = 0.0;
    for wp in [&input.wp1, &input.wp2] {
        let travel = 2.0 * lead_time * wp.center.sin().abs();
        reach = reach.max(travel + PI / wp.half_width);
    }
    if reach > (sites / 2) as f64 - EDGE_SITES as f64 {
        return Err(ScatterError::TruncationTooSmall { sites, needed: reach });
    }
    let a = packet_amplitudes(input.wp1.center, input.wp1.half_width, lead_time, sites);
    let b = packet_amplitudes(input.wp2.center, input.wp2.half_width, lead_time, sites);
    let (sign, norm) = match statistics {
        Statistics::Boson => (1.0, input.normalization),
        Statistics::Fermion => {
            let n2 = 2.0 - 2.0 * input.overlap;
            if n2 <= 1e-12 {
                return Err(ScatterError::InvalidInput("antisymmetric state of identical packets vanishes".into()));
            }
            (-1.0, 1.0 / n2.sqrt())
        }
        Statistics::Distinguishable => (0.0, 1.0),
    };
    let m = sites;
    let mut amps = vec![Complex64::new(0.0, 0.0); m * m];
    amps.par_chunks_mut(m).enumerate().for_each(|(r, row)| {
        for (c, z) in row.iter_mut().enumerate() {
            *z = norm * (a[r] * b[c] + sign * b[r] * a[c]);
        }
    });
    Ok(PreparedState {
        state: LatticeWavefunction { sites, amplitudes: amps },
        packet1: a,
        packet2: b,
        centers: (
            -2.0 * lead_time * input.wp1.center.sin(),
            -2.0 * lead_time * input.wp2.center.sin(),
        ),
    })
}

/// Two-particle Hamiltonian on the truncated line (hard walls).
#[derive(Debug, Clone, Copy)]
pub struct LatticeHamiltonian {
    pub sites: usize,
    pub strength: f64,
    pub half_width: usize,
}

impl LatticeHamiltonian {
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let m = self.sites;
        let half = (m / 2) as i64;
        let l = self.half_width as i64;
        out.par_chunks_mut(m).enumerate().for_each(|(r, row)| {
            let base = r * m;
            for c in 0..m {
                let mut s = Complex64::new(0.0, 0.0);
                if r > 0 {
                    s += v[base - m + c];
                }
                if r + 1 < m {
                    s += v[base + m + c];
                }
                if c > 0 {
                    s += v[base + c - 1];
                }
                if c + 1 < m {
                    s += v[base + c + 1];
                }
                if r == c && (r as i64 - half).abs() <= l {
                    s += self.strength * v[base + c];
                }
                row[c] = s;
            }
        });
    }

    /// Bounds on the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        (-4.0 + self.strength.min(0.0), 4.0 + self.strength.max(0.0))
    }

    pub fn expectation(&self, psi: &LatticeWavefunction) -> f64 {
        let mut hv = vec![Complex64::new(0.0, 0.0); psi.amplitudes.len()];
        self.apply(&psi.amplitudes, &mut hv);
        let e: Complex64 = psi.amplitudes.par_iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
        e.re / psi.norm_sqr()
    }
}

/// Bessel functions `J_0..J_{n}(x)` by Miller's backward recurrence, normalised with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    let start = (n.max(x.ceil() as usize) + 40 + (2.0 * x.sqrt()) as usize) | 1;
    let mut vals = vec![0.0; start + 2];
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    vals[start] = j;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        vals[k - 1] = j;
        if j.abs() > 1e250 {
            for v in vals[k - 1..=start].iter_mut() {
                *v *= 1e-250;
            }
            j *= 1e-250;
            jp1 *= 1e-250;
        }
    }
    let mut norm = vals[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * vals[k];
    }
    vals.truncate(n + 1);
    vals.iter().map(|v| v / norm).collect()
}

/// Chebyshev expansion of `exp(-i H dt)` applied to `psi`; the series is cut once the
/// remaining Bessel coefficients are below `tol`. Returns the number of terms used.
pub fn chebyshev_step<F>(apply: F, bounds: (f64, f64), psi: &mut [Complex64], dt: f64, tol: f64) -> usize
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let center = 0.5 * (bounds.0 + bounds.1);
    let radius = 0.5 * (bounds.1 - bounds.0) * 1.01 + 1e-12;
    let x = radius * dt;
    let kmax = (x + 20.0 * x.cbrt() + 30.0) as usize;
    let bess = bessel_j_sequence(x, kmax);
    let mut terms = kmax;
    // Keep terms until the tail is negligible.
    for k in (x.ceil() as usize).min(kmax)..=kmax {
        if bess[k..].iter().map(|b| b.abs()).sum::<f64>() < tol {
            terms = k;
            break;
        }
    }
    let n = psi.len();
    let scaled = |v: &[Complex64], out: &mut [Complex64]| {
        apply(v, out);
        out.par_iter_mut().zip(v).for_each(|(o, vi)| *o = (*o - center * vi) / radius);
    };
    let mut prev = psi.to_vec();
    let mut cur = vec![Complex64::new(0.0, 0.0); n];
    scaled(&prev, &mut cur);
    let mut acc: Vec<Complex64> = prev.iter().map(|p| bess[0] * p).collect();
    let mi = Complex64::new(0.0, -1.0);
    let coef = |k: usize| 2.0 * mi.powu(k as u32) * bess[k];
    let c1 = coef(1);
    acc.par_iter_mut().zip(&cur).for_each(|(a, c)| *a += c1 * c);
    let mut next = vec![Complex64::new(0.0, 0.0); n];
    for k in 2..terms {
        scaled(&cur, &mut next);
        let ck = coef(k);
        next.par_iter_mut()
            .zip(&prev)
            .zip(acc.par_iter_mut())
            .for_each(|((nx, p), a)| {
                *nx = 2.0 * *nx - p;
                *a += ck * *nx;
            });
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let phase = Complex64::from_polar(1.0, -center * dt);
    psi.par_iter_mut().zip(&acc).for_each(|(p, a)| *p = phase * a);
    terms
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionPlan {
    pub total_time: f64,
    pub step: f64,
    /// Truncation bound of each Chebyshev step.
    pub accuracy: f64,
    pub strength: f64,
    pub half_width: usize,
    pub leak_tol: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: LatticeWavefunction,
    pub norm_drift: f64,
    pub energy_drift: f64,
    pub max_edge_probability: f64,
}

pub fn evolve(initial: &LatticeWavefunction, plan: &EvolutionPlan) -> Result<Evolution> {
    if !(plan.step > 0.0) || !(plan.total_time >= 0.0) {
        return Err(ScatterError::InvalidInput("evolution needs positive step and non-negative time".into()));
    }
    let h = LatticeHamiltonian {
        sites: initial.sites,
        strength: plan.strength,
        half_width: plan.half_width,
    };
    let norm0 = initial.norm_sqr();
    let energy0 = h.expectation(initial);
    let mut psi = initial.clone();
    let mut t = 0.0;
    let mut max_edge = psi.edge_probability(EDGE_SITES);
    let mut energy_drift: f64 = 0.0;
    while t < plan.total_time - 1e-12 {
        let dt = plan.step.min(plan.total_time - t);
        chebyshev_step(|v, o| h.apply(v, o), h.spectral_bounds(), &mut psi.amplitudes, dt, plan.accuracy);
        t += dt;
        let edge = psi.edge_probability(EDGE_SITES);
        max_edge = max_edge.max(edge);
        if edge > plan.leak_tol {
            return Err(ScatterError::BoundaryLeak { probability: edge, time: t });
        }
        energy_drift = energy_drift.max((h.expectation(&psi) - energy0).abs());
    }
    let norm_drift = (psi.norm_sqr() - norm0).abs();
    Ok(Evolution {
        state: psi,
        norm_drift,
        energy_drift,
        max_edge_probability: max_edge,
    })
}

/// `<ψ_free(T)|ψ_int(T)> + (1 - ||ψ(0)||^2)`: the mass cut off by the truncation never
/// reaches the interaction region within `T` and scatters trivially.
pub fn extract_scattering_overlap(
    initial: &LatticeWavefunction,
    free_final: &LatticeWavefunction,
    interacting_final: &LatticeWavefunction,
    half_width: usize,
) -> Result<Complex64> {
    let central = interacting_final.central_probability(half_width as i64 + 5);
    if central > SEPARATION_TOL {
        return Err(ScatterError::PacketsNotSeparated { probability: central });
    }
    Ok(free_final.inner(interacting_final) + (1.0 - initial.norm_sqr()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub sites: usize,
    pub lead_time: f64,
    pub step: f64,
    pub accuracy: f64,
    pub leak_tol: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            sites: 256,
            lead_time: 35.0,
            step: 5.0,
            accuracy: 1e-14,
            leak_tol: DEFAULT_LEAK_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub f_oracle: Complex64,
    pub initial_norm: f64,
    pub norm_drift: f64,
    pub energy_drift: f64,
    pub max_edge_probability: f64,
    pub centers: (f64, f64),
    pub total_time: f64,
    pub final_state: LatticeWavefunction,
}

/// Full pipeline: prepare, evolve with and without interaction over `2 t0`, project.
pub fn run_time_oracle(input: &TwoQubitInput, cfg: &InteractionConfig, settings: &OracleSettings) -> Result<OracleReport> {
    let prepared = prepare_state(input, cfg.statistics, settings.lead_time, settings.sites)?;
    let total_time = 2.0 * settings.lead_time;
    let plan = |strength: f64| EvolutionPlan {
        total_time,
        step: settings.step,
        accuracy: settings.accuracy,
        strength,
        half_width: cfg.half_width,
        leak_tol: settings.leak_tol,
    };
    let free = evolve(&prepared.state, &plan(0.0))?;
    let int = evolve(&prepared.state, &plan(cfg.strength))?;
    let f_oracle = extract_scattering_overlap(&prepared.state, &free.state, &int.state, cfg.half_width)?;
    Ok(OracleReport {
        f_oracle,
        initial_norm: prepared.state.norm_sqr(),
        norm_drift: free.norm_drift.max(int.norm_drift),
        energy_drift: free.energy_drift.max(int.energy_drift),
        max_edge_probability: free.max_edge_probability.max(int.max_edge_probability),
        centers: prepared.centers,
        total_time,
        final_state: int.state,
    })
}
