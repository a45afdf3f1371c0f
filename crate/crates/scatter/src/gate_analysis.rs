//! CPHASE gate fidelity of the finite-N scattering gate on flat-top momentum wavepackets.
//!
//! The logical `|11>` state is `Ψ = (a⊗b + b⊗a)/n` with `a`, `b` flat on `[k - σ, k + σ]`
//! and `n^2 = 2 + 2|<a|b>|^2`. Because the smooth S-matrix kernel depends only on the total
//! momenta and the energy, the matrix element reduces to
//!
//! ```text
//! 𝓕 = 1 - i (b^2 U / 2) / (n^2 σ_a σ_b) ∫ dE  y_E^† T_N^{-1}(E) y_E,
//! y_E = ∫_{shell(E) ∩ A×B} c_{q1+q2} dq1 / |2 sin q2|
//! ```
//!
//! where the shell segment is parametrized by the first momentum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::quadrature::gauss_legendre_on;
use crate::scattering_core::InteractionConfig;
use crate::toeplitz_solver::{build_kernel, plane_wave, FactoredKernel, KernelCache};
use crate::{Result, ScatterError};

/// `|sin q2|` below which the shell Jacobian is considered divergent.
pub const JACOBIAN_FLOOR: f64 = 1e-6;

/// Half-width of the energy window around `E = 0` that is bridged by a trapezoid instead of
/// Gauss nodes; keeps every kernel evaluation clear of the band-center refusal band.
pub const BAND_CENTER_GAP: f64 = 1e-3;

/// Target CPHASE angle.
pub const TARGET_PHASE: f64 = -PI / 2.0;

/// Flat-top momentum wavepacket, amplitude `1/sqrt(2σ)` on `[k - σ, k + σ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavepacket {
    pub center: f64,
    pub half_width: f64,
}

impl Wavepacket {
    /// The support must sit strictly inside `(0, π)` or `(-π, 0)`.
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !center.is_finite() || !half_width.is_finite() {
            return Err(ScatterError::InvalidInput(format!(
                "wavepacket needs finite center and positive width, got ({center}, {half_width})"
            )));
        }
        let (lo, hi) = (center - half_width, center + half_width);
        let inside = (lo > 0.0 && hi < PI) || (lo > -PI && hi < 0.0);
        if !inside {
            return Err(ScatterError::InvalidInput(format!(
                "wavepacket support [{lo}, {hi}] must lie inside (0, π) or (-π, 0)"
            )));
        }
        Ok(Self { center, half_width })
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    fn sign(&self) -> f64 {
        self.center.signum()
    }

    /// Support in `|q|`, ascending.
    fn abs_range(&self) -> (f64, f64) {
        let (a, b) = (self.lo().abs(), self.hi().abs());
        (a.min(b), a.max(b))
    }

    /// Position-space amplitude is the Fourier transform of the flat top; its norm is 1.
    pub fn amplitude(&self) -> f64 {
        1.0 / (2.0 * self.half_width).sqrt()
    }
}

/// The two logical wavepackets and the symmetric normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitInput {
    pub wp1: Wavepacket,
    pub wp2: Wavepacket,
    /// `|<a|b>|^2`.
    pub overlap: f64,
    /// `1/sqrt(2 + 2 overlap)`.
    pub normalization: f64,
}

impl TwoQubitInput {
    pub fn new(wp1: Wavepacket, wp2: Wavepacket) -> Self {
        let common = (wp1.hi().min(wp2.hi()) - wp1.lo().max(wp2.lo())).max(0.0);
        let inner = common * wp1.amplitude() * wp2.amplitude();
        let overlap = inner * inner;
        Self {
            wp1,
            wp2,
            overlap,
            normalization: 1.0 / (2.0 + 2.0 * overlap).sqrt(),
        }
    }

    /// Both packets with the same half-width.
    pub fn symmetric(k1: f64, k2: f64, sigma: f64) -> Result<Self> {
        Ok(Self::new(Wavepacket::new(k1, sigma)?, Wavepacket::new(k2, sigma)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    /// Required agreement between successive refinements.
    pub tol: f64,
    pub energy_nodes: usize,
    pub shell_nodes: usize,
    /// Number of node-doubling steps allowed after the first estimate.
    pub max_refinements: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            energy_nodes: 12,
            shell_nodes: 24,
            max_refinements: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FEstimate {
    pub value: Complex64,
    /// `|𝓕_fine - 𝓕_coarse|` of the last refinement.
    pub change: f64,
    pub energy_nodes: usize,
    pub shell_nodes: usize,
}

/// `[lo, hi]` of `|q1|` on the shell at energy `e` with `q1 ∈ A`, `q2 ∈ B`.
fn shell_segment(e: f64, a: &Wavepacket, b: &Wavepacket) -> Option<(f64, f64)> {
    let (alo, ahi) = a.abs_range();
    let (blo, bhi) = b.abs_range();
    let acos = |x: f64| x.clamp(-1.0, 1.0).acos();
    let lo = alo.max(acos(0.5 * e - bhi.cos()));
    let hi = ahi.min(acos(0.5 * e - blo.cos()));
    (hi > lo).then_some((lo, hi))
}

/// `Σ w c_{q1+q2}` over the shell segment at energy `e`.
fn shell_vector(
    e: f64,
    a: &Wavepacket,
    b: &Wavepacket,
    nodes: usize,
    half_width: usize,
) -> Result<Option<Vec<Complex64>>> {
    let Some((lo, hi)) = shell_segment(e, a, b) else {
        return Ok(None);
    };
    let (u, w) = gauss_legendre_on(nodes, lo, hi);
    let mut y = vec![Complex64::new(0.0, 0.0); 2 * half_width + 1];
    for (ui, wi) in u.iter().zip(&w) {
        let c2 = (0.5 * e - ui.cos()).clamp(-1.0, 1.0);
        let q2 = b.sign() * c2.acos();
        let s = q2.sin().abs();
        if s < JACOBIAN_FLOOR {
            return Err(ScatterError::ShellDegeneracy { sin: s });
        }
        let total = a.sign() * ui + q2;
        let weight = wi / (2.0 * s);
        for (yl, cl) in y.iter_mut().zip(plane_wave(total, half_width)) {
            *yl += weight * cl;
        }
    }
    Ok(Some(y))
}

fn factor_at(e: f64, cfg: &InteractionConfig, cache: Option<&KernelCache>) -> Result<std::sync::Arc<FactoredKernel>> {
    match cache {
        Some(c) => c.get_or_build(e, cfg),
        None => Ok(std::sync::Arc::new(FactoredKernel::new(build_kernel(e, cfg)?)?)),
    }
}

/// `y_E^† T^{-1}(E) y_E` at one energy.
fn energy_integrand(
    e: f64,
    input: &TwoQubitInput,
    cfg: &InteractionConfig,
    shell_nodes: usize,
    cache: Option<&KernelCache>,
) -> Result<Complex64> {
    let Some(y) = shell_vector(e, &input.wp1, &input.wp2, shell_nodes, cfg.half_width)? else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let fk = factor_at(e, cfg, cache)?;
    let x = fk.solve(&y);
    Ok(y.iter().zip(&x).map(|(yi, xi)| yi.conj() * xi).sum())
}

#[derive(Debug, Clone, Copy)]
enum Panel {
    Gauss(f64, f64),
    /// Trapezoid across the band-center window; an end that is a shell-range end has a
    /// vanishing segment and contributes zero.
    Bridge { a: f64, b: f64, a_open: bool, b_open: bool },
}

fn energy_panels(input: &TwoQubitInput) -> Vec<Panel> {
    let (a, b) = (&input.wp1, &input.wp2);
    let mut pts: Vec<f64> = [a.lo(), a.hi()]
        .iter()
        .flat_map(|&x| [b.lo(), b.hi()].map(move |y| 2.0 * x.cos() + 2.0 * y.cos()))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    let (emin, emax) = (pts[0], pts[pts.len() - 1]);
    let g = BAND_CENTER_GAP;
    if emin < g && emax > -g {
        pts.retain(|&x| x <= -g || x >= g);
        let (ga, gb) = (emin.max(-g), emax.min(g));
        pts.push(ga);
        pts.push(gb);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        let mut panels = Vec::new();
        for w in pts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if lo >= ga && hi <= gb {
                panels.push(Panel::Bridge {
                    a: lo,
                    b: hi,
                    a_open: lo > emin,
                    b_open: hi < emax,
                });
            } else {
                panels.push(Panel::Gauss(lo, hi));
            }
        }
        panels
    } else {
        pts.windows(2).map(|w| Panel::Gauss(w[0], w[1])).collect()
    }
}

fn shell_integral(
    input: &TwoQubitInput,
    cfg: &InteractionConfig,
    energy_nodes: usize,
    shell_nodes: usize,
    cache: Option<&KernelCache>,
) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for panel in energy_panels(input) {
        match panel {
            Panel::Gauss(lo, hi) => {
                let (es, ws) = gauss_legendre_on(energy_nodes, lo, hi);
                for (e, w) in es.iter().zip(&ws) {
                    total += *w * energy_integrand(*e, input, cfg, shell_nodes, cache)?;
                }
            }
            Panel::Bridge { a, b, a_open, b_open } => {
                let fa = if a_open {
                    energy_integrand(a, input, cfg, shell_nodes, cache)?
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let fb = if b_open {
                    energy_integrand(b, input, cfg, shell_nodes, cache)?
                } else {
                    Complex64::new(0.0, 0.0)
                };
                total += 0.5 * (b - a) * (fa + fb);
            }
        }
    }
    Ok(total)
}

fn assemble(input: &TwoQubitInput, cfg: &InteractionConfig, integral: Complex64) -> Complex64 {
    let pref = 0.5 * cfg.statistics.b_squared() * cfg.strength * input.normalization * input.normalization
        / (input.wp1.half_width * input.wp2.half_width);
    Complex64::new(1.0, 0.0) - Complex64::new(0.0, pref) * integral
}

/// `𝓕 = <11|S_N|11>` with node doubling until successive estimates agree to `quad.tol`.
pub fn compute_f(
    input: &TwoQubitInput,
    cfg: &InteractionConfig,
    quad: &QuadSettings,
    cache: Option<&KernelCache>,
) -> Result<FEstimate> {
    if cfg.strength == 0.0 || cfg.statistics.b_squared() == 0.0 {
        return Ok(FEstimate {
            value: Complex64::new(1.0, 0.0),
            change: 0.0,
            energy_nodes: 0,
            shell_nodes: 0,
        });
    }
    let (mut ne, mut ns) = (quad.energy_nodes.max(1), quad.shell_nodes.max(1));
    let mut prev = assemble(input, cfg, shell_integral(input, cfg, ne, ns, cache)?);
    let mut change = f64::INFINITY;
    for _ in 0..quad.max_refinements {
        ne *= 2;
        ns *= 2;
        let cur = assemble(input, cfg, shell_integral(input, cfg, ne, ns, cache)?);
        change = (cur - prev).norm();
        prev = cur;
        if change <= quad.tol {
            if cur.norm() > 1.0 + 1e-6 {
                return Err(ScatterError::QuadratureNotConverged {
                    what: "contractivity |F| <= 1",
                    achieved: cur.norm() - 1.0,
                    requested: 1e-6,
                });
            }
            return Ok(FEstimate {
                value: cur,
                change,
                energy_nodes: ne,
                shell_nodes: ns,
            });
        }
    }
    Err(ScatterError::QuadratureNotConverged {
        what: "shell quadrature",
        achieved: change,
        requested: quad.tol,
    })
}

/// Average fidelity with the CPHASE gate of angle `phi`.
pub fn gate_fidelity(f: Complex64, phi: f64) -> f64 {
    (6.0 + 3.0 * (Complex64::from_polar(1.0, -phi) * f).re + f.norm_sqr()) / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestPhase {
    pub phi_star: f64,
    pub f_max: f64,
    /// `𝓕 = 0`: every phase is equally good and `phi_star` is set to 0.
    pub degenerate: bool,
}

pub fn best_phase(f: Complex64) -> BestPhase {
    let r = f.norm();
    BestPhase {
        phi_star: if r == 0.0 { 0.0 } else { f.arg() },
        f_max: (6.0 + 3.0 * r + r * r) / 10.0,
        degenerate: r == 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateFidelityReport {
    pub f_complex: Complex64,
    pub f_target: f64,
    pub phi_star: f64,
    pub f_max: f64,
    pub degenerate_phase: bool,
    pub sigma: f64,
    pub half_width: usize,
    pub strength: f64,
    pub quad_change: f64,
    pub energy_nodes: usize,
    pub shell_nodes: usize,
}

impl GateFidelityReport {
    pub fn fidelity_at(&self, phi: f64) -> f64 {
        gate_fidelity(self.f_complex, phi)
    }

    pub fn infidelity(&self) -> f64 {
        1.0 - self.f_target
    }
}

/// Gate report for equal-width packets centred at `k1`, `k2`.
pub fn gate_report(
    centers: (f64, f64),
    sigma: f64,
    cfg: &InteractionConfig,
    quad: &QuadSettings,
    cache: Option<&KernelCache>,
) -> Result<GateFidelityReport> {
    let input = TwoQubitInput::symmetric(centers.0, centers.1, sigma)?;
    let est = compute_f(&input, cfg, quad, cache)?;
    let bp = best_phase(est.value);
    Ok(GateFidelityReport {
        f_complex: est.value,
        f_target: gate_fidelity(est.value, TARGET_PHASE),
        phi_star: bp.phi_star,
        f_max: bp.f_max,
        degenerate_phase: bp.degenerate,
        sigma,
        half_width: cfg.half_width,
        strength: cfg.strength,
        quad_change: est.change,
        energy_nodes: est.energy_nodes,
        shell_nodes: est.shell_nodes,
    })
}

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub sigma: f64,
    pub half_width: usize,
    pub result: Result<GateFidelityReport>,
}

/// Reports over the grid `L_set × sigma_grid`, ordered by L then σ; per-point failures are
/// recorded and the scan continues.
pub fn fidelity_scan(
    centers: (f64, f64),
    strength: f64,
    statistics: crate::scattering_core::Statistics,
    sigma_grid: &[f64],
    half_widths: &[usize],
    quad: &QuadSettings,
) -> Vec<ScanPoint> {
    let tasks: Vec<(usize, f64)> = half_widths
        .iter()
        .flat_map(|&l| sigma_grid.iter().map(move |&s| (l, s)))
        .collect();
    tasks
        .par_iter()
        .map(|&(l, s)| {
            let cfg = InteractionConfig::new(strength, l, statistics);
            ScanPoint {
                sigma: s,
                half_width: l,
                result: gate_report(centers, s, &cfg, quad, None),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// `max - min` of the fidelity over the interval.
    pub variation: f64,
}

/// Widest run of consecutive grid points (sorted by σ) whose fidelities stay within
/// `max_variation`, if it spans at least `min_width`.
pub fn find_plateau(points: &[(f64, f64)], min_width: f64, max_variation: f64) -> Option<Plateau> {
    let mut best: Option<Plateau> = None;
    for i in 0..points.len() {
        let (mut lo, mut hi) = (points[i].1, points[i].1);
        for j in i..points.len() {
            lo = lo.min(points[j].1);
            hi = hi.max(points[j].1);
            if hi - lo >= max_variation {
                break;
            }
            let width = points[j].0 - points[i].0;
            if width >= min_width && best.is_none_or(|b| width > b.sigma_hi - b.sigma_lo) {
                best = Some(Plateau {
                    sigma_lo: points[i].0,
                    sigma_hi: points[j].0,
                    variation: hi - lo,
                });
            }
        }
    }
    best
}

/// σ maximising `F(-π/2)` on `[lo, hi]`: grid search with step `step`, then golden-section
/// refinement around the best grid point.
pub fn optimize_sigma(
    centers: (f64, f64),
    cfg: &InteractionConfig,
    range: (f64, f64),
    step: f64,
    quad: &QuadSettings,
) -> Result<GateFidelityReport> {
    let (lo, hi) = range;
    if !(hi > lo) || !(step > 0.0) {
        return Err(ScatterError::InvalidInput("empty σ search range".into()));
    }
    let count = ((hi - lo) / step).round() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let reports: Vec<Result<GateFidelityReport>> = grid
        .par_iter()
        .map(|&s| gate_report(centers, s, cfg, quad, None))
        .collect();
    let mut best: Option<(usize, GateFidelityReport)> = None;
    let mut first_err = None;
    for (i, r) in reports.into_iter().enumerate() {
        match r {
            Ok(rep) => {
                if best.is_none_or(|(_, b)| rep.f_target > b.f_target) {
                    best = Some((i, rep));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((ib, mut best_rep)) = best else {
        return Err(first_err.unwrap_or(ScatterError::InvalidInput("empty σ grid".into())));
    };
    let mut a = grid[ib.saturating_sub(1)];
    let mut b = grid[(ib + 1).min(grid.len() - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |s: f64| gate_report(centers, s, cfg, quad, None);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > 1e-4 {
        if f1.f_target > f2.f_target {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = eval(x2)?;
        }
    }
    for r in [f1, f2] {
        if r.f_target > best_rep.f_target {
            best_rep = r;
        }
    }
    Ok(best_rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    /// Root-mean-square residual in `ln(1 - F)`.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares line through `(ln L, ln(1 - F))`: `1 - F ≈ a L^β`.
pub fn infidelity_fit(half_widths: &[f64], infidelities: &[f64]) -> Result<PowerLawFit> {
    if half_widths.len() != infidelities.len() {
        return Err(ScatterError::InvalidInput("L and infidelity lists differ in length".into()));
    }
    for (i, &v) in infidelities.iter().enumerate() {
        if !(v > 0.0) {
            return Err(ScatterError::NonPositiveInfidelity { index: i, value: v });
        }
    }
    for &l in half_widths {
        if !(l > 0.0) {
            return Err(ScatterError::InvalidInput(format!("L must be positive, got {l}")));
        }
    }
    let n = half_widths.len();
    let x: Vec<f64> = half_widths.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = infidelities.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n.max(1) as f64;
    let my = y.iter().sum::<f64>() / n.max(1) as f64;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    if n < 2 || sxx <= 1e-300 {
        return Err(ScatterError::Underdetermined { points: n });
    }
    let sxy: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let beta = sxy / sxx;
    let ln_a = my - beta * mx;
    let ss: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - ln_a - beta * xi).powi(2)).sum();
    Ok(PowerLawFit {
        prefactor: ln_a.exp(),
        exponent: beta,
        residual: (ss / n as f64).sqrt(),
        points: n,
    })
}
