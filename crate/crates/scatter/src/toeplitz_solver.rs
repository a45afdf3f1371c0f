//! The `N x N` complex symmetric Toeplitz system `T_N x = b c_P` with
//! `(T_N)_{lm} = 2π δ_{lm} - U J(E, l - m)` for `l, m = -L..L`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::lattice_integrals::j_table;
use crate::scattering_core::InteractionConfig;
use crate::{Result, ScatterError};

/// Scaled pivot below which a system is reported singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// First row (= first column) of `T_N` at fixed energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzKernel {
    pub energy: f64,
    pub strength: f64,
    pub half_width: usize,
    /// `t(n)` for `n = 0..=2L`; `t(-n) = t(n)`.
    coefficients: Vec<Complex64>,
}

impl ToeplitzKernel {
    pub fn size(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn t(&self, n: i64) -> Complex64 {
        self.coefficients[n.unsigned_abs() as usize]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Row-major dense copy of `T_N`.
    pub fn dense(&self) -> Vec<Complex64> {
        let n = self.size();
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                a.push(self.coefficients[i.abs_diff(j)]);
            }
        }
        a
    }

    /// `T_N v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.size();
        (0..n)
            .map(|i| (0..n).map(|j| self.coefficients[i.abs_diff(j)] * v[j]).sum())
            .collect()
    }
}

pub fn build_kernel(energy: f64, cfg: &InteractionConfig) -> Result<ToeplitzKernel> {
    let n = 2 * cfg.half_width + 1;
    let table = j_table(energy, n - 1)?;
    let coefficients = table
        .nonnegative()
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let diag = if i == 0 { 2.0 * PI } else { 0.0 };
            Complex64::new(diag, 0.0) - cfg.strength * j
        })
        .collect();
    Ok(ToeplitzKernel {
        energy,
        strength: cfg.strength,
        half_width: cfg.half_width,
        coefficients,
    })
}

/// `(c_P)_l = e^{-iPl}`, `l = -L..L`.
pub fn plane_wave(total_momentum: f64, half_width: usize) -> Vec<Complex64> {
    let l = half_width as i64;
    (-l..=l)
        .map(|s| Complex64::from_polar(1.0, -total_momentum * s as f64))
        .collect()
}

/// Dense LU factorisation with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl LuFactor {
    /// Factorises a row-major `n x n` matrix; `energy` only labels the error.
    pub fn new(mut a: Vec<Complex64>, n: usize, energy: f64) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 || !scale.is_finite() {
            return Err(ScatterError::SingularSystem { energy, pivot: 0.0 });
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax / scale < PIVOT_THRESHOLD {
                return Err(ScatterError::SingularSystem {
                    energy,
                    pivot: pmax / scale,
                });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = 1.0 / a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] * inv;
                a[i * n + k] = f;
                if f != Complex64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let u = a[k * n + j];
                        a[i * n + j] -= f * u;
                    }
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Levinson recursion for a symmetric (not necessarily Hermitian) Toeplitz matrix.
///
/// Returns `None` on breakdown (vanishing leading-minor ratio); the caller falls back to LU.
pub fn levinson_solve(t: &[Complex64], rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = rhs.len();
    assert!(t.len() >= n);
    let scale = t[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    if n == 0 || t[0].norm() <= PIVOT_THRESHOLD * scale {
        return None;
    }
    let mut f = vec![1.0 / t[0]];
    let mut x = vec![rhs[0] / t[0]];
    for k in 1..n {
        let ef: Complex64 = (0..k).map(|i| t[k - i] * f[i]).sum();
        let denom = 1.0 - ef * ef;
        if denom.norm() <= PIVOT_THRESHOLD {
            return None;
        }
        // Persymmetry: the backward vector is the reversed forward vector.
        let mut nf = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let fwd = if i < k { f[i] } else { Complex64::new(0.0, 0.0) };
            let bwd = if i > 0 { f[k - i] } else { Complex64::new(0.0, 0.0) };
            nf.push((fwd - ef * bwd) / denom);
        }
        f = nf;
        let ex: Complex64 = (0..k).map(|i| t[k - i] * x[i]).sum();
        let c = rhs[k] - ex;
        x.push(Complex64::new(0.0, 0.0));
        for i in 0..=k {
            x[i] += c * f[k - i];
        }
    }
    Some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Dense,
    /// Levinson recursion, checked against the residual bound and replaced by the dense
    /// solve if it breaks down or misses the bound.
    Levinson,
}

/// A kernel together with its LU factors.
#[derive(Debug, Clone)]
pub struct FactoredKernel {
    pub kernel: ToeplitzKernel,
    lu: LuFactor,
}

impl FactoredKernel {
    pub fn new(kernel: ToeplitzKernel) -> Result<Self> {
        let lu = LuFactor::new(kernel.dense(), kernel.size(), kernel.energy)?;
        Ok(Self { kernel, lu })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve(rhs)
    }
}

/// Residual `||T x - r||_inf / ||r||_inf`.
pub fn relative_residual(kernel: &ToeplitzKernel, x: &[Complex64], rhs: &[Complex64]) -> f64 {
    let tx = kernel.apply(x);
    let num = tx.iter().zip(rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let den = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Solves `T_N x = rhs`.
pub fn solve(kernel: &ToeplitzKernel, rhs: &[Complex64], method: SolveMethod) -> Result<Vec<Complex64>> {
    if rhs.len() != kernel.size() {
        return Err(ScatterError::InvalidInput(format!(
            "right-hand side has length {}, system size is {}",
            rhs.len(),
            kernel.size()
        )));
    }
    if method == SolveMethod::Levinson {
        if let Some(x) = levinson_solve(kernel.coefficients(), rhs) {
            if relative_residual(kernel, &x, rhs) <= 1e-12 {
                return Ok(x);
            }
        }
    }
    Ok(FactoredKernel::new(kernel.clone())?.solve(rhs))
}

/// Factored kernels keyed by (energy quantised to 1e-12, U, L).
#[derive(Debug, Default)]
pub struct KernelCache {
    map: RwLock<HashMap<(i64, u64, usize), Arc<FactoredKernel>>>,
    capacity: usize,
}

impl KernelCache {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            map: RwLock::new(HashMap::new()),
            capacity,
        }
    }

    fn key(energy: f64, cfg: &InteractionConfig) -> (i64, u64, usize) {
        ((energy * 1e12).round() as i64, cfg.strength.to_bits(), cfg.half_width)
    }

    pub fn len(&self) -> usize {
        self.map.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_build(&self, energy: f64, cfg: &InteractionConfig) -> Result<Arc<FactoredKernel>> {
        let key = Self::key(energy, cfg);
        if let Some(k) = self.map.read().expect("kernel cache poisoned").get(&key) {
            return Ok(Arc::clone(k));
        }
        let built = Arc::new(FactoredKernel::new(build_kernel(energy, cfg)?)?);
        let mut map = self.map.write().expect("kernel cache poisoned");
        if self.capacity > 0 && map.len() >= self.capacity {
            map.clear();
        }
        Ok(Arc::clone(map.entry(key).or_insert(built)))
    }
}

/// Eigenvalues of the circulant approximation,
/// `λ_l = 2π - 2πU / sqrt(E^2 - 16 cos^2(πl/N))`, `l = -L..L`.
pub fn circulant_eigenvalues(energy: f64, cfg: &InteractionConfig) -> Result<Vec<Complex64>> {
    if !energy.is_finite() || energy.abs() >= 4.0 {
        return Err(ScatterError::OutOfBand { energy });
    }
    let n = (2 * cfg.half_width + 1) as f64;
    let l = cfg.half_width as i64;
    Ok((-l..=l)
        .map(|s| circulant_symbol(energy, 2.0 * PI * s as f64 / n, cfg.strength))
        .collect())
}

/// `2π - 2πU / sqrt(E^2 - 16 cos^2(P/2) + i0)`.
pub fn circulant_symbol(energy: f64, total_momentum: f64, strength: f64) -> Complex64 {
    let c = (0.5 * total_momentum).cos();
    let radicand = energy * energy - 16.0 * c * c;
    let root = if radicand >= 0.0 {
        Complex64::new(radicand.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-radicand).sqrt())
    };
    Complex64::new(2.0 * PI, 0.0) - 2.0 * PI * strength / root
}

/// `c_K^† C_N^{-1} c_P` with `C_N` diagonal in the discrete Fourier basis `e^{2πi l j/N}/sqrt(N)`.
pub fn circulant_quadratic_form(
    energy: f64,
    cfg: &InteractionConfig,
    out_sum: f64,
    in_sum: f64,
) -> Result<Complex64> {
    let lam = circulant_eigenvalues(energy, cfg)?;
    let half = cfg.half_width as i64;
    let n = 2 * cfg.half_width + 1;
    let ck = plane_wave(out_sum, cfg.half_width);
    let cp = plane_wave(in_sum, cfg.half_width);
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, l) in (-half..=half).enumerate() {
        let q = 2.0 * PI * l as f64 / n as f64;
        // <f_l|c> with f_l(j) = e^{-iqj}/sqrt(N) to match the plane-wave sign convention.
        let proj = |c: &[Complex64]| -> Complex64 {
            (-half..=half)
                .zip(c)
                .map(|(j, cj)| Complex64::from_polar(1.0, q * j as f64) * cj)
                .sum::<Complex64>()
                / (n as f64).sqrt()
        };
        acc += proj(&ck).conj() * proj(&cp) / lam[idx];
    }
    Ok(acc)
}
