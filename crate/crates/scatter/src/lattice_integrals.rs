//! Lattice Green's-function coefficients
//!
//! ```text
//! J(E, n) = 1/(2π) ∬ e^{-i(k1+k2)n} / (E - 2cos k1 - 2cos k2 + i0) dk1 dk2
//!         = ∫_0^{π/2} cos(2np) / sqrt((E/4)^2 - cos^2 p) dp
//! ```
//!
//! evaluated through complete elliptic integrals of modulus `k^2 = 16/(16 - E^2) > 1`.
//! The square root of a negative number is taken with positive imaginary part throughout.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Result, ScatterError};

/// Refusal band around `k^2 = 1` (band center `E = 0`).
pub const TOL_DEGENERATE: f64 = 1e-8;

/// Estimated relative cancellation error above which the factorial sum is abandoned
/// in favour of the three-term recurrence in `n`.
const CLOSED_FORM_GATE: f64 = 1e-12;

const AGM_MAX_ITER: usize = 64;

/// Complete elliptic integrals `K(m)`, `E(m)` for real parameter `m < 1` by the AGM.
pub fn agm_ke(m: f64) -> Result<(f64, f64)> {
    if !m.is_finite() || m >= 1.0 {
        return Err(ScatterError::NonFinite("agm_ke"));
    }
    if m == 0.0 {
        return Ok((PI / 2.0, PI / 2.0));
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    // E = K (1 - sum 2^{j-1} c_j^2)
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..AGM_MAX_ITER {
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let k = PI / (2.0 * a);
    Ok((k, k * (1.0 - sum)))
}

/// Elliptic modulus of the two-particle problem, `k^2 = 16/(16 - E^2)`.
///
/// Besides `k^2` the struct keeps `1/k^2` and `1 - 1/k^2` computed without cancellation
/// when built from an energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    pub k_squared: f64,
    pub energy: Option<f64>,
    recip: f64,
    recip_complement: f64,
}

impl EllipticModulus {
    pub fn from_energy(energy: f64) -> Result<Self> {
        check_energy(energy)?;
        let e2 = energy * energy;
        let k_squared = 16.0 / (16.0 - e2);
        if (k_squared - 1.0).abs() <= TOL_DEGENERATE {
            return Err(ScatterError::DegenerateModulus { k_squared });
        }
        Ok(Self {
            k_squared,
            energy: Some(energy),
            recip: 1.0 - e2 / 16.0,
            recip_complement: e2 / 16.0,
        })
    }

    pub fn from_k_squared(k_squared: f64) -> Result<Self> {
        if !k_squared.is_finite() {
            return Err(ScatterError::NonFinite("elliptic modulus"));
        }
        if (k_squared - 1.0).abs() <= TOL_DEGENERATE {
            return Err(ScatterError::DegenerateModulus { k_squared });
        }
        let (recip, recip_complement) = if k_squared > 1.0 {
            (1.0 / k_squared, 1.0 - 1.0 / k_squared)
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(Self {
            k_squared,
            energy: None,
            recip,
            recip_complement,
        })
    }

    /// `K(k)` and `E(k)` on the branch fixed by the retarded prescription.
    pub fn complete_integrals(&self) -> Result<(Complex64, Complex64)> {
        let k2 = self.k_squared;
        if k2 < 1.0 {
            let (k, e) = agm_ke(k2)?;
            return Ok((Complex64::new(k, 0.0), Complex64::new(e, 0.0)));
        }
        // Reciprocal-modulus transformation: K(m1), E(m1) at m1 = 1/k^2 carry the real part,
        // the complementary parameter 1 - 1/k^2 the imaginary part.
        let k = k2.sqrt();
        let (k1, e1) = agm_ke(self.recip)?;
        let (k2c, e2c) = agm_ke(self.recip_complement)?;
        let kk = Complex64::new(k1 / k, -k2c / k);
        let ee = Complex64::new(k * e1 + (1.0 - k2) * k1 / k, k * e2c - k2c / k);
        if !(kk.re.is_finite() && kk.im.is_finite() && ee.re.is_finite() && ee.im.is_finite()) {
            return Err(ScatterError::NonFinite("elliptic_ke"));
        }
        Ok((kk, ee))
    }
}

/// Complete elliptic integrals of the first and second kind at real `k^2`.
///
/// For `k^2 > 1` the values are analytically continued with `sqrt(negative) = +i|.|`.
pub fn elliptic_ke(k_squared: f64) -> Result<(Complex64, Complex64)> {
    EllipticModulus::from_k_squared(k_squared)?.complete_integrals()
}

/// `C_n = ∫_0^{π/2} cos^{2n} p (1 - k^2 sin^2 p)^{-1/2} dp` for `n = 0..=nmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct CnSequence {
    pub values: Vec<Complex64>,
    pub modulus: EllipticModulus,
}

pub fn cn_sequence(modulus: &EllipticModulus, nmax: usize) -> Result<CnSequence> {
    let k2 = modulus.k_squared;
    let mut values = Vec::with_capacity(nmax + 1);
    if k2 == 0.0 {
        // Wallis: the root disappears and C_n = C_{n-1} (2n-1)/(2n).
        let mut c = Complex64::new(PI / 2.0, 0.0);
        values.push(c);
        for n in 1..=nmax {
            c *= (2.0 * n as f64 - 1.0) / (2.0 * n as f64);
            values.push(c);
        }
        return Ok(CnSequence {
            values,
            modulus: *modulus,
        });
    }
    let (kk, ee) = modulus.complete_integrals()?;
    values.push(kk);
    if nmax >= 1 {
        values.push((ee - (1.0 - k2) * kk) / k2);
    }
    for n in 2..=nmax {
        let nf = n as f64;
        let c = ((2.0 * nf - 2.0) * (2.0 * k2 - 1.0) * values[n - 1]
            + (2.0 * nf - 3.0) * (1.0 - k2) * values[n - 2])
            / ((2.0 * nf - 1.0) * k2);
        values.push(c);
    }
    Ok(CnSequence {
        values,
        modulus: *modulus,
    })
}

fn check_energy(energy: f64) -> Result<()> {
    if !energy.is_finite() || energy.abs() >= 4.0 {
        return Err(ScatterError::OutOfBand { energy });
    }
    Ok(())
}

fn check_band_energy(energy: f64) -> Result<()> {
    check_energy(energy)?;
    let k2 = 16.0 / (16.0 - energy * energy);
    if (k2 - 1.0).abs() <= TOL_DEGENERATE {
        return Err(ScatterError::BandCenter { energy });
    }
    Ok(())
}

/// Closed-form value for one `n` from the `C` sequence, together with its estimated
/// relative rounding error (sum of term magnitudes over the magnitude of the sum).
fn closed_form_term(c: &[Complex64], n: usize, inv_prefactor: Complex64) -> (Complex64, f64) {
    if n == 0 {
        return (c[0].conj() * inv_prefactor, f64::EPSILON);
    }
    // a_m = 4^n n (2n-m-1)! / (4^m m! (2n-2m)!), with a_0 = 4^n / 2.
    let nf = n as f64;
    let mut a = 0.5 * 4f64.powi(n as i32);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for m in 0..=n {
        let term = c[n - m].conj() * a;
        if m % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        abs_sum += term.norm();
        if m < n {
            let mf = m as f64;
            a *= (2.0 * nf - 2.0 * mf) * (2.0 * nf - 2.0 * mf - 1.0)
                / (4.0 * (mf + 1.0) * (2.0 * nf - mf - 1.0));
        }
    }
    let rel = f64::EPSILON * abs_sum / sum.norm().max(f64::MIN_POSITIVE);
    (sum * inv_prefactor, rel)
}

/// `J(E, n)` for `E > 0` and `n = 0..=nmax`.
fn j_nonnegative(energy: f64, nmax: usize) -> Result<Vec<Complex64>> {
    let modulus = EllipticModulus::from_energy(energy)?;
    // 1/(i sqrt(1 - (E/4)^2))
    let s = (1.0 - energy * energy / 16.0).sqrt();
    let inv_prefactor = Complex64::new(0.0, -1.0 / s);
    let z = energy * energy / 8.0 - 1.0;

    let c = cn_sequence(&modulus, nmax.min(1))?;
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(closed_form_term(&c.values, 0, inv_prefactor).0);
    if nmax == 0 {
        return Ok(out);
    }
    out.push(closed_form_term(&c.values, 1, inv_prefactor).0);

    // Closed form while the alternating sum keeps its digits.
    let mut gated_at = nmax + 1;
    if nmax >= 2 {
        let probe = nmax.min(32);
        let c = cn_sequence(&modulus, probe)?;
        for n in 2..=probe {
            let (v, rel) = closed_form_term(&c.values, n, inv_prefactor);
            if rel > CLOSED_FORM_GATE {
                gated_at = n;
                break;
            }
            out.push(v);
        }
        if gated_at == nmax + 1 && probe < nmax {
            gated_at = probe + 1;
        }
    }
    if gated_at <= nmax {
        // J satisfies the Legendre Q_{n-1/2}(z) recurrence; it is stable upward for |z| < 1.
        let mut jm1 = out[0];
        let mut j = out[1];
        for n in 1..nmax {
            let nf = n as f64;
            let next = (2.0 * nf * z * j - (nf - 0.5) * jm1) / (nf + 0.5);
            jm1 = j;
            j = next;
            if n + 1 >= gated_at {
                out.push(next);
            }
        }
    }
    debug_assert_eq!(out.len(), nmax + 1);
    if out.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(ScatterError::NonFinite("j_value"));
    }
    Ok(out)
}

/// `J(E, n)` for any integer `n` and `0 < |E| < 4`.
pub fn j_value(energy: f64, n: i64) -> Result<Complex64> {
    check_band_energy(energy)?;
    let m = n.unsigned_abs() as usize;
    let v = j_nonnegative(energy.abs(), m)?[m];
    Ok(if energy < 0.0 { -v.conj() } else { v })
}

/// `J(E, n)` from the alternating factorial sum alone, without the precision gate.
///
/// Loses roughly one digit per unit of `n`; exposed for cross-checks.
pub fn j_closed_form(energy: f64, n: i64) -> Result<Complex64> {
    check_band_energy(energy)?;
    let e = energy.abs();
    let m = n.unsigned_abs() as usize;
    let modulus = EllipticModulus::from_energy(e)?;
    let c = cn_sequence(&modulus, m)?;
    let s = (1.0 - e * e / 16.0).sqrt();
    let v = closed_form_term(&c.values, m, Complex64::new(0.0, -1.0 / s)).0;
    Ok(if energy < 0.0 { -v.conj() } else { v })
}

/// All `J(E, n)`, `|n| <= nmax`, at one energy; stored for `n >= 0` and mirrored.
#[derive(Debug, Clone, PartialEq)]
pub struct JTable {
    pub energy: f64,
    values: Vec<Complex64>,
}

impl JTable {
    pub fn nmax(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: i64) -> Complex64 {
        self.values[n.unsigned_abs() as usize]
    }

    /// Values for `n = 0..=nmax`.
    pub fn nonnegative(&self) -> &[Complex64] {
        &self.values
    }
}

pub fn j_table(energy: f64, nmax: usize) -> Result<JTable> {
    check_band_energy(energy)?;
    let mut values = j_nonnegative(energy.abs(), nmax)?;
    if energy < 0.0 {
        for v in values.iter_mut() {
            *v = -v.conj();
        }
    }
    Ok(JTable { energy, values })
}

/// Residue-reduced quadrature at finite `ε > 0` for `n = 0..=nmax`.
///
/// The `k2` integral is done exactly by residues,
/// `∫ e^{-ik n}/(w - 2cos k) dk = 2π ζ^{|n|}/(1/ζ - ζ)` with `ζ^2 - wζ + 1 = 0`, `|ζ| < 1`,
/// `w = E + iε - 2cos k1`; the periodic `k1` integral uses the midpoint rule, doubling the
/// grid until successive values agree to `1e-12`.
pub fn j_quadrature_oracle_all(energy: f64, nmax: usize, epsilon: f64) -> Result<Vec<Complex64>> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(ScatterError::InvalidInput(format!(
            "oracle needs epsilon > 0, got {epsilon}"
        )));
    }
    check_energy(energy)?;
    let mut m = ((16.0 / epsilon).ceil() as usize).max(64).next_power_of_two();
    let mut prev = residue_sum(energy, nmax, epsilon, m);
    const M_LIMIT: usize = 1 << 26;
    loop {
        m *= 2;
        let cur = residue_sum(energy, nmax, epsilon, m);
        let change = cur
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).norm() / a.norm().max(1.0))
            .fold(0.0, f64::max);
        if change < 1e-12 {
            return Ok(cur);
        }
        if m >= M_LIMIT {
            return Err(ScatterError::QuadratureNotConverged {
                what: "J oracle k1 grid",
                achieved: change,
                requested: 1e-12,
            });
        }
        prev = cur;
    }
}

/// Single-`n` form of [`j_quadrature_oracle_all`].
pub fn j_quadrature_oracle(energy: f64, n: i64, epsilon: f64) -> Result<Complex64> {
    let m = n.unsigned_abs() as usize;
    Ok(j_quadrature_oracle_all(energy, m, epsilon)?[m])
}

fn residue_sum(energy: f64, nmax: usize, epsilon: f64, m: usize) -> Vec<Complex64> {
    let h = 2.0 * PI / m as f64;
    let mut acc = vec![Complex64::new(0.0, 0.0); nmax + 1];
    // The integrand is even in k1; sum the half grid twice.
    for j in 0..m / 2 {
        let k1 = (j as f64 + 0.5) * h;
        let w = Complex64::new(energy - 2.0 * k1.cos(), epsilon);
        let root = (w * w - 4.0).sqrt();
        let mut zeta = 0.5 * (w - root);
        if zeta.norm() > 1.0 {
            zeta = 1.0 / zeta;
        }
        let base = 1.0 / (1.0 / zeta - zeta);
        let mut zn = Complex64::new(1.0, 0.0);
        for (n, a) in acc.iter_mut().enumerate() {
            *a += base * zn * (n as f64 * k1).cos();
            zn *= zeta;
        }
    }
    acc.iter().map(|a| 2.0 * h * a).collect()
}

/// Brute-force midpoint rule on an `m x m` grid of the original double integral at finite `ε`.
///
/// Independent of the residue reduction; used to cross-check it at moderate `ε`.
pub fn j_quadrature_2d(energy: f64, n: i64, epsilon: f64, m: usize) -> Complex64 {
    let h = 2.0 * PI / m as f64;
    let nf = n as f64;
    let cosines: Vec<f64> = (0..m).map(|j| 2.0 * (-PI + (j as f64 + 0.5) * h).cos()).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..m {
        let k1 = -PI + (a as f64 + 0.5) * h;
        for b in 0..m {
            let k2 = -PI + (b as f64 + 0.5) * h;
            let phase = Complex64::from_polar(1.0, -(k1 + k2) * nf);
            acc += phase / Complex64::new(energy - cosines[a] - cosines[b], epsilon);
        }
    }
    acc * h * h / (2.0 * PI)
}

/// Oracle value at `ε → 0+` by Richardson extrapolation over `ε_i = ε_0 / 2^i`.
#[derive(Debug, Clone)]
pub struct OracleEstimate {
    pub values: Vec<Complex64>,
    /// Largest relative change between the last two diagonal extrapolants.
    pub change: f64,
    pub levels: usize,
}

pub fn j_oracle_extrapolated(energy: f64, nmax: usize, tol: f64) -> Result<OracleEstimate> {
    check_band_energy(energy)?;
    let scale = energy.abs().min(4.0 - energy.abs()).min(1.0);
    let eps0 = 0.1 * scale;
    const MAX_LEVELS: usize = 14;
    let mut rows: Vec<Vec<Vec<Complex64>>> = Vec::new();
    let mut last_change = f64::INFINITY;
    for i in 0..MAX_LEVELS {
        let eps = eps0 / 2f64.powi(i as i32);
        let mut row = vec![j_quadrature_oracle_all(energy, nmax, eps)?];
        for j in 1..=i {
            let f = 2f64.powi(j as i32) - 1.0;
            let next: Vec<Complex64> = row[j - 1]
                .iter()
                .zip(&rows[i - 1][j - 1])
                .map(|(a, b)| a + (a - b) / f)
                .collect();
            row.push(next);
        }
        if i >= 2 {
            let cur = &row[i];
            let prev = &rows[i - 1][i - 1];
            last_change = cur
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).norm() / a.norm().max(1e-300))
                .fold(0.0, f64::max);
            if last_change < tol {
                return Ok(OracleEstimate {
                    values: cur.clone(),
                    change: last_change,
                    levels: i + 1,
                });
            }
        }
        rows.push(row);
    }
    Err(ScatterError::QuadratureNotConverged {
        what: "J oracle epsilon extrapolation",
        achieved: last_change,
        requested: tol,
    })
}
