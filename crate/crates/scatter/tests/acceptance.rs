//! End-to-end checks of the headline numerical claims. Runs as a plain binary so every
//! check prints a PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use qwalk_scatter::gate_analysis::{
    compute_f, fidelity_scan, find_plateau, gate_report, infidelity_fit, optimize_sigma, QuadSettings,
    TwoQubitInput,
};
use qwalk_scatter::lattice_integrals::{j_oracle_extrapolated, j_value};
use qwalk_scatter::scattering_core::{
    asymptotic_boson_phase, asymptotic_rt, finite_boson_phase, momentum_conservation_check, InteractionConfig,
    MomentumPair, Statistics,
};
use qwalk_scatter::time_oracle::{run_time_oracle, OracleSettings};
use qwalk_scatter::toeplitz_solver::KernelCache;

const U_DEFAULT: f64 = 2.0 + SQRT_2;
const CENTERS: (f64, f64) = (PI / 4.0, -PI / 2.0);

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn boson(l: usize) -> InteractionConfig {
    InteractionConfig::new(U_DEFAULT, l, Statistics::Boson)
}

fn asymptotic_phase() -> Check {
    let ph = asymptotic_boson_phase(-PI / 2.0, PI / 4.0, U_DEFAULT);
    let d = (ph + Complex64::i()).norm();
    verdict(d <= 1e-12, format!("phase = {ph:.15}, |phase + i| = {d:.2e}"))
}

fn narrow_packet_limit() -> Check {
    let report = gate_report(CENTERS, 1e-4, &boson(10), &QuadSettings::default(), None)
        .map_err(|e| e.to_string())?;
    let d = (report.f_target - 0.7).abs();
    verdict(d <= 5e-3, format!("F(-π/2) = {:.6} at σ = 1e-4, L = 10", report.f_target))
}

fn l14_scan() -> Vec<(f64, f64)> {
    let sigmas: Vec<f64> = (1..=37).map(|i| 0.02 * i as f64).collect();
    fidelity_scan(CENTERS, U_DEFAULT, Statistics::Boson, &sigmas, &[14], &QuadSettings::default())
        .into_iter()
        .filter_map(|p| p.result.ok().map(|r| (p.sigma, r.f_target)))
        .collect()
}

fn high_fidelity(scan: &[(f64, f64)]) -> Check {
    let (s, f) = scan
        .iter()
        .copied()
        .fold((f64::NAN, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    verdict(f >= 0.95, format!("max F(-π/2) = {f:.5} at σ = {s:.2} over {} grid points, L = 14", scan.len()))
}

fn plateau(scan: &[(f64, f64)]) -> Check {
    match find_plateau(scan, 0.05, 0.02) {
        Some(p) => verdict(
            true,
            format!("σ ∈ [{:.2}, {:.2}] with variation {:.4}", p.sigma_lo, p.sigma_hi, p.variation),
        ),
        None => Err("no σ-interval of width 0.05 with variation < 0.02".into()),
    }
}

fn convergence_exponent() -> Check {
    let ls = [4usize, 6, 8, 12, 16, 24, 32];
    let q = QuadSettings::default();
    let mut infid = Vec::new();
    let mut parts = Vec::new();
    for &l in &ls {
        let best = optimize_sigma(CENTERS, &boson(l), (0.02, 0.75), 0.02, &q).map_err(|e| e.to_string())?;
        parts.push(format!("L={l}: σ*={:.3} 1-F={:.4}", best.sigma, best.infidelity()));
        infid.push(best.infidelity());
    }
    let lf: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
    let fit = infidelity_fit(&lf, &infid).map_err(|e| e.to_string())?;
    let ok = (-0.96..=-0.56).contains(&fit.exponent) && (0.12..=0.48).contains(&fit.prefactor);
    verdict(
        ok,
        format!(
            "1-F ≈ {:.3} L^{:.3} (rms log residual {:.3}); {}",
            fit.prefactor,
            fit.exponent,
            fit.residual,
            parts.join(", ")
        ),
    )
}

fn j_oracle_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    let mut at = (0.0, 0);
    for e in [-3.0, -SQRT_2, -0.5, 0.5, SQRT_2, 3.0] {
        let oracle = j_oracle_extrapolated(e, 10, 1e-9).map_err(|err| err.to_string())?;
        for n in 0..=10usize {
            let v = j_value(e, n as i64).map_err(|err| err.to_string())?;
            let rel = (v - oracle.values[n]).norm() / oracle.values[n].norm();
            if rel > worst {
                worst = rel;
                at = (e, n);
            }
        }
    }
    verdict(worst <= 1e-6, format!("max relative error {worst:.2e} at E = {:.4}, n = {}", at.0, at.1))
}

fn asymptotic_unitarity() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let p1 = -PI + 2.0 * PI * (i as f64 + 0.5) / 10.0;
            let p2 = -PI + 2.0 * PI * (j as f64 + 0.25) / 10.0;
            let (r, t) = asymptotic_rt(p1, p2, U_DEFAULT);
            worst = worst.max((r.norm_sqr() + t.norm_sqr() - 1.0).abs());
        }
    }
    verdict(worst <= 1e-14, format!("max ||R|^2 + |T|^2 - 1| = {worst:.2e} over 100 points"))
}

fn finite_to_asymptotic() -> Check {
    let cache = KernelCache::default();
    let pair = MomentumPair::new(-PI / 2.0, PI / 4.0, Statistics::Boson).map_err(|e| e.to_string())?;
    let mut dists = Vec::new();
    for l in [5usize, 10, 20, 40] {
        let v = finite_boson_phase(&pair, &boson(l), &cache).map_err(|e| e.to_string())?;
        dists.push((l, (v + Complex64::i()).norm()));
    }
    let decreasing = dists.windows(2).all(|w| w[1].1 < w[0].1);
    let text: Vec<String> = dists.iter().map(|(l, d)| format!("L={l}: {d:.5}")).collect();
    verdict(decreasing, format!("|value + i|: {}", text.join(", ")))
}

fn cross_oracle() -> Check {
    let input = TwoQubitInput::symmetric(CENTERS.0, CENTERS.1, 0.1).map_err(|e| e.to_string())?;
    let cfg = boson(5);
    let quad = compute_f(&input, &cfg, &QuadSettings::default(), None).map_err(|e| e.to_string())?;
    let report = run_time_oracle(&input, &cfg, &OracleSettings::default()).map_err(|e| e.to_string())?;
    let d = (quad.value - report.f_oracle).norm();
    verdict(
        d <= 0.05,
        format!("quadrature {:.6}, time evolution {:.6}, |Δ| = {d:.2e}", quad.value, report.f_oracle),
    )
}

fn exchange_restoration() -> Check {
    let cache = KernelCache::default();
    let inp = MomentumPair::new(-PI / 2.0, PI / 4.0, Statistics::Boson).map_err(|e| e.to_string())?;
    let out = MomentumPair::new(PI / 4.0, PI / 2.0, Statistics::Boson).map_err(|e| e.to_string())?;
    let ls: Vec<usize> = (0..=6).map(|i| 1 << i).collect();
    let rows = momentum_conservation_check(U_DEFAULT, Statistics::Boson, &inp, &out, &ls, &cache)
        .map_err(|e| e.to_string())?;
    let decreasing = rows.windows(2).all(|w| w[1].normalized < w[0].normalized);
    let toward_zero = rows.last().is_some_and(|r| r.normalized < 0.05 * rows[0].normalized);
    let text: Vec<String> = rows.iter().map(|r| format!("L={}: {:.4}", r.half_width, r.normalized)).collect();
    verdict(decreasing && toward_zero, format!("exchange weight {}", text.join(", ")))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, run: &dyn Fn() -> Check| {
        let t = Instant::now();
        let res = run();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("PASS {id:>2} {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failures += 1;
                println!("FAIL {id:>2} {name}: {d} [{secs:.1}s]");
            }
        }
    };
    report(1, "asymptotic phase", &asymptotic_phase);
    report(2, "narrow-packet limit", &narrow_packet_limit);
    let scan = l14_scan();
    report(3, "high fidelity at L = 14", &|| high_fidelity(&scan));
    report(4, "plateau at L = 14", &|| plateau(&scan));
    report(5, "infidelity power law", &convergence_exponent);
    report(6, "J oracle equivalence", &j_oracle_equivalence);
    report(7, "asymptotic unitarity", &asymptotic_unitarity);
    report(8, "finite-L phase convergence", &finite_to_asymptotic);
    report(9, "time-evolution cross-check", &cross_oracle);
    report(10, "momentum-exchange restoration", &exchange_restoration);
    if failures == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
