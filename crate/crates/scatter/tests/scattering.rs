mod common;

use std::f64::consts::{PI, SQRT_2};

use common::tanh_sinh;
use num_complex::Complex64;
use proptest::prelude::*;
use qwalk_scatter::lattice_integrals::j_value;
use qwalk_scatter::scattering_core::*;
use qwalk_scatter::toeplitz_solver::KernelCache;
use qwalk_scatter::ScatterError;

const U_DEFAULT: f64 = 2.0 + SQRT_2;

fn boson(l: usize) -> InteractionConfig {
    InteractionConfig::new(U_DEFAULT, l, Statistics::Boson)
}

fn standard_pair() -> MomentumPair {
    MomentumPair::new(-PI / 2.0, PI / 4.0, Statistics::Boson).unwrap()
}

/// Same energy, total momentum shifted by π.
fn exchanging_pair() -> MomentumPair {
    MomentumPair::new(PI / 4.0, PI / 2.0, Statistics::Boson).unwrap()
}

#[test]
fn pair_accessors_and_validation() {
    let p = standard_pair();
    assert!((p.energy() - SQRT_2).abs() < 1e-15);
    assert!((p.p_plus() + PI / 8.0).abs() < 1e-15);
    assert!((p.p_minus() + 3.0 * PI / 8.0).abs() < 1e-15);
    assert!(MomentumPair::new(0.5, 0.1, Statistics::Boson).is_err());
    assert!(MomentumPair::new(0.5, 0.1, Statistics::Distinguishable).is_ok());
    assert!(MomentumPair::new(PI, 0.1, Statistics::Distinguishable).is_err());
    assert_eq!(Statistics::Boson.b(), SQRT_2);
    assert_eq!(Statistics::Fermion.b(), 0.0);
}

#[test]
fn kernel_vanishes_without_interaction_or_for_fermions() {
    let cache = KernelCache::default();
    let free = InteractionConfig::new(0.0, 5, Statistics::Boson);
    let fermi = InteractionConfig::new(U_DEFAULT, 5, Statistics::Fermion);
    for &(k, p, e) in &[(0.1, 0.2, 1.0), (-1.0, 2.0, -2.5)] {
        assert_eq!(finite_kernel(k, p, e, &free, &cache).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(finite_kernel(k, p, e, &fermi, &cache).unwrap(), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn single_site_kernel_closed_form() {
    let cache = KernelCache::default();
    let e = 1.7;
    let v = finite_kernel(0.0, 0.0, e, &boson(0), &cache).unwrap();
    let expected = 2.0 * U_DEFAULT / (Complex64::new(2.0 * PI, 0.0) - U_DEFAULT * j_value(e, 0).unwrap());
    assert!((v - expected).norm() < 1e-14);
}

#[test]
fn kernel_depends_on_sums_only() {
    let cache = KernelCache::default();
    let cfg = boson(6);
    let e = SQRT_2;
    let a = finite_kernel(0.4 + 0.9, -0.3 + 0.2, e, &cfg, &cache).unwrap();
    let b = finite_kernel(1.3, -0.1, e, &cfg, &cache).unwrap();
    assert!((a - b).norm() < 1e-13 * a.norm());
}

#[test]
fn kernel_transpose_symmetry() {
    let cache = KernelCache::default();
    for l in [0usize, 3, 9] {
        let cfg = boson(l);
        let a = finite_kernel(0.8, -1.9, 2.1, &cfg, &cache).unwrap();
        let b = finite_kernel(1.9, -0.8, 2.1, &cfg, &cache).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }
}

#[test]
fn free_element_is_direct_delta() {
    let cache = KernelCache::default();
    let p = standard_pair();
    let cfg = InteractionConfig::new(0.0, 4, Statistics::Boson);
    let el = s_matrix_element(&p, &p, &cfg, &cache).unwrap();
    assert_eq!(el.delta_part, DeltaPart::Direct);
    assert_eq!(el.kernel, Complex64::new(0.0, 0.0));
    assert!(!el.off_shell);
}

#[test]
fn off_shell_is_flagged_and_statistics_checked() {
    let cache = KernelCache::default();
    let p = standard_pair();
    let q = MomentumPair::new(-1.0, 0.3, Statistics::Boson).unwrap();
    let el = s_matrix_element(&p, &q, &boson(3), &cache).unwrap();
    assert!(el.off_shell);
    assert_eq!(el.delta_part, DeltaPart::None);
    let d = MomentumPair::new(-PI / 2.0, PI / 4.0, Statistics::Distinguishable).unwrap();
    assert_eq!(
        s_matrix_element(&p, &d, &boson(3), &cache),
        Err(ScatterError::StatisticsMismatch)
    );
    let swapped = MomentumPair::new(PI / 4.0, -PI / 2.0, Statistics::Distinguishable).unwrap();
    let dcfg = InteractionConfig::new(U_DEFAULT, 3, Statistics::Distinguishable);
    assert_eq!(
        s_matrix_element(&d, &swapped, &dcfg, &cache).unwrap().delta_part,
        DeltaPart::Exchanged
    );
}

#[test]
fn momentum_exchange_fixture() {
    // Frozen: on-shell exchanging element at L = 5.
    let cache = KernelCache::default();
    let el = s_matrix_element(&standard_pair(), &exchanging_pair(), &boson(5), &cache).unwrap();
    assert!(!el.off_shell);
    assert_eq!(el.delta_part, DeltaPart::None);
    assert!(el.kernel.norm() > 0.1);
    let again = s_matrix_element(&standard_pair(), &exchanging_pair(), &boson(5), &cache).unwrap();
    assert_eq!(el.kernel, again.kernel);
}

#[test]
fn reflection_transmission_examples() {
    let (r, t) = asymptotic_rt(0.7, 0.7, 3.0);
    assert_eq!((r, t), (Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)));
    let (r, t) = asymptotic_rt(0.3, -1.2, 1e-12);
    assert!(r.norm() < 1e-11 && (t - 1.0).norm() < 1e-11);
}

#[test]
fn asymptotic_unitarity_on_grid() {
    for i in 0..10 {
        for j in 0..10 {
            let p1 = -PI + 2.0 * PI * (i as f64 + 0.31) / 10.0;
            let p2 = -PI + 2.0 * PI * (j as f64 + 0.77) / 10.0;
            let (r, t) = asymptotic_rt(p1, p2, U_DEFAULT);
            assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() <= 1e-14);
        }
    }
}

#[test]
fn standard_phase_is_minus_i() {
    let ph = asymptotic_boson_phase(-PI / 2.0, PI / 4.0, U_DEFAULT);
    assert!((ph - Complex64::new(0.0, -1.0)).norm() <= 1e-12);
    assert_eq!(asymptotic_boson_phase(-1.0, 0.5, 0.0), Complex64::new(1.0, 0.0));
    assert_eq!(asymptotic_boson_phase(0.4, PI - 0.4, 2.0), Complex64::new(-1.0, 0.0));
}

#[test]
fn finite_phase_converges_to_asymptotic_phase() {
    let cache = KernelCache::default();
    let target = asymptotic_boson_phase(-PI / 2.0, PI / 4.0, U_DEFAULT);
    let mut last = f64::INFINITY;
    for l in [5usize, 10, 20, 40, 80] {
        let d = (finite_boson_phase(&standard_pair(), &boson(l), &cache).unwrap() - target).norm();
        assert!(d < last, "L={l}");
        last = d;
    }
    assert!(last < 6e-3);
}

#[test]
fn exchange_weight_decays() {
    let cache = KernelCache::default();
    let ls: Vec<usize> = (0..=6).map(|i| 1 << i).collect();
    let rows = momentum_conservation_check(U_DEFAULT, Statistics::Boson, &standard_pair(), &exchanging_pair(), &ls, &cache).unwrap();
    assert!(rows[0].raw > 0.1, "single-site interaction exchanges momentum");
    for w in rows.windows(2) {
        assert!(w[1].normalized < w[0].normalized);
    }
    assert!(rows.last().unwrap().normalized < 0.05 * rows[0].normalized);
    let off = MomentumPair::new(-1.0, 0.3, Statistics::Boson).unwrap();
    assert!(momentum_conservation_check(U_DEFAULT, Statistics::Boson, &standard_pair(), &off, &ls, &cache).is_err());
}

#[test]
fn optical_theorem_for_kernel() {
    // Shell unitarity for distinguishable particles with A(K, P) = U c_K^† T^{-1} c_P:
    // -2 Im A(P, P) = ∫ dk1 Σ_{k2} |A(k1 + k2, P)|^2 / |2 sin k2| over 2cos k1 + 2cos k2 = E.
    let cache = KernelCache::default();
    let cfg = InteractionConfig::new(U_DEFAULT, 3, Statistics::Distinguishable);
    let e = SQRT_2;
    let p = -PI / 4.0;
    let a_pp = finite_kernel(p, p, e, &cfg, &cache).unwrap();
    let edge = (0.5 * e - 1.0).acos();
    let shell = tanh_sinh(-edge, edge, |k1, da, db| {
        let c = 0.5 * e - k1.cos();
        // 1 - c = cos k1 - cos(edge), written without cancellation near the ends.
        let one_minus_c = 2.0 * (0.5 * da).sin() * (0.5 * db).sin();
        let sin_q = (one_minus_c * (1.0 + c)).sqrt();
        let q = c.acos();
        let mut acc = 0.0;
        for k2 in [q, -q] {
            acc += finite_kernel(k1 + k2, p, e, &cfg, &cache).unwrap().norm_sqr();
        }
        Complex64::new(acc / (2.0 * sin_q), 0.0)
    });
    assert!((2.0 * a_pp.im + shell.re).abs() < 1e-9 * a_pp.norm(), "{} vs {}", -2.0 * a_pp.im, shell.re);
}

proptest! {
    #[test]
    fn phase_has_unit_modulus(p1 in -PI..PI, p2 in -PI..PI, u in -20.0f64..20.0) {
        prop_assert!((asymptotic_boson_phase(p1, p2, u).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rt_unitary(p1 in -PI..PI, p2 in -PI..PI, u in -20.0f64..20.0) {
        let (r, t) = asymptotic_rt(p1, p2, u);
        prop_assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() < 1e-14);
    }
}
