use std::f64::consts::PI;

use hdqkit_core::grid::{GridFunction, GridSpec};
use hdqkit_core::linalg::C64;
use hdqkit_core::matrix_basis::synthesize_basis;
use hdqkit_core::symmetry::*;
use hdqkit_core::Side;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THETA: f64 = 2.0;

fn spec() -> GridSpec {
    GridSpec::standard(THETA)
}

fn test_function(seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q0 = rng.gen_range(-1.0..1.0);
    let p0 = rng.gen_range(-1.0..1.0);
    let s = rng.gen_range(1.0..1.5f64);
    let a = rng.gen_range(-0.5..0.5);
    GridFunction::from_fn(spec(), move |x| {
        let r2 = ((x[0] - q0).powi(2) + (x[1] - p0).powi(2)) / (s * s);
        C64::new((-r2).exp() * (1.0 + a * x[0] * x[1]), 0.0)
    })
}

#[test]
fn commutators_on_basis_functions() {
    let c = synthesize_basis(spec(), 3).unwrap();
    for (m, n) in [(0, 0), (1, 1)] {
        for j in 0..2 {
            let r = linear_commutator_check(j, c.get(m, n)).unwrap();
            assert!(r.max() <= 1e-3, "b_{m}{n}, x_{j}: {r:?}");
        }
    }
    let z = linear_commutator_check(0, &GridFunction::zeros(spec())).unwrap();
    assert_eq!(z.max(), 0.0);
    assert!(linear_commutator_check(2, c.get(0, 0)).is_err());
}

#[test]
fn heisenberg_relation() {
    let f = test_function(1);
    for (j, k) in [(0, 1), (1, 0)] {
        let r = heisenberg_check(j, k, &f).unwrap();
        assert!(r <= 1e-3, "({j},{k}): {r}");
    }
    assert!(heisenberg_check(0, 0, &f).unwrap() <= 1e-3);
}

#[test]
fn generator_actions() {
    let f = test_function(2);
    assert_eq!(SymmetryGenerator::Unit.act(&f, Side::Left).unwrap(), f);
    let w = SymmetryGenerator::PlaneWave(vec![0.3, 0.1]).act(&f, Side::Right).unwrap();
    assert!((w.norm() - f.norm()).abs() <= 1e-10 * f.norm());
    assert!(SymmetryGenerator::Coordinate(5).validate(1).is_err());
    assert!(SymmetryGenerator::PlaneWave(vec![0.0]).validate(1).is_err());
}

#[test]
fn sobolev_examples() {
    let c = synthesize_basis(spec(), 2).unwrap();
    let b = c.get(0, 0);
    let n0 = sobolev_norm(b, 0).unwrap();
    assert!((n0 - (2.0 * PI * THETA).sqrt()).abs() <= 1e-10);
    assert_eq!(sobolev_norm(&GridFunction::zeros(spec()), 3).unwrap(), 0.0);
    assert!(sobolev_norm(b, MAX_SOBOLEV_ORDER + 1).is_err());
}

#[test]
fn sobolev_monotone_and_equivalent() {
    for k in 0..=3 {
        let mut ratios = Vec::new();
        for seed in 0..10 {
            let f = test_function(seed);
            let a = sobolev_norm(&f, k).unwrap();
            let b = sobolev_norm(&f, k + 1).unwrap();
            assert!(a <= b * (1.0 + 1e-12));
            ratios.push(a / classical_sobolev_norm(&f, k));
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.05 && hi < 20.0, "k = {k}: {lo} .. {hi}");
    }
}

#[test]
fn schwartz_seminorm_examples() {
    let c = synthesize_basis(spec(), 1).unwrap();
    let b = c.get(0, 0);
    assert_eq!(schwartz_seminorm(b, &[0, 0], &[0, 0]).unwrap(), b.norm());
    // ‖q² b₀₀‖² = 4 ∫ q⁴ e^{−2q²/θ} dq ∫ e^{−2p²/θ} dp = 3π at θ = 2
    let v = schwartz_seminorm(b, &[2, 0], &[0, 0]).unwrap();
    assert!((v - (3.0 * PI).sqrt()).abs() <= 1e-6);
    assert!(schwartz_seminorm(b, &[5, 0], &[0, 0]).is_err());
    assert!(schwartz_seminorm(b, &[0], &[0, 0]).is_err());
}

#[test]
fn plane_wave_seminorm_grows_with_box() {
    // non-Schwartz witness; values are reported, the growth is what matters
    let mut last = 0.0;
    for l in [4.0, 6.0, 8.0] {
        let s = GridSpec::new(1, 64, l, THETA).unwrap();
        let w = GridFunction::from_fn(s, |y| hdqkit_core::moyal::plane_wave(&[0.5, 0.25], THETA, y));
        let v = schwartz_seminorm(&w, &[0, 0], &[0, 0]).unwrap();
        assert!(v > last);
        last = v;
    }
}

#[test]
fn bch_trivial_cases() {
    let x = [0.4, -1.1];
    let r = plane_wave_bch(&x, &[0.0, 0.0], THETA, None).unwrap();
    assert!((r.computed - C64::new(1.0, 0.0)).norm() <= 1e-14);
    let r = plane_wave_bch(&x, &x, THETA, None).unwrap();
    assert!((r.computed - C64::new(1.0, 0.0)).norm() <= 1e-14);
}

#[test]
fn bch_phase_confirmed_by_quadrature() {
    let r = plane_wave_bch(&[0.9, -0.5], &[0.3, 1.2], THETA, Some(spec())).unwrap();
    let o = r.oracle.unwrap();
    assert!((r.computed - o).norm() <= 1e-6, "{:?}", r);
    assert!((r.closed_form - o).norm() <= 1e-6);
}

#[test]
fn cocycle_is_exact_on_integer_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let v: Vec<Vec<f64>> = (0..3).map(|_| (0..2).map(|_| rng.gen_range(-9i32..10) as f64).collect()).collect();
        assert_eq!(cocycle_defect(&v[0], &v[1], &v[2]), 0.0);
    }
}

#[test]
fn star_exponential_ode() {
    let f = test_function(3);
    let c = spec().m / 2;
    let spots: Vec<usize> = [(c, c), (c + 3, c - 2), (c - 4, c + 5)].iter().map(|&(i, j)| i * spec().m + j).collect();
    for t in [0.0, 0.5, 1.3] {
        let r = star_exp_ode_residual(&[0.7, -0.4], t, &f, &spots).unwrap();
        assert!(r <= 1e-3, "t = {t}: {r}");
    }
}

proptest! {
    #[test]
    fn cocycle_identity(a in prop::collection::vec(-3.0f64..3.0, 6)) {
        let d = cocycle_defect(&a[0..2], &a[2..4], &a[4..6]);
        prop_assert!(d <= 1e-12);
        let lhs = bch_phase(&a[0..2], &a[2..4], THETA) * bch_phase(&[a[0] + a[2], a[1] + a[3]], &a[4..6], THETA);
        let rhs = bch_phase(&a[2..4], &a[4..6], THETA) * bch_phase(&a[0..2], &[a[2] + a[4], a[3] + a[5]], THETA);
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn composition_matches_closed_form(a in prop::collection::vec(-2.0f64..2.0, 4)) {
        let r = plane_wave_bch(&a[0..2], &a[2..4], THETA, None).unwrap();
        prop_assert!(r.residual <= 1e-12);
    }
}
