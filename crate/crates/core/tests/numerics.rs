mod common;

use common::{random_hurwitz, random_matrix, random_pd, random_pdd, rng, spectral_abscissa};
use proptest::prelude::*;
use rand::Rng;
use signid_core::linalg::{
    is_positive_definite, lyapunov_residual, lyapunov_scale, solve_lyapunov_forward, Matrix, SymmetricMatrix,
};
use signid_core::model::is_hurwitz;

#[test]
fn hurwitz_matches_eigenvalue_oracle_on_1000_matrices() {
    let mut r = rng(11);
    let mut stable = 0;
    let mut near_boundary = 0;
    for k in 0..1000 {
        let d = 1 + k % 5;
        let mut a = random_matrix(&mut r, d, -1.0, 1.0);
        // Shift the diagonal so roughly half the draws are stable.
        let shift = r.gen_range(-1.5..0.5);
        for i in 0..d {
            a.set(i, i, a.get(i, i) + shift);
        }
        let abscissa = spectral_abscissa(&a);
        if abscissa.abs() < 1e-9 {
            near_boundary += 1;
            continue;
        }
        let expected = abscissa < 0.0;
        stable += usize::from(expected);
        assert_eq!(is_hurwitz(&a), expected, "draw {k}: abscissa {abscissa:e}, A = {a:?}");
    }
    assert_eq!(near_boundary, 0);
    assert!(
        stable > 200 && stable < 800,
        "unbalanced oracle sample: {stable} stable"
    );
}

#[test]
fn hurwitz_on_4x4_sampler_scale() {
    let mut r = rng(12);
    for k in 0..1000 {
        let a = random_matrix(&mut r, 4, -10.0, 10.0);
        let abscissa = spectral_abscissa(&a);
        if abscissa.abs() < 1e-9 {
            continue;
        }
        assert_eq!(is_hurwitz(&a), abscissa < 0.0, "draw {k}");
    }
}

#[test]
fn lyapunov_residual_on_10k_random_pairs() {
    let mut r = rng(13);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let d = 1 + k % 6;
        let a = random_hurwitz(&mut r, d);
        let dm = if k % 2 == 0 {
            random_pdd(&mut r, d)
        } else {
            random_pd(&mut r, d)
        };
        let sigma = solve_lyapunov_forward(&a, &dm).unwrap();
        let rel = lyapunov_residual(&a, &sigma, &dm) / lyapunov_scale(&a, &sigma, &dm);
        assert!(rel <= 1e-8, "draw {k}: relative residual {rel:e}");
        assert!(is_positive_definite(&sigma), "draw {k}: Σ not PD");
        worst = worst.max(rel);
    }
    assert!(worst < 1e-10, "worst relative residual {worst:e}");
}

#[test]
fn pd_test_matches_sylvester_on_random_correlation_triples() {
    let mut r = rng(14);
    for _ in 0..1000 {
        let (a, b, c) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let det: f64 = 1.0 + 2.0 * a * b * c - (a * a + b * b + c * c);
        if det.abs() < 1e-9 {
            continue;
        }
        let s = SymmetricMatrix::from_upper(3, vec![1.0, a, b, 1.0, c, 1.0]).unwrap();
        assert_eq!(is_positive_definite(&s), det > 0.0, "ρ = ({a}, {b}, {c})");
    }
}

fn hurwitz_strategy() -> impl Strategy<Value = (Matrix, SymmetricMatrix)> {
    (1usize..=5, any::<u64>()).prop_map(|(d, seed)| {
        let mut r = rng(seed);
        (random_hurwitz(&mut r, d), random_pdd(&mut r, d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forward_solve_round_trip((a, d) in hurwitz_strategy()) {
        let sigma = solve_lyapunov_forward(&a, &d).unwrap();
        prop_assert!(lyapunov_residual(&a, &sigma, &d) <= 1e-8 * lyapunov_scale(&a, &sigma, &d));
    }

    #[test]
    fn sigma_is_invariant_under_joint_rescaling((a, d) in hurwitz_strategy(), k in 0usize..3) {
        let factor = [0.5, 2.0, 10.0][k];
        let base = solve_lyapunov_forward(&a, &d).unwrap();
        let scaled = solve_lyapunov_forward(&a.scaled(factor), &d.scaled(factor)).unwrap();
        let norm = base.max_abs();
        for i in 0..base.dim() {
            for j in i..base.dim() {
                prop_assert!((base.get(i, j) - scaled.get(i, j)).abs() <= 1e-8 * norm);
            }
        }
    }

    #[test]
    fn residual_scales_linearly((a, d) in hurwitz_strategy(), factor in 0.1f64..20.0) {
        let sigma = SymmetricMatrix::identity(a.rows());
        let r1 = lyapunov_residual(&a, &sigma, &d);
        let r2 = lyapunov_residual(&a.scaled(factor), &sigma, &d.scaled(factor));
        prop_assert!((r2 - factor * r1).abs() <= 1e-9 * (1.0 + factor * r1));
    }
}
