//! Cross approximation against dense oracles.

use lrpath::cross::{cross_approximate, eps_rank, zeta, zeta_rank, CrossConfig, FnMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn orthonormal(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    random_matrix(rng, r, c).qr().q()
}

fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn recovers_random_low_rank(seed in any::<u64>(), rows in 20usize..400, cols in 5usize..60, r in 1usize..13) {
        let r = r.min(cols).min(rows);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, rows, r) * random_matrix(&mut rng, r, cols);
        let cfg = CrossConfig { eps: 1e-10, seed, ..Default::default() };
        let f = cross_approximate(&a, &cfg).unwrap();
        let err = (f.to_dense() - &a).norm() / a.norm();
        prop_assert!(f.converged);
        prop_assert!(err <= 10.0 * cfg.eps, "error {err:e} rank {}", f.rank());
        prop_assert_eq!(f.rank(), r);
    }

    #[test]
    fn zeta_rank_is_optimal_truncation(sv in proptest::collection::vec(0.0f64..10.0, 1..40), eps in 1e-6f64..0.5) {
        let mut sv = sv;
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let s = zeta_rank(&sv, eps);
        if sv.iter().all(|&x| x == 0.0) {
            prop_assert_eq!(s, 0);
        } else {
            prop_assert!(s >= 1 && s <= sv.len());
            prop_assert!(zeta(&sv, s) < eps || s == sv.len());
            if s > 1 {
                prop_assert!(zeta(&sv, s - 1) >= eps);
            }
        }
    }
}

/// Matrices with a prescribed geometric spectrum: the cross rank equals the
/// ζ-rank of the full SVD.
#[test]
fn rank_matches_full_svd_on_prescribed_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let eps = 1e-8;
    let mut checked = 0;
    for case in 0..60 {
        let (m, n) = (rng.random_range(40..160), rng.random_range(20..50));
        let decay: f64 = rng.random_range(0.05..0.6);
        let k = n.min(m);
        let sigma: Vec<f64> = (0..k).map(|i| decay.powi(i as i32)).collect();
        let u = orthonormal(&mut rng, m, k);
        let v = orthonormal(&mut rng, n, k);
        let a = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sigma)) * v.transpose();
        let full = singular_values(&a);
        let expected = zeta_rank(&full, eps);
        // a tail ratio within 20% of the threshold is decided by roundoff
        let z = zeta(&full, expected);
        let z_prev = if expected > 1 { zeta(&full, expected - 1) } else { f64::INFINITY };
        if z > eps / 1.2 || z_prev < eps * 1.2 {
            continue;
        }
        let f = cross_approximate(&a, &CrossConfig { eps, seed: case, ..Default::default() }).unwrap();
        assert_eq!(f.rank(), expected, "case {case}: decay {decay}");
        checked += 1;
    }
    assert!(checked >= 40, "only {checked} well-separated spectra");
}

#[test]
fn eps_rank_counts_relative_singular_values() {
    assert_eq!(eps_rank(&[1.0, 0.5, 1e-9, 1e-12], 1e-8), 2);
    assert_eq!(eps_rank(&[], 1e-8), 0);
}

#[test]
fn lazy_function_matrix() {
    // smooth kernel with fast singular decay
    let m = FnMatrix::new(300, 80, |i, j| 1.0 / (1.0 + i as f64 / 50.0 + j as f64 / 20.0));
    let f = cross_approximate(&m, &CrossConfig { eps: 1e-9, ..Default::default() }).unwrap();
    let dense = DMatrix::from_fn(300, 80, |i, j| 1.0 / (1.0 + i as f64 / 50.0 + j as f64 / 20.0));
    let err = (f.to_dense() - &dense).norm() / dense.norm();
    assert!(err < 1e-8, "error {err:e}");
    assert!(f.rank() < 20);
    assert!(f.evaluations < 300 * 80);
}
