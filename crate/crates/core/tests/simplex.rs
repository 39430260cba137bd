mod common;

use common::{dirichlet_ones, mean, rng};
use ppnmm::model::{stick_breaking_forward, stick_breaking_inverse};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Beta, Distribution};

#[test]
fn forward_examples() {
    assert_eq!(stick_breaking_forward(&[0.5, 0.5]).unwrap(), vec![0.5, 0.25, 0.25]);
    let a = stick_breaking_forward(&[0.3]).unwrap();
    assert!((a[0] - 0.7).abs() < 1e-15 && (a[1] - 0.3).abs() < 1e-15);
    assert!(stick_breaking_forward(&[0.5, 1.0]).is_err());
    assert!(stick_breaking_forward(&[0.0]).is_err());
}

#[test]
fn inverse_examples() {
    assert_eq!(stick_breaking_inverse(&[0.5, 0.25, 0.25]).unwrap(), vec![0.5, 0.5]);
    let z = stick_breaking_inverse(&[1.0 / 3.0; 3]).unwrap();
    assert!((z[0] - 2.0 / 3.0).abs() < 1e-15 && (z[1] - 0.5).abs() < 1e-15);
    assert!(stick_breaking_inverse(&[0.5, 0.6]).is_err());
    assert!(stick_breaking_inverse(&[1.0, 0.0]).is_err());
}

#[test]
fn forward_sums_to_one_everywhere() {
    let mut g = rng(41);
    for _ in 0..100_000 {
        let r = g.random_range(2..=10);
        let z: Vec<f64> = (0..r - 1).map(|_| g.random_range(f64::EPSILON..1.0)).collect();
        let a = stick_breaking_forward(&z).unwrap();
        assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(a.iter().all(|v| *v > 0.0));
    }
}

#[test]
fn round_trip_on_random_simplex_points() {
    let mut g = rng(42);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = dirichlet_ones(6, &mut g);
        let back = stick_breaking_forward(&stick_breaking_inverse(&a).unwrap()).unwrap();
        worst = a.iter().zip(&back).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }
    assert!(worst < 1e-12, "{worst}");
}

proptest! {
    #[test]
    fn inverse_after_forward_is_identity(z in proptest::collection::vec(0.01f64..0.99, 1..9)) {
        let back = stick_breaking_inverse(&stick_breaking_forward(&z).unwrap()).unwrap();
        for (x, y) in z.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

/// Independent Beta(R - r, 1) coordinates (r from 1) give a uniform point on
/// the simplex; compare means and covariances with the flat Dirichlet.
#[test]
fn beta_prior_pushes_forward_to_flat_dirichlet() {
    let (r, n) = (4usize, 10_000usize);
    let mut g = rng(43);
    let betas: Vec<Beta<f64>> = (1..r).map(|k| Beta::new((r - k) as f64, 1.0).unwrap()).collect();
    let draws: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z: Vec<f64> = betas.iter().map(|b| b.sample(&mut g)).collect();
            stick_breaking_forward(&z).unwrap()
        })
        .collect();
    let oracle: Vec<Vec<f64>> = (0..n).map(|_| dirichlet_ones(r, &mut g)).collect();
    // flat Dirichlet: mean 1/R, var (R-1)/(R^2 (R+1)), cov -1/(R^2 (R+1))
    let rf = r as f64;
    for i in 0..r {
        let xi: Vec<f64> = draws.iter().map(|a| a[i]).collect();
        let oi: Vec<f64> = oracle.iter().map(|a| a[i]).collect();
        let var = (rf - 1.0) / (rf * rf * (rf + 1.0));
        let se = (var / n as f64).sqrt();
        assert!((mean(&xi) - 1.0 / rf).abs() < 3.0 * se);
        assert!((mean(&oi) - 1.0 / rf).abs() < 3.0 * se);
        for j in i..r {
            let want = if i == j { var } else { -1.0 / (rf * rf * (rf + 1.0)) };
            let prod: Vec<f64> = draws.iter().map(|a| (a[i] - 1.0 / rf) * (a[j] - 1.0 / rf)).collect();
            let sd = common::variance(&prod).sqrt();
            assert!((mean(&prod) - want).abs() < 3.0 * sd / (n as f64).sqrt(), "cov {i}{j}");
        }
    }
}
