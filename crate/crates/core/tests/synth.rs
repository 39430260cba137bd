mod common;

use common::{dirichlet_ones, mean, rng, variance};
use nalgebra::DMatrix;
use ppnmm::io::{read_matrix, write_matrix};
use ppnmm::model::*;
use ppnmm::synth::*;
use ppnmm::Exec;
use rand::Rng;

#[test]
fn two_endmember_draws_are_symmetric() {
    let mut g = rng(51);
    let n = 20_000;
    let first: Vec<f64> = (0..n)
        .map(|_| {
            let a = sample_truncated_simplex(2, 0.9, &mut g).unwrap();
            assert!(a.iter().all(|v| *v > 0.1 && *v < 0.9));
            a[0]
        })
        .collect();
    assert!((mean(&first) - 0.5).abs() < 3.0 * (variance(&first) / n as f64).sqrt());
}

#[test]
fn ceiling_holds_for_three_endmembers() {
    let mut g = rng(52);
    for _ in 0..10_000 {
        let a = sample_truncated_simplex(3, 0.9, &mut g).unwrap();
        assert!(a.iter().copied().fold(0.0, f64::max) < 0.9);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn acceptance_fraction_matches_volume_ratio() {
    let mut g = rng(53);
    // oracle: plain uniform simplex draws, count those below the ceiling
    let n = 200_000;
    let inside = (0..n)
        .filter(|_| dirichlet_ones(3, &mut g).iter().all(|v| *v < 0.9))
        .count() as f64;
    let p_oracle = inside / n as f64;
    let se_oracle = (p_oracle * (1.0 - p_oracle) / n as f64).sqrt();
    // each corner cut off by a_r >= 0.9 holds (1 - 0.9)^2 of the area
    assert!((p_oracle - 0.97).abs() < 3.0 * se_oracle);

    let draws = 100_000;
    let tries: usize = (0..draws)
        .map(|_| sample_truncated_simplex_counted(3, 0.9, &mut g).unwrap().1)
        .sum();
    let p_hat = draws as f64 / tries as f64;
    let se = (p_hat * (1.0 - p_hat) / tries as f64).sqrt();
    let se_diff = (se * se + se_oracle * se_oracle).sqrt();
    assert!((p_hat - p_oracle).abs() < 3.0 * se_diff, "{p_hat} vs {p_oracle}");
}

#[test]
fn impossible_ceiling_is_rejected() {
    let mut g = rng(54);
    assert!(sample_truncated_simplex(3, 1.0 / 3.0, &mut g).is_err());
    assert!(sample_truncated_simplex(4, 0.2, &mut g).is_err());
}

fn golden_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/endmembers_r3_l207_seed2024.ppnm")
}

fn golden_endmembers() -> EndmemberMatrix {
    let mut g = rng(2024);
    procedural_endmembers(3, 207, &mut g).unwrap()
}

#[test]
fn procedural_endmembers_match_golden_file() {
    let m = golden_endmembers();
    let path = golden_path();
    if std::env::var_os("PPNMM_BLESS").is_some() {
        write_matrix(m.data(), &path).unwrap();
    }
    let frozen = read_matrix(&path).unwrap();
    assert_eq!(m.data(), &frozen);
}

#[test]
fn procedural_endmembers_are_bounded_and_separated() {
    let mut g = rng(55);
    for _ in 0..50 {
        let r = g.random_range(2..=6);
        let l = g.random_range(r.max(10)..120);
        let m = procedural_endmembers(r, l, &mut g).unwrap();
        assert!(m.data().iter().all(|v| (0.05..=0.95).contains(v)));
        for i in 0..r {
            for j in i + 1..r {
                let (a, b) = (m.data().column(i), m.data().column(j));
                let angle = (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos();
                assert!(angle >= MIN_ENDMEMBER_SAM);
            }
        }
    }
    assert!(procedural_endmembers(5, 4, &mut g).is_err());
}

fn spec(model: MixingModel) -> SynthSpec {
    SynthSpec {
        n_rows: 6,
        n_cols: 7,
        n_endmembers: 3,
        n_bands: 12,
        model,
        seed: 9,
        ..SynthSpec::default()
    }
}

#[test]
fn clean_signal_is_reproduced_by_the_forward_model() {
    let (_, t) = generate(&spec(MixingModel::Ppnmm), Exec::Sequential).unwrap();
    let NonlinearityTruth::Polynomial(b) = &t.nonlinearity else {
        panic!("expected polynomial truth")
    };
    let b = NonlinearityVector::new(b.clone()).unwrap();
    let x = ppnmm_image(&t.m_true, &t.a_true, &b).unwrap();
    assert!((x - &t.clean).amax() <= 1e-14);
    assert!(b.as_slice().iter().all(|v| (-0.3..0.3).contains(v)));

    let (_, t) = generate(&spec(MixingModel::Lmm), Exec::Sequential).unwrap();
    assert!((t.m_true.data() * t.a_true.data() - &t.clean).amax() <= 1e-15);
    assert_eq!(t.nonlinearity, NonlinearityTruth::None);
}

#[test]
fn bilinear_signal_matches_pairwise_formula() {
    let (_, t) = generate(&spec(MixingModel::Gbm), Exec::Sequential).unwrap();
    let NonlinearityTruth::Bilinear(gamma) = &t.nonlinearity else {
        panic!("expected bilinear truth")
    };
    assert_eq!(gamma.nrows(), 3);
    let m = t.m_true.data();
    let a = t.a_true.data();
    let pairs = [(0, 1), (0, 2), (1, 2)];
    for n in 0..a.ncols() {
        let mut x = m * a.column(n);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            x += m.column(i).component_mul(&m.column(j)) * (gamma[(k, n)] * a[(i, n)] * a[(j, n)]);
        }
        assert!((x - t.clean.column(n)).amax() <= 1e-14);
    }
    assert!(gamma.iter().all(|v| (0.0..1.0).contains(v)));
}

#[test]
fn noise_has_the_requested_variance() {
    let s = SynthSpec {
        n_rows: 40,
        n_cols: 50,
        noise_sigma2: 4e-4,
        ..spec(MixingModel::Lmm)
    };
    let (y, t) = generate(&s, Exec::Parallel).unwrap();
    let e: Vec<f64> = (y.data() - &t.clean).iter().copied().collect();
    let n = e.len() as f64;
    // sample variance of a Gaussian has standard error sigma^2 sqrt(2 / n)
    assert!((variance(&e) - 4e-4).abs() < 3.0 * 4e-4 * (2.0 / n).sqrt());
    assert!(mean(&e).abs() < 3.0 * (4e-4 / n).sqrt());
}

#[test]
fn snr_of_constant_signal() {
    let x = DMatrix::from_element(10, 20, 0.1);
    // |X|^2 / (N L s2) = 0.01 / 1e-4 = 100
    assert!((snr_db(&x, 1e-4) - 20.0).abs() < 1e-12);
}

#[test]
fn generation_is_deterministic() {
    let s = spec(MixingModel::Gbm);
    let (y1, t1) = generate(&s, Exec::Sequential).unwrap();
    let (y2, t2) = generate(&s, Exec::Parallel).unwrap();
    assert_eq!(y1, y2);
    assert_eq!(t1, t2);
    let (y3, _) = generate(&SynthSpec { seed: 10, ..s }, Exec::Sequential).unwrap();
    assert_ne!(y1, y3);
}

#[test]
fn user_endmembers_are_used_verbatim() {
    let mut g = rng(56);
    let m = EndmemberMatrix::new(DMatrix::from_fn(12, 3, |_, _| g.random_range(0.1..0.9))).unwrap();
    let s = SynthSpec {
        endmembers: EndmemberSource::User(m.clone()),
        ..spec(MixingModel::Lmm)
    };
    let (_, t) = generate(&s, Exec::Sequential).unwrap();
    assert_eq!(t.m_true, m);
}

#[test]
fn invalid_specs_are_rejected() {
    let base = spec(MixingModel::Ppnmm);
    for bad in [
        SynthSpec { a_max: 0.3, ..base.clone() },
        SynthSpec { noise_sigma2: -1.0, ..base.clone() },
        SynthSpec { n_bands: 2, ..base.clone() },
        SynthSpec { n_rows: 0, ..base.clone() },
    ] {
        assert!(generate(&bad, Exec::Sequential).is_err());
    }
}
