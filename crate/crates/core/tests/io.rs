mod common;

use common::rng;
use nalgebra::DMatrix;
use ppnmm::io::*;
use ppnmm::synth::{generate, MixingModel, SynthSpec};
use ppnmm::{Error, Exec};
use proptest::prelude::*;
use rand::Rng;
use std::path::Path;

#[test]
fn large_binary_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = rng(71);
    let m = DMatrix::from_fn(207, 2500, |_, _| g.random::<f64>() * 1e3 - 500.0);
    let path = dir.path().join("big.ppnm");
    write_matrix(&m, &path).unwrap();
    let back = read_matrix(&path).unwrap();
    assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(std::fs::metadata(&path).unwrap().len(), (HEADER_LEN + 8 * 207 * 2500) as u64);
}

#[test]
fn special_values_survive_both_formats() {
    let vals = [0.0, -0.0, f64::MIN_POSITIVE, 5e-324, 1.0 / 3.0, -1e300, f64::MAX, 0.1 + 0.2];
    let m = DMatrix::from_row_slice(2, 4, &vals);
    let bin = decode_matrix(&encode_matrix(&m), Path::new("x")).unwrap();
    assert!(m.iter().zip(bin.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    let csv = parse_matrix_csv(&matrix_to_csv(&m), Path::new("x")).unwrap();
    assert!(m.iter().zip(csv.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn truncated_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ppnm");
    let mut bytes = encode_matrix(&DMatrix::from_element(10, 10, 0.5));
    bytes.truncate(bytes.len() - 13);
    std::fs::write(&path, &bytes).unwrap();
    match read_matrix(&path) {
        Err(e @ Error::TruncatedPayload { expected: 100, .. }) => assert_eq!(e.code(), 31),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn header_failures_have_distinct_codes() {
    let p = Path::new("x");
    let good = encode_matrix(&DMatrix::from_element(2, 2, 1.0));
    let mut bad_magic = good.clone();
    bad_magic[0] = b'Q';
    let mut bad_dtype = good.clone();
    bad_dtype[5..8].copy_from_slice(b"f32");
    let mut huge = good.clone();
    huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
    let codes: Vec<u32> = [&good[..10], &bad_magic[..], &bad_dtype[..], &huge[..]]
        .iter()
        .map(|b| decode_matrix(b, p).unwrap_err().code())
        .collect();
    assert_eq!(codes, vec![30, 30, 30, 32]);
    assert_ne!(decode_matrix(&good[..good.len() - 8], p).unwrap_err().code(), 30);
}

fn csv_error_line(text: &str) -> usize {
    match parse_matrix_csv(text, Path::new("m.csv")) {
        Err(Error::CsvParse { line, .. }) => line,
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn csv_errors_are_located() {
    assert_eq!(csv_error_line("# 2 3\n1,2,3\n4,5\n"), 3);
    assert_eq!(csv_error_line("# 2 2\n1,2\n3,x\n"), 3);
    assert_eq!(csv_error_line("# 1 2\n1,2\n3,4\n"), 3);
    assert_eq!(csv_error_line("2 2\n1,2\n"), 1);
    assert_eq!(csv_error_line("# 3 1\n1\n2\n"), 3);
    assert_eq!(csv_error_line("\n\n# a b\n"), 3);
}

proptest! {
    #[test]
    fn csv_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let mut g = rng(seed);
        let m = DMatrix::from_fn(rows, cols, |_, _| (g.random::<f64>() - 0.5) * 10f64.powi(g.random_range(-30..30)));
        let back = parse_matrix_csv(&matrix_to_csv(&m), Path::new("p")).unwrap();
        prop_assert_eq!(m, back);
    }

    /// Parsing is total: accepted text validates, rejected text names a line
    /// inside the file.
    #[test]
    fn config_parse_is_total(lines in proptest::collection::vec(config_line(), 0..8)) {
        let text = lines.join("\n");
        match RunConfig::parse(&text, Path::new("c.cfg")) {
            Ok(cfg) => {
                prop_assert!(cfg.sampler.validate().is_ok());
                prop_assert!(cfg.synth.validate().is_ok());
            }
            Err(Error::ConfigParse { line, .. }) => {
                prop_assert!(line >= 1 && line <= lines.len().max(1));
            }
            Err(e) => prop_assert!(false, "unlocated error {e:?}"),
        }
    }
}

fn config_line() -> impl Strategy<Value = String> {
    let keys = prop::sample::select(vec![
        "n_mc", "n_burn", "thin", "seed", "epsilon_z", "nlf_min", "nlf_max", "adapt_low", "s2",
        "gamma", "rows", "bands", "endmembers", "model", "a_max", "noise_sigma2", "b_min", "bogus",
    ]);
    let values = prop::sample::select(vec![
        "0", "1", "3", "10", "50", "100", "0.5", "0.9", "-1", "1e-4", "lmm", "gbm", "ppnmm", "nan", "x",
    ]);
    prop_oneof![
        (keys, values).prop_map(|(k, v)| format!("{k} = {v}")),
        Just("# comment".to_string()),
        Just(String::new()),
        Just("no equals sign".to_string()),
    ]
}

#[test]
fn config_errors_point_at_lines() {
    let line_of = |text: &str| match RunConfig::parse(text, Path::new("c")) {
        Err(Error::ConfigParse { line, .. }) => line,
        other => panic!("unexpected {other:?}"),
    };
    assert_eq!(line_of("n_mc = 100\nfoo = 1\n"), 2);
    assert_eq!(line_of("seed = 1\n\nseed = 2\n"), 3);
    assert_eq!(line_of("# hi\nthin = -3\n"), 2);
    assert_eq!(line_of("n_mc = 100\nn_burn = 200\n"), 2);
    let ok = RunConfig::parse("n_mc = 100 # short\nn_burn = 20\nmodel = gbm\n", Path::new("c")).unwrap();
    assert_eq!(ok.sampler.n_mc, 100);
    assert_eq!(ok.synth.model, MixingModel::Gbm);
}

#[test]
fn scene_and_result_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        n_rows: 3,
        n_cols: 4,
        n_bands: 8,
        seed: 5,
        ..SynthSpec::default()
    };
    let (y, truth) = generate(&spec, Exec::Sequential).unwrap();
    write_truth(dir.path(), y.data(), &truth, &spec).unwrap();
    let back = read_truth(dir.path()).unwrap();
    assert_eq!(&back.image, y.data());
    assert_eq!(back.m_true, truth.m_true);
    assert_eq!(back.a_true, truth.a_true);
    assert!(back.b_true.is_some());
}
