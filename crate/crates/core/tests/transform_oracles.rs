mod common;

use common::*;
use irisbench::transforms::{
    haar2d, hilbert_analytic, log_gabor_filter_row, LogGaborParams, TransformError,
};
use ndarray::Array2;
use rand::Rng;

#[test]
fn hilbert_matches_direct_dft_for_all_lengths() {
    let mut rng = rng(11);
    for n in 8..=64 {
        for _ in 0..3 {
            let x = random_vec(&mut rng, n);
            let got = hilbert_analytic(&x).unwrap();
            let want = analytic_oracle(&x);
            assert!(max_abs_diff(&got, &want) < 1e-9, "n = {n}");
            // Real part reproduces the input.
            for (z, v) in got.iter().zip(&x) {
                assert!((z.re - v).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn log_gabor_matches_direct_dft_for_all_lengths() {
    let mut rng = rng(12);
    for n in 8..=64 {
        let p =
            LogGaborParams::new(rng.random_range(0.03..0.3), rng.random_range(0.3..0.8)).unwrap();
        let x = random_vec(&mut rng, n);
        let got = log_gabor_filter_row(&x, p).unwrap();
        assert!(
            max_abs_diff(&got, &log_gabor_oracle(&x, p)) < 1e-9,
            "n = {n}"
        );
    }
}

#[test]
fn log_gabor_removes_dc() {
    let x = vec![3.5; 32];
    let y = log_gabor_filter_row(&x, LogGaborParams::default()).unwrap();
    assert!(y.iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn haar_block_formulas_and_energy() {
    let mut rng = rng(13);
    for (r, c) in [(2, 2), (4, 8), (32, 512), (6, 10)] {
        let m = Array2::from_shape_fn((r, c), |_| rng.random_range(-2.0..2.0));
        let h = haar2d(&m).unwrap();
        let want = haar_approx_oracle(&m);
        for (a, b) in h.approx.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        for i in 0..r / 2 {
            for j in 0..c / 2 {
                let (a, b) = (m[[2 * i, 2 * j]], m[[2 * i, 2 * j + 1]]);
                let (cc, d) = (m[[2 * i + 1, 2 * j]], m[[2 * i + 1, 2 * j + 1]]);
                assert!((h.detail_h[[i, j]] - (a + b - cc - d) / 2.0).abs() < 1e-12);
                assert!((h.detail_v[[i, j]] - (a - b + cc - d) / 2.0).abs() < 1e-12);
                assert!((h.detail_d[[i, j]] - (a - b - cc + d) / 2.0).abs() < 1e-12);
            }
        }
        let e_in: f64 = m.iter().map(|v| v * v).sum();
        let e_out: f64 = [&h.approx, &h.detail_h, &h.detail_v, &h.detail_d]
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum();
        assert!((e_in - e_out).abs() < 1e-9 * e_in.max(1.0));
    }
}

#[test]
fn haar_rejects_odd_dimensions() {
    let m = Array2::<f64>::zeros((3, 4));
    assert!(matches!(
        haar2d(&m),
        Err(TransformError::OddDimensions { .. })
    ));
}
