//! Independent reference implementations used as test oracles. Nothing here
//! calls into the crate's transform or encoder code.

#![allow(dead_code)]

use std::f64::consts::PI;

use irisbench::transforms::LogGaborParams;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct O(n²) forward DFT.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| {
                    v * Complex64::from_polar(1.0, -2.0 * PI * (k * t % n) as f64 / n as f64)
                })
                .sum()
        })
        .collect()
}

/// Direct O(n²) inverse DFT, normalized by 1/n.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|t| {
            x.iter()
                .enumerate()
                .map(|(k, v)| {
                    v * Complex64::from_polar(1.0, 2.0 * PI * (k * t % n) as f64 / n as f64)
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

fn real(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Analytic signal by definition: positive frequencies doubled, negative
/// removed, DC and (for even n) Nyquist untouched.
pub fn analytic_oracle(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut spectrum = dft(&real(x));
    for (k, v) in spectrum.iter_mut().enumerate() {
        let f = if k == 0 || 2 * k == n {
            1.0
        } else if 2 * k < n {
            2.0
        } else {
            0.0
        };
        *v *= f;
    }
    idft(&spectrum)
}

/// Log-Gabor response by definition, G(f) = exp(-ln²(f/f0) / (2 ln²(σ/f0)))
/// on the non-negative frequencies k/n, k = 1..=n/2, zero elsewhere.
pub fn log_gabor_oracle(x: &[f64], p: LogGaborParams) -> Vec<Complex64> {
    let n = x.len();
    let mut spectrum = dft(&real(x));
    for (k, v) in spectrum.iter_mut().enumerate() {
        let g = if k == 0 || k > n / 2 {
            0.0
        } else {
            let f = k as f64 / n as f64;
            (-(f / p.f0).ln().powi(2) / (2.0 * p.sigma_ratio.ln().powi(2))).exp()
        };
        *v *= g;
    }
    idft(&spectrum)
}

/// 2x2 block average scaled by 2 (orthonormal Haar LL band).
pub fn haar_approx_oracle(m: &Array2<f64>) -> Array2<f64> {
    let (r, c) = m.dim();
    Array2::from_shape_fn((r / 2, c / 2), |(i, j)| {
        (m[[2 * i, 2 * j]]
            + m[[2 * i, 2 * j + 1]]
            + m[[2 * i + 1, 2 * j]]
            + m[[2 * i + 1, 2 * j + 1]])
            / 2.0
    })
}

const TOL: f64 = 1e-10;

fn peak(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Straight-line HH1 / HH2 reference. `lines` is the angular-line matrix
/// (radii x angles) of the normalized iris.
pub fn hh_reference(lines: &Array2<f64>, s: usize, two_scale: bool) -> Vec<bool> {
    let approx = haar_approx_oracle(lines);
    let flat: Vec<f64> = approx.iter().copied().collect();
    let mut bits = Vec::new();
    for chunk in flat.chunks(s) {
        let mut q: Vec<f64> = analytic_oracle(chunk).iter().map(|z| z.im).collect();
        if two_scale {
            let h = s / 2;
            let lo = analytic_oracle(&chunk[..h]);
            let hi = analytic_oracle(&chunk[h..]);
            for (qi, z) in q.iter_mut().zip(lo.iter().chain(&hi)) {
                *qi += z.im;
            }
        }
        let tol = TOL * peak(chunk);
        bits.extend(q.iter().map(|&v| v > tol));
    }
    bits
}

/// Straight-line LGE reference: two bits (Re > 0, Im > 0) per filtered
/// sample, rows of `lines` in order.
pub fn lge_reference(lines: &Array2<f64>, p: LogGaborParams) -> Vec<bool> {
    let mut bits = Vec::new();
    for row in lines.rows() {
        let row: Vec<f64> = row.to_vec();
        let tol = TOL * peak(&row);
        for z in log_gabor_oracle(&row, p) {
            bits.push(z.re > tol);
            bits.push(z.im > tol);
        }
    }
    bits
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Standard normal upper tail by numerical integration of the density
/// (Simpson's rule on [z, z + 40]), independent of any erf implementation.
pub fn normal_upper_tail(z: f64) -> f64 {
    let n = 200_000;
    let h = 40.0 / n as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    let mut acc = phi(z) + phi(z + 40.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * phi(z + i as f64 * h);
    }
    acc * h / 3.0
}
