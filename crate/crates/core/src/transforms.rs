//! Single-level 2-D Haar decomposition, discrete analytic signal, and the
//! 1-D Log-Gabor frequency response.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransformError {
    #[error("matrix dimensions {rows}x{cols} must both be even")]
    OddDimensions { rows: usize, cols: usize },
    #[error("signal length {len} is below the minimum of {min}")]
    LengthTooShort { len: usize, min: usize },
    #[error("invalid Log-Gabor parameters: {0}")]
    InvalidParams(String),
}

/// Frames of a single-level orthonormal 2-D Haar decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarDecomposition {
    pub approx: Array2<f64>,
    pub detail_h: Array2<f64>,
    pub detail_v: Array2<f64>,
    pub detail_d: Array2<f64>,
}

/// Orthonormal single-level Haar transform. For each 2x2 block `[a b; c d]`:
/// LL = (a+b+c+d)/2, LH = (a+b-c-d)/2, HL = (a-b+c-d)/2, HH = (a-b-c+d)/2.
pub fn haar2d(input: &Array2<f64>) -> Result<HaarDecomposition, TransformError> {
    let (rows, cols) = input.dim();
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(TransformError::OddDimensions { rows, cols });
    }
    let half = (rows / 2, cols / 2);
    let mut out = HaarDecomposition {
        approx: Array2::zeros(half),
        detail_h: Array2::zeros(half),
        detail_v: Array2::zeros(half),
        detail_d: Array2::zeros(half),
    };
    for i in 0..half.0 {
        for j in 0..half.1 {
            let a = input[[2 * i, 2 * j]];
            let b = input[[2 * i, 2 * j + 1]];
            let c = input[[2 * i + 1, 2 * j]];
            let d = input[[2 * i + 1, 2 * j + 1]];
            out.approx[[i, j]] = (a + b + c + d) / 2.0;
            out.detail_h[[i, j]] = (a + b - c - d) / 2.0;
            out.detail_v[[i, j]] = (a - b + c - d) / 2.0;
            out.detail_d[[i, j]] = (a - b - c + d) / 2.0;
        }
    }
    Ok(out)
}

/// Forward/inverse FFT pair for one signal length.
#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    len: usize,
}

impl FftPair {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    /// Forward DFT, per-bin gain, normalized inverse DFT.
    fn filter(&self, signal: &[f64], gain: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        for (bin, g) in buf.iter_mut().zip(gain) {
            *bin *= g;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }
}

/// Analytic-signal bin weights: DC (and Nyquist for even lengths) kept,
/// strictly positive frequencies doubled, negative frequencies zeroed.
pub fn analytic_bin_weights(len: usize) -> Vec<f64> {
    let mut w = vec![0.0; len];
    if len == 0 {
        return w;
    }
    w[0] = 1.0;
    for wk in w.iter_mut().take(len.div_ceil(2)).skip(1) {
        *wk = 2.0;
    }
    if len.is_multiple_of(2) {
        w[len / 2] = 1.0;
    }
    w
}

/// Reusable analytic-signal transform for a fixed length.
#[derive(Clone)]
pub struct AnalyticTransform {
    fft: FftPair,
    weights: Vec<f64>,
}

impl AnalyticTransform {
    pub fn new(len: usize) -> Result<Self, TransformError> {
        if len < 2 {
            return Err(TransformError::LengthTooShort { len, min: 2 });
        }
        Ok(Self {
            fft: FftPair::new(len),
            weights: analytic_bin_weights(len),
        })
    }

    pub fn len(&self) -> usize {
        self.fft.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `signal.len()` must equal [`Self::len`].
    pub fn apply(&self, signal: &[f64]) -> Vec<Complex64> {
        assert_eq!(signal.len(), self.fft.len, "signal length mismatch");
        self.fft.filter(signal, &self.weights)
    }
}

/// Discrete analytic signal; the imaginary part is the Hilbert transform.
pub fn hilbert_analytic(signal: &[f64]) -> Result<Vec<Complex64>, TransformError> {
    Ok(AnalyticTransform::new(signal.len())?.apply(signal))
}

/// Log-Gabor center frequency (cycles/sample) and bandwidth ratio σ/f0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGaborParams {
    pub f0: f64,
    pub sigma_ratio: f64,
}

impl Default for LogGaborParams {
    fn default() -> Self {
        Self {
            f0: 1.0 / 18.0,
            sigma_ratio: 0.5,
        }
    }
}

impl LogGaborParams {
    pub fn new(f0: f64, sigma_ratio: f64) -> Result<Self, TransformError> {
        let p = Self { f0, sigma_ratio };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        if !(self.f0 > 0.0 && self.f0 < 0.5) {
            return Err(TransformError::InvalidParams(format!(
                "f0 = {} outside (0, 0.5)",
                self.f0
            )));
        }
        if !(self.sigma_ratio > 0.0 && self.sigma_ratio < 1.0) {
            return Err(TransformError::InvalidParams(format!(
                "sigma_ratio = {} outside (0, 1)",
                self.sigma_ratio
            )));
        }
        Ok(())
    }
}

/// `exp(-0.5 · ln²(f/f0) / ln²(σ/f0))` for `f > 0`; zero at DC.
pub fn log_gabor_gain(f: f64, params: LogGaborParams) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    let num = (f / params.f0).ln();
    let den = params.sigma_ratio.ln();
    (-0.5 * num * num / (den * den)).exp()
}

/// One-sided Log-Gabor bin gains for a length-`len` DFT: bins `0..=len/2`
/// take the gain at `k/len`, the remaining (negative) bins are zero.
pub fn log_gabor_bin_gains(len: usize, params: LogGaborParams) -> Vec<f64> {
    (0..len)
        .map(|k| {
            if k <= len / 2 {
                log_gabor_gain(k as f64 / len as f64, params)
            } else {
                0.0
            }
        })
        .collect()
}

/// Reusable Log-Gabor row filter for a fixed length.
#[derive(Clone)]
pub struct LogGaborFilter {
    fft: FftPair,
    gains: Vec<f64>,
}

impl LogGaborFilter {
    pub fn new(len: usize, params: LogGaborParams) -> Result<Self, TransformError> {
        if len < 4 {
            return Err(TransformError::LengthTooShort { len, min: 4 });
        }
        params.validate()?;
        Ok(Self {
            fft: FftPair::new(len),
            gains: log_gabor_bin_gains(len, params),
        })
    }

    pub fn apply(&self, signal: &[f64]) -> Vec<Complex64> {
        assert_eq!(signal.len(), self.fft.len, "signal length mismatch");
        self.fft.filter(signal, &self.gains)
    }
}

/// Complex Log-Gabor response of one (periodic) row.
pub fn log_gabor_filter_row(
    signal: &[f64],
    params: LogGaborParams,
) -> Result<Vec<Complex64>, TransformError> {
    Ok(LogGaborFilter::new(signal.len(), params)?.apply(signal))
}
