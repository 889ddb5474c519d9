//! Binary iris encoders.
//!
//! All encoders read the normalized segment through its angular-line view
//! (one line per radius, running around the iris):
//!
//! * **HH1**: Haar approximation frame, refolded into columns of `s` samples,
//!   each column turned into its analytic signal; a bit is set where the
//!   quadrature part is positive.
//! * **HH2**: as HH1, plus a second Hilbert pass on the top and bottom halves
//!   of each column; a bit is set where the summed quadrature is positive.
//! * **LGE**: each line filtered with a single-scale 1-D Log-Gabor wavelet;
//!   every complex sample yields two bits (real > 0, imaginary > 0).

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::code::{EncoderKind, IrisCode};
use crate::segmentation::PolarIrisSegment;
use crate::transforms::{
    haar2d, AnalyticTransform, LogGaborFilter, LogGaborParams, TransformError,
};

/// Responses within this fraction of the input's peak magnitude are treated
/// as exact zeros, so FFT round-off cannot set a bit.
pub const ZERO_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EncodeError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("HH2 needs an even Hilbert filter size, got {0}")]
    OddFilterSize(usize),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub encoder: EncoderKind,
    pub code_rows: usize,
    pub code_cols: usize,
    /// Hilbert filter length (HH1/HH2 only). Distinct from the imposter
    /// standard deviation used by MDSS scoring.
    #[serde(default)]
    pub hilbert_size: usize,
    /// Log-Gabor parameters (LGE only).
    #[serde(default)]
    pub log_gabor: LogGaborParams,
}

impl EncoderConfig {
    pub fn hh1(code_rows: usize, code_cols: usize, hilbert_size: usize) -> Self {
        Self {
            encoder: EncoderKind::Hh1,
            code_rows,
            code_cols,
            hilbert_size,
            log_gabor: LogGaborParams::default(),
        }
    }

    pub fn hh2(code_rows: usize, code_cols: usize, hilbert_size: usize) -> Self {
        Self {
            encoder: EncoderKind::Hh2,
            ..Self::hh1(code_rows, code_cols, hilbert_size)
        }
    }

    pub fn lge(code_rows: usize, code_cols: usize, log_gabor: LogGaborParams) -> Self {
        Self {
            encoder: EncoderKind::Lge,
            code_rows,
            code_cols,
            hilbert_size: 0,
            log_gabor,
        }
    }

    pub fn code_bits(&self) -> usize {
        self.code_rows * self.code_cols
    }

    /// Normalized segment size as (angles, radii). HH encoders halve both
    /// axes in the Haar step; LGE spends two bits per angular sample.
    pub fn segment_dims(&self) -> (usize, usize) {
        match self.encoder {
            EncoderKind::Hh1 | EncoderKind::Hh2 => (2 * self.code_cols, 2 * self.code_rows),
            EncoderKind::Lge => (self.code_cols / 2, self.code_rows),
        }
    }

    pub fn validate(&self) -> Result<(), EncodeError> {
        if self.code_rows == 0 || self.code_cols == 0 {
            return Err(EncodeError::DimensionMismatch("empty code".into()));
        }
        match self.encoder {
            EncoderKind::Hh1 | EncoderKind::Hh2 => {
                let s = self.hilbert_size;
                if self.encoder == EncoderKind::Hh2 && !s.is_multiple_of(2) {
                    return Err(EncodeError::OddFilterSize(s));
                }
                let min = if self.encoder == EncoderKind::Hh2 {
                    4
                } else {
                    2
                };
                if s < min {
                    return Err(EncodeError::DimensionMismatch(format!(
                        "Hilbert filter size {s} below {min}"
                    )));
                }
                if !self.code_bits().is_multiple_of(s) {
                    return Err(EncodeError::DimensionMismatch(format!(
                        "filter size {s} does not divide {} code bits",
                        self.code_bits()
                    )));
                }
            }
            EncoderKind::Lge => {
                if !self.code_cols.is_multiple_of(2) || self.code_cols < 8 {
                    return Err(EncodeError::DimensionMismatch(format!(
                        "LGE needs an even code width of at least 8, got {}",
                        self.code_cols
                    )));
                }
                self.log_gabor.validate()?;
            }
        }
        Ok(())
    }

    /// First eight bytes of SHA-256 over a canonical parameter string.
    pub fn params_digest(&self) -> [u8; 8] {
        let canonical = match self.encoder {
            EncoderKind::Hh1 | EncoderKind::Hh2 => format!(
                "{};rows={};cols={};s={}",
                self.encoder, self.code_rows, self.code_cols, self.hilbert_size
            ),
            EncoderKind::Lge => format!(
                "LGE;rows={};cols={};f0={:016x};sigma_ratio={:016x}",
                self.code_rows,
                self.code_cols,
                self.log_gabor.f0.to_bits(),
                self.log_gabor.sigma_ratio.to_bits()
            ),
        };
        let hash = Sha256::digest(canonical.as_bytes());
        let mut out = [0u8; 8];
        out.copy_from_slice(&hash[..8]);
        out
    }
}

enum Kernel {
    Hh1(AnalyticTransform),
    Hh2 {
        full: AnalyticTransform,
        half: AnalyticTransform,
    },
    Lge(LogGaborFilter),
}

/// Encoder with its FFT plans prepared for one configuration.
pub struct Encoder {
    cfg: EncoderConfig,
    digest: [u8; 8],
    kernel: Kernel,
}

impl Encoder {
    pub fn new(cfg: EncoderConfig) -> Result<Self, EncodeError> {
        cfg.validate()?;
        let kernel = match cfg.encoder {
            EncoderKind::Hh1 => Kernel::Hh1(AnalyticTransform::new(cfg.hilbert_size)?),
            EncoderKind::Hh2 => Kernel::Hh2 {
                full: AnalyticTransform::new(cfg.hilbert_size)?,
                half: AnalyticTransform::new(cfg.hilbert_size / 2)?,
            },
            EncoderKind::Lge => Kernel::Lge(LogGaborFilter::new(cfg.code_cols / 2, cfg.log_gabor)?),
        };
        Ok(Self {
            cfg,
            digest: cfg.params_digest(),
            kernel,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn encode(&self, ni: &PolarIrisSegment) -> Result<IrisCode, EncodeError> {
        let expected = self.cfg.segment_dims();
        if (ni.angles(), ni.radii()) != expected {
            return Err(EncodeError::DimensionMismatch(format!(
                "{} expects a {}x{} (angles x radii) segment, got {}x{}",
                self.cfg.encoder,
                expected.0,
                expected.1,
                ni.angles(),
                ni.radii()
            )));
        }
        let lines = ni.angular_lines();
        let bits = match &self.kernel {
            Kernel::Hh1(full) => haar_hilbert_bits(&lines, self.cfg.hilbert_size, |chunk| {
                full.apply(chunk).iter().map(|z| z.im).collect()
            })?,
            Kernel::Hh2 { full, half } => {
                let h = self.cfg.hilbert_size / 2;
                haar_hilbert_bits(&lines, self.cfg.hilbert_size, |chunk| {
                    let h1 = full.apply(chunk);
                    let top = half.apply(&chunk[..h]);
                    let bottom = half.apply(&chunk[h..]);
                    h1.iter()
                        .zip(top.iter().chain(&bottom))
                        .map(|(a, b)| a.im + b.im)
                        .collect()
                })?
            }
            Kernel::Lge(filter) => lge_bits(&lines, filter),
        };
        Ok(IrisCode::from_bits(
            self.cfg.code_rows,
            self.cfg.code_cols,
            bits,
            self.cfg.encoder,
            self.digest,
        ))
    }
}

/// Runs `quadrature` over consecutive `s`-sample pieces of the row-major
/// approximation frame. Filling the columns of an `s`-row matrix from the
/// frame's lines and reading bits back through the inverse reshape places
/// each bit at the flat index of its source sample.
fn haar_hilbert_bits(
    lines: &Array2<f64>,
    s: usize,
    quadrature: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<Vec<bool>, EncodeError> {
    let approx = haar2d(lines)?.approx;
    let flat: Vec<f64> = approx.iter().copied().collect();
    let mut bits = Vec::with_capacity(flat.len());
    for chunk in flat.chunks_exact(s) {
        let tol = ZERO_TOLERANCE * peak(chunk);
        bits.extend(quadrature(chunk).into_iter().map(|q| q > tol));
    }
    Ok(bits)
}

fn lge_bits(lines: &Array2<f64>, filter: &LogGaborFilter) -> Vec<bool> {
    let mut bits = Vec::with_capacity(2 * lines.len());
    for line in lines.rows() {
        let line: Vec<f64> = line.to_vec();
        let tol = ZERO_TOLERANCE * peak(&line);
        for z in filter.apply(&line) {
            bits.push(z.re > tol);
            bits.push(z.im > tol);
        }
    }
    bits
}

fn peak(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn encode(ni: &PolarIrisSegment, cfg: &EncoderConfig) -> Result<IrisCode, EncodeError> {
    Encoder::new(*cfg)?.encode(ni)
}

pub fn encode_hh1(ni: &PolarIrisSegment, cfg: &EncoderConfig) -> Result<IrisCode, EncodeError> {
    encode(
        ni,
        &EncoderConfig {
            encoder: EncoderKind::Hh1,
            ..*cfg
        },
    )
}

pub fn encode_hh2(ni: &PolarIrisSegment, cfg: &EncoderConfig) -> Result<IrisCode, EncodeError> {
    encode(
        ni,
        &EncoderConfig {
            encoder: EncoderKind::Hh2,
            ..*cfg
        },
    )
}

pub fn encode_lge(ni: &PolarIrisSegment, cfg: &EncoderConfig) -> Result<IrisCode, EncodeError> {
    encode(
        ni,
        &EncoderConfig {
            encoder: EncoderKind::Lge,
            ..*cfg
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn noise_segment(angles: usize, radii: usize, seed: u64) -> PolarIrisSegment {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PolarIrisSegment::from_matrix(Array2::from_shape_fn((angles, radii), |_| rng.random()))
    }

    fn all_configs() -> [EncoderConfig; 3] {
        [
            EncoderConfig::hh1(16, 256, 16),
            EncoderConfig::hh2(16, 256, 16),
            EncoderConfig::lge(16, 256, LogGaborParams::default()),
        ]
    }

    #[test]
    fn segment_dims_per_encoder() {
        assert_eq!(EncoderConfig::hh1(16, 256, 16).segment_dims(), (512, 32));
        assert_eq!(EncoderConfig::hh2(16, 64, 16).segment_dims(), (128, 32));
        assert_eq!(EncoderConfig::hh1(8, 128, 8).segment_dims(), (256, 16));
        assert_eq!(
            EncoderConfig::lge(8, 128, LogGaborParams::default()).segment_dims(),
            (64, 8)
        );
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            EncoderConfig::hh2(16, 256, 15).validate(),
            Err(EncodeError::OddFilterSize(15))
        );
        assert!(EncoderConfig::hh1(16, 256, 24).validate().is_err());
        assert!(EncoderConfig::hh2(16, 256, 2).validate().is_err());
        assert!(EncoderConfig::lge(16, 255, LogGaborParams::default())
            .validate()
            .is_err());
        for cfg in all_configs() {
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn wrong_segment_size_rejected() {
        let seg = noise_segment(100, 32, 1);
        for cfg in all_configs() {
            assert!(matches!(
                encode(&seg, &cfg),
                Err(EncodeError::DimensionMismatch(_))
            ));
        }
    }

    #[test]
    fn constant_segment_gives_zero_code() {
        for cfg in all_configs() {
            let (a, r) = cfg.segment_dims();
            let seg = PolarIrisSegment::from_matrix(Array2::from_elem((a, r), 0.37));
            let code = encode(&seg, &cfg).unwrap();
            assert_eq!(code.count_ones(), 0, "{}", cfg.encoder);
        }
    }

    #[test]
    fn hh1_cosine_columns() {
        // Lines constant in pairs so the Haar approximation equals 2x the
        // line value; every s-sample piece is then one cosine period.
        let s = 16;
        let cfg = EncoderConfig::hh1(16, 256, s);
        let lines = Array2::from_shape_fn((32, 512), |(_, c)| {
            (2.0 * PI * ((c / 2) % s) as f64 / s as f64).cos()
        });
        let code = encode(&PolarIrisSegment::from_angular_lines(lines), &cfg).unwrap();
        for (i, bit) in code.bits().enumerate() {
            let k = i % s;
            assert_eq!(bit, k > 0 && k < s / 2, "bit {i}");
        }
    }

    #[test]
    fn lge_quadrants_cycle() {
        let p = LogGaborParams::default();
        let cfg = EncoderConfig::lge(1, 360, p);
        let lines = Array2::from_shape_fn((1, 180), |(_, n)| (2.0 * PI * p.f0 * n as f64).cos());
        let code = encode(&PolarIrisSegment::from_angular_lines(lines), &cfg).unwrap();
        for n in 0..180 {
            let phase = 2.0 * PI * p.f0 * n as f64;
            let (c, s) = (phase.cos(), phase.sin());
            if c.abs() > 1e-6 {
                assert_eq!(code.bit(2 * n), c > 0.0, "re bit at {n}");
            }
            if s.abs() > 1e-6 {
                assert_eq!(code.bit(2 * n + 1), s > 0.0, "im bit at {n}");
            }
        }
    }

    #[test]
    fn lge_angular_shift_covariance() {
        let cfg = EncoderConfig::lge(16, 256, LogGaborParams::default());
        let seg = noise_segment(128, 16, 9);
        let base = encode(&seg, &cfg).unwrap();
        for k in [1usize, 5, 17] {
            let rolled =
                Array2::from_shape_fn((128, 16), |(a, r)| seg.data()[[(a + 128 - k) % 128, r]]);
            let shifted = encode(&PolarIrisSegment::from_matrix(rolled), &cfg).unwrap();
            assert_eq!(shifted, base.shifted_columns(2 * k as isize));
        }
    }

    #[test]
    fn bit_balance_on_noise() {
        for cfg in all_configs() {
            let (a, r) = cfg.segment_dims();
            let code = encode(&noise_segment(a, r, 4), &cfg).unwrap();
            let frac = code.count_ones() as f64 / code.len() as f64;
            assert!((0.40..=0.60).contains(&frac), "{}: {frac}", cfg.encoder);
        }
    }

    #[test]
    fn digest_tracks_parameters() {
        let a = EncoderConfig::hh1(16, 256, 16).params_digest();
        let b = EncoderConfig::hh1(16, 256, 8).params_digest();
        let c = EncoderConfig::hh2(16, 256, 16).params_digest();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, EncoderConfig::hh1(16, 256, 16).params_digest());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn contrast_and_offset_invariance(
            seed in any::<u64>(),
            gain in 0.05f64..20.0,
            offset in -5.0f64..5.0,
            which in 0usize..3,
        ) {
            let cfg = [
                EncoderConfig::hh1(8, 128, 8),
                EncoderConfig::hh2(8, 128, 8),
                EncoderConfig::lge(8, 128, LogGaborParams::default()),
            ][which];
            let (a, r) = cfg.segment_dims();
            let seg = noise_segment(a, r, seed);
            let base = encode(&seg, &cfg).unwrap();
            let scaled = PolarIrisSegment::from_matrix(seg.data().mapv(|v| gain * v));
            let moved = PolarIrisSegment::from_matrix(seg.data().mapv(|v| v + offset));
            prop_assert_eq!(encode(&scaled, &cfg).unwrap(), base.clone());
            prop_assert_eq!(encode(&moved, &cfg).unwrap(), base);
        }
    }
}
