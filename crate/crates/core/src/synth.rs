//! Procedural eye images for desk-scale experiments.
//!
//! Each identity owns a band-limited random texture defined in normalized
//! ring coordinates (radial position 0..1 across the iris, angle). A sample
//! renders that texture into a full eye: dark pupil with jittered radius,
//! textured iris annulus, bright sclera ellipse, darker skin, then applies a
//! small rotation, an illumination gradient, and Gaussian sensor noise.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::gray::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub image_size: usize,
    pub pupil_radius: f64,
    /// Relative pupil radius jitter (±).
    pub pupil_jitter: f64,
    pub iris_radius: f64,
    /// Eye center jitter in pixels (±, each axis).
    pub center_jitter: f64,
    /// Maximum in-plane rotation in degrees (±).
    pub max_rotation_deg: f64,
    /// Additive Gaussian noise, gray levels.
    pub noise_sigma: f64,
    /// Peak illumination gradient across the image, gray levels (±).
    pub gradient: f64,
    pub texture_waves: usize,
    /// Highest angular frequency of the texture, cycles per turn.
    pub max_angular_freq: u32,
    pub pupil_level: f64,
    pub iris_level: f64,
    pub iris_contrast: f64,
    pub sclera_level: f64,
    pub skin_level: f64,
    /// Sclera ellipse semi-axes (horizontal, vertical).
    pub sclera_axes: (f64, f64),
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            image_size: 256,
            pupil_radius: 30.0,
            pupil_jitter: 0.10,
            iris_radius: 70.0,
            center_jitter: 4.0,
            max_rotation_deg: 5.0,
            noise_sigma: 2.0,
            gradient: 12.0,
            texture_waves: 48,
            max_angular_freq: 10,
            pupil_level: 18.0,
            iris_level: 105.0,
            iris_contrast: 28.0,
            sclera_level: 205.0,
            skin_level: 125.0,
            sclera_axes: (118.0, 80.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    angular: f64,
    radial: f64,
    phase: f64,
    amplitude: f64,
}

/// Identity-specific iris texture with values roughly in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct IrisTexture {
    waves: Vec<Wave>,
}

impl IrisTexture {
    pub fn random(rng: &mut impl Rng, waves: usize, max_angular_freq: u32) -> Self {
        let mut out: Vec<Wave> = (0..waves)
            .map(|_| {
                let angular = rng.random_range(1..=max_angular_freq.max(1)) as f64;
                Wave {
                    angular,
                    radial: rng.random_range(0.0..3.0) * PI,
                    phase: rng.random_range(0.0..TAU),
                    amplitude: rng.random_range(0.5..1.0) / (1.0 + angular / 8.0),
                }
            })
            .collect();
        let power: f64 = out.iter().map(|w| w.amplitude * w.amplitude).sum::<f64>() / 2.0;
        // Scale to roughly unit peak (about 2.5 standard deviations).
        let scale = 1.0 / (2.5 * power.sqrt());
        out.iter_mut().for_each(|w| w.amplitude *= scale);
        Self { waves: out }
    }

    /// `rho` in [0, 1] from pupil to limbus, `theta` in radians.
    pub fn eval(&self, rho: f64, theta: f64) -> f64 {
        self.waves
            .iter()
            .map(|w| w.amplitude * (w.angular * theta + w.radial * rho + w.phase).cos())
            .sum()
    }
}

/// Ground-truth geometry of one rendered sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeGeometry {
    pub cx: f64,
    pub cy: f64,
    pub pupil_radius: f64,
    pub iris_radius: f64,
    pub rotation: f64,
    pub gradient: (f64, f64),
}

impl EyeGeometry {
    pub fn random(params: &SynthParams, rng: &mut impl Rng) -> Self {
        let c = params.image_size as f64 / 2.0;
        let j = params.center_jitter;
        let rot = params.max_rotation_deg.to_radians();
        let g = params.gradient;
        Self {
            cx: c + rng.random_range(-j..=j),
            cy: c + rng.random_range(-j..=j),
            pupil_radius: params.pupil_radius
                * (1.0 + rng.random_range(-params.pupil_jitter..=params.pupil_jitter)),
            iris_radius: params.iris_radius,
            rotation: rng.random_range(-rot..=rot),
            gradient: (rng.random_range(-g..=g), rng.random_range(-g..=g)),
        }
    }
}

/// Coverage of a disk edge at distance `d` from the center for a pixel of
/// unit width.
fn inside_weight(d: f64, radius: f64) -> f64 {
    (radius - d + 0.5).clamp(0.0, 1.0)
}

pub fn render_eye(
    texture: &IrisTexture,
    geom: &EyeGeometry,
    params: &SynthParams,
    rng: &mut impl Rng,
) -> GrayImage {
    let size = params.image_size;
    let noise = Normal::new(0.0, params.noise_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let (ax, ay) = params.sclera_axes;
    GrayImage::from_fn(size, size, |x, y| {
        let dx = x as f64 - geom.cx;
        let dy = y as f64 - geom.cy;
        let d = dx.hypot(dy);
        let rho =
            ((d - geom.pupil_radius) / (geom.iris_radius - geom.pupil_radius)).clamp(0.0, 1.0);
        let theta = dy.atan2(dx) - geom.rotation;
        let iris = if d > geom.pupil_radius - 1.0 && d < geom.iris_radius + 1.0 {
            params.iris_level + params.iris_contrast * texture.eval(rho, theta).clamp(-1.0, 1.0)
        } else {
            params.iris_level
        };

        let ellipse = (dx / ax).powi(2) + (dy / ay).powi(2);
        let outside = if ellipse <= 1.0 {
            params.sclera_level
        } else {
            params.skin_level
        };
        let w_iris = inside_weight(d, geom.iris_radius);
        let w_pupil = inside_weight(d, geom.pupil_radius);
        let eye = w_iris * iris + (1.0 - w_iris) * outside;
        let base = w_pupil * params.pupil_level + (1.0 - w_pupil) * eye;

        let light = geom.gradient.0 * (x as f64 / size as f64 - 0.5) * 2.0
            + geom.gradient.1 * (y as f64 / size as f64 - 0.5) * 2.0;
        let n = if params.noise_sigma > 0.0 {
            noise.sample(rng)
        } else {
            0.0
        };
        (base + light + n).round().clamp(0.0, 255.0) as u8
    })
    .expect("synthetic image size is at least the minimum")
}

/// One rendered sample with its labels and ground truth.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub subject: String,
    pub eye: char,
    pub sample: usize,
    pub image: GrayImage,
    pub geometry: EyeGeometry,
}

/// Renders `identities` eyes with `samples_per_eye` images each. Identity
/// `i` is subject `s{i:03}`, left eye. Fully determined by `seed`.
pub fn synth_dataset(
    identities: usize,
    samples_per_eye: usize,
    seed: u64,
    params: &SynthParams,
) -> Vec<SynthSample> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let textures: Vec<IrisTexture> = (0..identities)
        .map(|_| IrisTexture::random(&mut master, params.texture_waves, params.max_angular_freq))
        .collect();
    (0..identities * samples_per_eye)
        .into_par_iter()
        .map(|n| {
            let (i, s) = (n / samples_per_eye, n % samples_per_eye);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((i as u64) << 32) | (s as u64 + 1));
            let geometry = EyeGeometry::random(params, &mut rng);
            let image = render_eye(&textures[i], &geometry, params, &mut rng);
            SynthSample {
                subject: format!("s{i:03}"),
                eye: 'L',
                sample: s,
                image,
                geometry,
            }
        })
        .collect()
}
