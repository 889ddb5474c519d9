use std::f64::consts::PI;

use ndarray::Array2;

use super::{PupilCircle, SegmentationError};
use crate::gray::GrayImage;

/// Iris ring unwrapped to polar coordinates.
///
/// Row `k` holds angle `2πk/angles` (0 at image-right, increasing toward
/// image-down); column `j` holds radius `pupil.radius + j * radial_step`, so
/// column 0 sits on the pupil boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarIrisSegment {
    data: Array2<f64>,
    pupil: PupilCircle,
    radial_step: f64,
}

impl PolarIrisSegment {
    pub fn new(data: Array2<f64>, pupil: PupilCircle, radial_step: f64) -> Self {
        Self {
            data,
            pupil,
            radial_step,
        }
    }

    /// Wraps a bare matrix (angles x radii) with a nominal geometry. Used for
    /// encoding segments that did not come from an image.
    pub fn from_matrix(data: Array2<f64>) -> Self {
        let radii = data.ncols().max(1) as f64;
        Self {
            data,
            pupil: PupilCircle {
                cx: 0.0,
                cy: 0.0,
                radius: 1.0,
            },
            radial_step: 1.0 / radii,
        }
    }

    /// Builds a segment from its angular-line view (radii x angles), the
    /// layout the encoders consume.
    pub fn from_angular_lines(lines: Array2<f64>) -> Self {
        Self::from_matrix(lines.reversed_axes().as_standard_layout().to_owned())
    }

    pub fn angles(&self) -> usize {
        self.data.nrows()
    }

    pub fn radii(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn pupil(&self) -> PupilCircle {
        self.pupil
    }

    pub fn radial_step(&self) -> f64 {
        self.radial_step
    }

    /// Transposed view: one line per radius, each line running around the
    /// angular direction.
    pub fn angular_lines(&self) -> Array2<f64> {
        self.data.t().as_standard_layout().to_owned()
    }

    /// Min-max stretch to [0, 1]. A flat segment is left unchanged.
    pub fn normalized(mut self) -> Self {
        let (lo, hi) = self
            .data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if hi > lo {
            let span = hi - lo;
            self.data.mapv_inplace(|v| (v - lo) / span);
        }
        self
    }
}

/// Samples the ring around `pupil` on an `angles x radii` grid with bilinear
/// interpolation. Intensities are scaled to [0, 1].
pub fn unwrap_polar(
    img: &GrayImage,
    pupil: PupilCircle,
    angles: usize,
    radii: usize,
    radial_extent: f64,
) -> Result<PolarIrisSegment, SegmentationError> {
    if angles == 0 || radii == 0 {
        return Err(SegmentationError::InvalidGeometry(format!(
            "empty sampling grid {angles}x{radii}"
        )));
    }
    if !(radial_extent > 0.0) || !radial_extent.is_finite() {
        return Err(SegmentationError::InvalidGeometry(format!(
            "radial extent must be positive, got {radial_extent}"
        )));
    }
    pupil.check_inside(img.width(), img.height())?;

    let step = radial_extent / radii as f64;
    let trig: Vec<(f64, f64)> = (0..angles)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / angles as f64;
            (theta.cos(), theta.sin())
        })
        .collect();
    let data = Array2::from_shape_fn((angles, radii), |(k, j)| {
        let r = pupil.radius + j as f64 * step;
        let (c, s) = trig[k];
        img.sample_bilinear(pupil.cx + r * c, pupil.cy + r * s) / 255.0
    });
    Ok(PolarIrisSegment::new(data, pupil, step))
}
