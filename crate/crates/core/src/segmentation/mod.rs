//! Circular, pupil-concentric iris segmentation.
//!
//! The iris is modelled as a ring concentric with the pupil. [`segment`] finds
//! the pupil, unwraps a generous ring around it, detects the fuzzy limbic
//! boundary on that working unwrap, then re-samples the ring between pupil and
//! limbic radius at the resolution requested by the encoder.

mod kmeans;
mod limbic;
mod polar;
mod pupil;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kmeans::{kmeans2, kmeans2_binarize, TwoMeans};
pub use limbic::{detect_limbic_index, LEFT_SECTOR_DEG, RIGHT_SECTOR_DEG};
pub use polar::{unwrap_polar, PolarIrisSegment};
pub use pupil::{KMeansPupilFinder, PupilFinder};

use crate::gray::GrayImage;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SegmentationError {
    #[error("pupil not found: {0}")]
    PupilNotFound(String),
    #[error("limbic boundary not found")]
    LimbicNotFound,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("degenerate input: all values equal")]
    DegenerateInput,
}

/// Pupil boundary in pixel coordinates (pixel centers at integer positions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupilCircle {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl PupilCircle {
    pub fn check_inside(&self, width: usize, height: usize) -> Result<(), SegmentationError> {
        let inside = self.radius > 0.0
            && self.cx - self.radius >= 0.0
            && self.cy - self.radius >= 0.0
            && self.cx + self.radius <= (width - 1) as f64
            && self.cy + self.radius <= (height - 1) as f64;
        if inside {
            Ok(())
        } else {
            Err(SegmentationError::InvalidGeometry(format!(
                "pupil {self:?} not inside {width}x{height} image"
            )))
        }
    }
}

/// Working-resolution settings for limbic detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationParams {
    pub work_angles: usize,
    pub work_radii: usize,
    /// Working ring extent as a multiple of the pupil radius.
    pub extent_factor: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            work_angles: 256,
            work_radii: 64,
            extent_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub pupil: PupilCircle,
    /// Boundary column in the working unwrap.
    pub limbic_index: usize,
    pub limbic_radius: f64,
    /// Iris ring re-sampled at the requested dimensions, intensities in [0, 1].
    pub normalized: PolarIrisSegment,
}

/// Segments with the default pupil finder and working resolution.
pub fn segment(
    img: &GrayImage,
    out_angles: usize,
    out_radii: usize,
) -> Result<SegmentationResult, SegmentationError> {
    segment_with(
        &KMeansPupilFinder::default(),
        SegmentationParams::default(),
        img,
        out_angles,
        out_radii,
    )
}

pub fn segment_with(
    finder: &dyn PupilFinder,
    params: SegmentationParams,
    img: &GrayImage,
    out_angles: usize,
    out_radii: usize,
) -> Result<SegmentationResult, SegmentationError> {
    let pupil = finder.find(img)?;
    let working = unwrap_polar(
        img,
        pupil,
        params.work_angles,
        params.work_radii,
        params.extent_factor * pupil.radius,
    )?;
    let limbic_index = detect_limbic_index(&working)?;
    let extent = limbic_index as f64 * working.radial_step();
    let normalized = unwrap_polar(img, pupil, out_angles, out_radii, extent)?.normalized();
    Ok(SegmentationResult {
        pupil,
        limbic_index,
        limbic_radius: pupil.radius + extent,
        normalized,
    })
}
