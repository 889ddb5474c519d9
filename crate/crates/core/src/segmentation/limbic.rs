//! Fuzzy limbic boundary detection on the unwrapped iris region.
//!
//! Two sectors below the horizontal diameter are examined: 22.5°..45° on the
//! right and 135°..157.5° on the left. For each, the column means `V` locate
//! the first significant peak outward from the pupil, the sector is cropped
//! there, and a 2-means binarization separates iris from sclera. The boundary
//! is the smaller of the two sector indices.

use ndarray::{s, Array2, ArrayView2};

use super::kmeans::kmeans2_binarize;
use super::{PolarIrisSegment, SegmentationError};

pub const RIGHT_SECTOR_DEG: (f64, f64) = (22.5, 45.0);
pub const LEFT_SECTOR_DEG: (f64, f64) = (135.0, 157.5);

/// Leading columns left out of the iris/sclera binarization.
const PUPIL_EDGE_COLUMNS: usize = 1;
/// Columns next to the pupil edge never qualify as the `V` peak.
const MIN_PEAK_COLUMN: usize = 2;
/// A peak must reach this share of V's range above its minimum. Iris texture
/// bumps stay well below the sclera plateau.
const MIN_PEAK_HEIGHT: f64 = 0.75;

/// Returns the radial column index of the limbic boundary.
pub fn detect_limbic_index(polar: &PolarIrisSegment) -> Result<usize, SegmentationError> {
    let (angles, radii) = (polar.angles(), polar.radii());
    if angles < 8 || radii < 8 {
        return Err(SegmentationError::InvalidGeometry(format!(
            "polar segment {angles}x{radii} is smaller than 8x8"
        )));
    }
    let right = sector_rows(angles, RIGHT_SECTOR_DEG)
        .and_then(|rows| sector_index(polar.data().slice(s![rows.0..=rows.1, ..])));
    let left = sector_rows(angles, LEFT_SECTOR_DEG)
        .and_then(|rows| sector_index(polar.data().slice(s![rows.0..=rows.1, ..])));
    match (right, left) {
        (Some(a), Some(b)) => Ok(a.min(b)),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Err(SegmentationError::LimbicNotFound),
    }
}

/// Inclusive range of rows whose angle falls in `[from, to]` degrees.
fn sector_rows(angles: usize, (from, to): (f64, f64)) -> Option<(usize, usize)> {
    let per_row = 360.0 / angles as f64;
    let first = (from / per_row - 1e-9).ceil() as usize;
    let last = (to / per_row + 1e-9).floor() as usize;
    (first <= last && last < angles).then_some((first, last))
}

fn sector_index(sector: ArrayView2<f64>) -> Option<usize> {
    let means: Vec<f64> = sector
        .columns()
        .into_iter()
        .map(|c| c.sum() / c.len() as f64)
        .collect();
    let peak = first_peak(&means)?;
    // The unwrap starts on the estimated pupil boundary, so the first
    // column straddles the pupil edge. Left in, its dark pixels become a
    // cluster of their own; it is counted as iris instead.
    let cropped = sector.slice(s![.., PUPIL_EDGE_COLUMNS..=peak]).to_owned();
    let (labels, _, _) = kmeans2_binarize(&cropped).ok()?;
    Some(PUPIL_EDGE_COLUMNS + vertical_separator(&labels))
}

/// Smallest column that is a strict local maximum of `v`, at least
/// [`MIN_PEAK_COLUMN`] from the pupil edge and at least [`MIN_PEAK_HEIGHT`]
/// of the range above the minimum.
fn first_peak(v: &[f64]) -> Option<usize> {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let range = hi - lo;
    if !(range > 0.0) {
        return None;
    }
    let floor = lo + MIN_PEAK_HEIGHT * range;
    (MIN_PEAK_COLUMN.max(1)..v.len().saturating_sub(1))
        .find(|&j| v[j] > v[j - 1] && v[j] > v[j + 1] && v[j] >= floor)
}

/// Number of columns whose majority label matches the innermost column's.
fn vertical_separator(labels: &Array2<bool>) -> usize {
    let majority: Vec<bool> = labels
        .columns()
        .into_iter()
        .map(|c| 2 * c.iter().filter(|&&b| b).count() > c.len())
        .collect();
    let inner = majority[0];
    majority.iter().filter(|&&m| m == inner).count()
}
