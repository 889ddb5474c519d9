//! Baseline pupil finder: darkest 2-means cluster, 3x3 opening, largest
//! connected component, circle from centroid and equivalent-area radius.

use std::collections::VecDeque;
use std::f64::consts::PI;

use super::kmeans::kmeans2;
use super::{PupilCircle, SegmentationError};
use crate::gray::GrayImage;

/// Locates the pupil in an eye image.
pub trait PupilFinder: Send + Sync {
    fn find(&self, img: &GrayImage) -> Result<PupilCircle, SegmentationError>;
}

#[derive(Debug, Clone)]
pub struct KMeansPupilFinder {
    /// Minimum component area as a fraction of the image area.
    pub min_area_fraction: f64,
    /// Minimum accepted circularity `4π·area/perimeter²`.
    pub min_circularity: f64,
    /// A further 2-means split of the dark cluster is kept only when its
    /// separability exceeds this value.
    pub split_separability: f64,
    pub max_splits: usize,
}

impl Default for KMeansPupilFinder {
    fn default() -> Self {
        Self {
            min_area_fraction: 0.0005,
            min_circularity: 0.5,
            split_separability: 0.7,
            max_splits: 4,
        }
    }
}

impl PupilFinder for KMeansPupilFinder {
    fn find(&self, img: &GrayImage) -> Result<PupilCircle, SegmentationError> {
        let (cutoffs, gated) = self.dark_cutoffs(img)?;
        // The gated level is the answer unless its component fails the shape
        // checks, in which case deeper splits get a chance (a pupil still
        // lumped with textured iris or skin).
        let first = self.circle_at(img, cutoffs[gated]);
        if first.is_ok() {
            return first;
        }
        cutoffs[gated + 1..]
            .iter()
            .map(|&c| self.circle_at(img, c))
            .find(Result::is_ok)
            .unwrap_or(first)
    }
}

impl KMeansPupilFinder {
    fn circle_at(&self, img: &GrayImage, cutoff: f64) -> Result<PupilCircle, SegmentationError> {
        let (w, h) = (img.width(), img.height());
        let mask: Vec<bool> = img.data().iter().map(|&v| v as f64 <= cutoff).collect();
        let mask = open3x3(&mask, w, h);

        let component = largest_component(&mask, w, h)
            .ok_or_else(|| SegmentationError::PupilNotFound("no dark component".into()))?;
        let area = component.len() as f64;
        if area <= self.min_area_fraction * (w * h) as f64 {
            return Err(SegmentationError::PupilNotFound(format!(
                "largest dark component too small ({area} px)"
            )));
        }
        let circularity = 4.0 * PI * area / perimeter(&component, &mask, w, h).powi(2);
        if circularity < self.min_circularity {
            return Err(SegmentationError::PupilNotFound(format!(
                "dark component not circular (circularity {circularity:.3})"
            )));
        }

        let (sx, sy) = component.iter().fold((0.0, 0.0), |(sx, sy), &i| {
            (sx + (i % w) as f64, sy + (i / w) as f64)
        });
        let circle = PupilCircle {
            cx: sx / area,
            cy: sy / area,
            radius: (area / PI).sqrt(),
        };
        circle
            .check_inside(w, h)
            .map_err(|_| SegmentationError::PupilNotFound("pupil touches the border".into()))?;
        Ok(circle)
    }

    /// Upper intensity bounds of the darkest cluster after each successive
    /// 2-means split, plus the index of the level where the separability gate
    /// stops. Splitting further while the split is clearly bimodal peels
    /// mid-gray iris texture off the pupil.
    fn dark_cutoffs(&self, img: &GrayImage) -> Result<(Vec<f64>, usize), SegmentationError> {
        let mut population: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
        let degenerate = || SegmentationError::PupilNotFound("no intensity contrast".into());
        let max = |p: &[f64]| p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = kmeans2(&population).map_err(|_| degenerate())?;
        population = dark_members(&population, &first.labels);
        let mut cutoffs = vec![max(&population)];
        let mut gated = None;

        for level in 0..self.max_splits {
            let Ok(split) = kmeans2(&population) else {
                break;
            };
            if gated.is_none() && split.separability(&population) < self.split_separability {
                gated = Some(level);
            }
            population = dark_members(&population, &split.labels);
            cutoffs.push(max(&population));
        }
        let gated = gated.unwrap_or(cutoffs.len() - 1);
        Ok((cutoffs, gated))
    }
}

fn dark_members(values: &[f64], labels: &[bool]) -> Vec<f64> {
    values
        .iter()
        .zip(labels)
        .filter(|(_, &high)| !high)
        .map(|(&v, _)| v)
        .collect()
}

fn open3x3(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    let eroded = filter3x3(mask, w, h, true);
    filter3x3(&eroded, w, h, false)
}

/// Erosion (`all = true`) or dilation with a 3x3 square; out-of-image pixels
/// count as background.
fn filter3x3(mask: &[bool], w: usize, h: usize, all: bool) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = all;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    let v = nx >= 0
                        && ny >= 0
                        && (nx as usize) < w
                        && (ny as usize) < h
                        && mask[ny as usize * w + nx as usize];
                    if all {
                        acc &= v;
                    } else {
                        acc |= v;
                    }
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Pixel indices of the largest 4-connected foreground component. Ties go to
/// the component found first in raster order.
fn largest_component(mask: &[bool], w: usize, h: usize) -> Option<Vec<usize>> {
    let mut seen = vec![false; w * h];
    let mut best: Option<Vec<usize>> = None;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut members = Vec::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            members.push(i);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if best.as_ref().is_none_or(|b| members.len() > b.len()) {
            best = Some(members);
        }
    }
    best
}

/// Crack-edge length scaled by π/4, which recovers 2πr for digital disks.
fn perimeter(component: &[usize], mask: &[bool], w: usize, h: usize) -> f64 {
    let mut cracks = 0usize;
    for &i in component {
        let (x, y) = (i % w, i / w);
        cracks += usize::from(x == 0 || !mask[i - 1]);
        cracks += usize::from(x + 1 == w || !mask[i + 1]);
        cracks += usize::from(y == 0 || !mask[i - w]);
        cracks += usize::from(y + 1 == h || !mask[i + w]);
    }
    cracks as f64 * PI / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_image(cx: f64, cy: f64, r: f64) -> GrayImage {
        GrayImage::from_fn(256, 256, |x, y| {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            if d <= r {
                20
            } else {
                200
            }
        })
        .unwrap()
    }

    fn assert_close(c: PupilCircle, cx: f64, cy: f64, r: f64) {
        assert!((c.cx - cx).abs() <= 1.0, "{c:?}");
        assert!((c.cy - cy).abs() <= 1.0, "{c:?}");
        assert!((c.radius - r).abs() <= 1.0, "{c:?}");
    }

    #[test]
    fn centered_disk() {
        let c = KMeansPupilFinder::default()
            .find(&disk_image(128.0, 128.0, 30.0))
            .unwrap();
        assert_close(c, 128.0, 128.0, 30.0);
    }

    #[test]
    fn translated_disk() {
        let c = KMeansPupilFinder::default()
            .find(&disk_image(90.0, 150.0, 30.0))
            .unwrap();
        assert_close(c, 90.0, 150.0, 30.0);
    }

    #[test]
    fn uniform_image_has_no_pupil() {
        let img = GrayImage::from_fn(256, 256, |_, _| 128).unwrap();
        assert!(matches!(
            KMeansPupilFinder::default().find(&img),
            Err(SegmentationError::PupilNotFound(_))
        ));
    }

    #[test]
    fn pupil_inside_mid_gray_ring() {
        // Dark disk inside a mid-gray annulus inside a bright field: the
        // first split lumps the annulus with the pupil, the second peels it.
        let img = GrayImage::from_fn(256, 256, |x, y| {
            let d = ((x as f64 - 120.0).powi(2) + (y as f64 - 130.0).powi(2)).sqrt();
            if d <= 28.0 {
                20
            } else if d <= 70.0 {
                if (x / 4 + y / 4) % 2 == 0 {
                    90
                } else {
                    130
                }
            } else {
                210
            }
        })
        .unwrap();
        let c = KMeansPupilFinder::default().find(&img).unwrap();
        assert_close(c, 120.0, 130.0, 28.0);
    }

    #[test]
    fn thin_bar_is_rejected() {
        let img = GrayImage::from_fn(256, 256, |x, y| {
            if (100..104).contains(&y) && (20..230).contains(&x) {
                10
            } else {
                200
            }
        })
        .unwrap();
        assert!(KMeansPupilFinder::default().find(&img).is_err());
    }
}
