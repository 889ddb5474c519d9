use ndarray::Array2;

use super::SegmentationError;

/// Output of a scalar 2-means clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoMeans {
    /// `true` where the value belongs to the high cluster.
    pub labels: Vec<bool>,
    pub low: f64,
    pub high: f64,
}

impl TwoMeans {
    /// Between-cluster share of the total variance (Otsu's separability).
    /// Close to 1 for well separated populations, about 0.64 for a single
    /// Gaussian split in two.
    pub fn separability(&self, values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let total: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if total == 0.0 {
            return 0.0;
        }
        let n_high = self.labels.iter().filter(|&&l| l).count() as f64;
        let w_high = n_high / n;
        let w_low = 1.0 - w_high;
        w_low * w_high * (self.high - self.low).powi(2) / total
    }
}

/// 2-means on a scalar population, seeded at the extremes and iterated until
/// the assignment stops changing. Ties go to the high cluster.
pub fn kmeans2(values: &[f64]) -> Result<TwoMeans, SegmentationError> {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if values.is_empty() || !(min < max) {
        return Err(SegmentationError::DegenerateInput);
    }

    let mut low = min;
    let mut high = max;
    let mut labels = vec![false; values.len()];
    let mut first = true;
    loop {
        let mut changed = first;
        first = false;
        for (label, &v) in labels.iter_mut().zip(values) {
            let to_high = (v - high).abs() <= (v - low).abs();
            if *label != to_high {
                *label = to_high;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let (mut sum_lo, mut n_lo, mut sum_hi, mut n_hi) = (0.0, 0usize, 0.0, 0usize);
        for (&label, &v) in labels.iter().zip(values) {
            if label {
                sum_hi += v;
                n_hi += 1;
            } else {
                sum_lo += v;
                n_lo += 1;
            }
        }
        // Seeding at min and max keeps both clusters populated.
        low = sum_lo / n_lo as f64;
        high = sum_hi / n_hi as f64;
    }
    Ok(TwoMeans { labels, low, high })
}

/// 2-means binarization of a real matrix. Returns the binary matrix
/// (1 = high cluster) with the low and high centroids.
pub fn kmeans2_binarize(
    values: &Array2<f64>,
) -> Result<(Array2<bool>, f64, f64), SegmentationError> {
    let flat: Vec<f64> = values.iter().copied().collect();
    let TwoMeans { labels, low, high } = kmeans2(&flat)?;
    let binary =
        Array2::from_shape_vec(values.raw_dim(), labels).expect("label count equals element count");
    Ok((binary, low, high))
}
