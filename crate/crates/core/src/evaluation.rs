//! Biometric performance metrics over genuine and imposter similarity scores.
//!
//! Scores are similarities: a comparison is accepted when `score >= t`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

/// Right shift of the pessimistic imposter envelope's mean.
pub const POFA_MEAN_SHIFT: f64 = 5e-3;

pub const DEFAULT_FRR_TARGETS: [f64; 5] = [0.01, 0.02, 0.03, 0.04, 0.05];
pub const DEFAULT_FAR_TARGETS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("need at least two scores, got {0}")]
    TooFewScores(usize),
    #[error("both distributions have zero variance")]
    BothDegenerate,
    #[error("imposter standard deviation is zero")]
    DegenerateStd,
    #[error("{0} scores are empty")]
    EmptyScores(&'static str),
    #[error("no threshold reaches {kind} within a decade of {target}")]
    UnreachableTarget { kind: &'static str, target: f64 },
}

/// Genuine and imposter scores, each sorted ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    genuine: Vec<f64>,
    imposter: Vec<f64>,
}

impl ScoreSet {
    /// Sorts both collections. Panics on non-finite scores.
    pub fn new(mut genuine: Vec<f64>, mut imposter: Vec<f64>) -> Self {
        assert!(
            genuine.iter().chain(&imposter).all(|v| v.is_finite()),
            "scores must be finite"
        );
        genuine.sort_by(f64::total_cmp);
        imposter.sort_by(f64::total_cmp);
        Self { genuine, imposter }
    }

    pub fn genuine(&self) -> &[f64] {
        &self.genuine
    }

    pub fn imposter(&self) -> &[f64] {
        &self.imposter
    }

    fn require_both(&self) -> Result<(), EvalError> {
        if self.genuine.is_empty() {
            return Err(EvalError::EmptyScores("genuine"));
        }
        if self.imposter.is_empty() {
            return Err(EvalError::EmptyScores("imposter"));
        }
        Ok(())
    }

    /// Distinct values of both collections, ascending.
    pub fn thresholds(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.genuine.iter().chain(&self.imposter).copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

fn count_below(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&v| v < t)
}

fn count_at_or_below(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&v| v <= t)
}

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub mean: f64,
    pub std: f64,
    /// Binomial degrees of freedom `μ(1-μ)/σ²`.
    pub dof: f64,
    pub count: usize,
}

impl DistributionStats {
    pub fn from_moments(mean: f64, std: f64, count: usize) -> Self {
        Self {
            mean,
            std,
            dof: mean * (1.0 - mean) / (std * std),
            count,
        }
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }
}

/// Mean, sample standard deviation and degrees of freedom.
pub fn stats(scores: &[f64]) -> Result<DistributionStats, EvalError> {
    if scores.len() < 2 {
        return Err(EvalError::TooFewScores(scores.len()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let ss: f64 = scores.iter().map(|s| (s - mean) * (s - mean)).sum();
    Ok(DistributionStats::from_moments(
        mean,
        (ss / (n - 1.0)).sqrt(),
        scores.len(),
    ))
}

/// `|μi - μg| / sqrt((vi + vg) / 2)`.
pub fn decidability(gen: &DistributionStats, imp: &DistributionStats) -> Result<f64, EvalError> {
    let pooled = gen.variance() + imp.variance();
    if pooled == 0.0 {
        return Err(EvalError::BothDegenerate);
    }
    Ok((imp.mean - gen.mean).abs() / (0.5 * pooled).sqrt())
}

/// `(μi - μg)² / (vi + vg)`; satisfies `d' = sqrt(2r)`.
pub fn fisher_ratio(gen: &DistributionStats, imp: &DistributionStats) -> Result<f64, EvalError> {
    let pooled = gen.variance() + imp.variance();
    if pooled == 0.0 {
        return Err(EvalError::BothDegenerate);
    }
    Ok((imp.mean - gen.mean).powi(2) / pooled)
}

/// Empirical (FAR, FRR) at threshold `t`: imposters scoring `>= t` and
/// genuines scoring `< t`.
pub fn far_frr(scores: &ScoreSet, t: f64) -> (f64, f64) {
    let imp = &scores.imposter;
    let far = fraction(imp.len() - count_below(imp, t), imp.len());
    let frr = fraction(count_below(&scores.genuine, t), scores.genuine.len());
    (far, frr)
}

/// Odds of false accept and false reject: tail masses of the measured
/// distributions, identical to [`far_frr`].
pub fn ofa_ofr(scores: &ScoreSet, t: f64) -> (f64, f64) {
    far_frr(scores, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualErrorRate {
    pub rate: f64,
    pub threshold: f64,
}

/// Equal error rate from the crossing of the FAR and FRR step functions,
/// linearly interpolated between the bracketing thresholds. Zero when the
/// distributions are fully separated.
pub fn eer(scores: &ScoreSet) -> Result<EqualErrorRate, EvalError> {
    scores.require_both()?;
    let mis = *scores.imposter.last().unwrap();
    let mgs = scores.genuine[0];
    if mgs > mis {
        return Ok(EqualErrorRate {
            rate: 0.0,
            threshold: mgs,
        });
    }
    let thresholds = scores.thresholds();
    let mut prev: Option<(f64, f64, f64)> = None;
    let top = *thresholds.last().unwrap();
    let beyond = top + top.abs().max(1.0) * 1e-9;
    for t in thresholds.into_iter().chain(std::iter::once(beyond)) {
        let (far, frr) = far_frr(scores, t);
        let d = far - frr;
        if d <= 0.0 {
            let Some((pt, pfar, pfrr)) = prev else {
                return Ok(EqualErrorRate {
                    rate: 0.5 * (far + frr),
                    threshold: t,
                });
            };
            let pd = pfar - pfrr;
            let alpha = pd / (pd - d);
            return Ok(EqualErrorRate {
                rate: pfar + alpha * (far - pfar),
                threshold: pt + alpha * (t - pt),
            });
        }
        prev = Some((t, far, frr));
    }
    unreachable!("FAR - FRR is negative beyond the largest score")
}

/// Upper-tail mass above `t` of a normal with the imposter spread and a mean
/// shifted right by [`POFA_MEAN_SHIFT`].
pub fn pofa(imp: &DistributionStats, t: f64) -> Result<f64, EvalError> {
    if !(imp.std > 0.0) {
        return Err(EvalError::DegenerateStd);
    }
    let z = (t - (imp.mean + POFA_MEAN_SHIFT)) / imp.std;
    Ok(0.5 * erfc(z / std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    /// Maximum imposter score.
    pub mis: f64,
    /// Minimum genuine score.
    pub mgs: f64,
    pub far_at_mis: f64,
    pub frr_at_mis: f64,
    pub far_at_mgs: f64,
    /// First nonzero FRR step: genuine scores at or below mGS.
    pub frr_at_mgs: f64,
    /// `mGS - MIS`; negative iff the measured distributions overlap.
    pub margin: f64,
}

pub fn extremes(scores: &ScoreSet) -> Result<Extremes, EvalError> {
    scores.require_both()?;
    let mis = *scores.imposter.last().unwrap();
    let mgs = scores.genuine[0];
    let (far_at_mis, frr_at_mis) = far_frr(scores, mis);
    let (far_at_mgs, _) = far_frr(scores, mgs);
    let frr_at_mgs = fraction(
        count_at_or_below(&scores.genuine, mgs),
        scores.genuine.len(),
    );
    Ok(Extremes {
        mis,
        mgs,
        far_at_mis,
        frr_at_mis,
        far_at_mgs,
        frr_at_mgs,
        margin: mgs - mis,
    })
}

/// Imposter degrees of freedom as a percentage of the code length.
pub fn storage_efficiency(imposter_dof: f64, code_bits: usize) -> f64 {
    100.0 * imposter_dof / code_bits as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Target {
    Frr(f64),
    Far(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub target: Target,
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub pofa: f64,
}

/// Threshold whose FRR is the largest empirical value not above `target`.
pub fn frr_operating_point(
    scores: &ScoreSet,
    imp: &DistributionStats,
    target: f64,
) -> Result<OperatingPoint, EvalError> {
    scores.require_both()?;
    let gen = &scores.genuine;
    // FRR(gen[k]) <= k/n, with equality absent ties.
    let k = ((target * gen.len() as f64 + 1e-9).floor() as usize).min(gen.len() - 1);
    let threshold = gen[k];
    let (far, frr) = far_frr(scores, threshold);
    if frr < target / 10.0 {
        return Err(EvalError::UnreachableTarget {
            kind: "FRR",
            target,
        });
    }
    Ok(OperatingPoint {
        target: Target::Frr(target),
        threshold,
        far,
        frr,
        pofa: pofa(imp, threshold)?,
    })
}

/// Imposter-score threshold whose FAR is nearest `target`.
pub fn far_operating_point(
    scores: &ScoreSet,
    imp: &DistributionStats,
    target: f64,
) -> Result<OperatingPoint, EvalError> {
    scores.require_both()?;
    let mut values = scores.imposter.clone();
    values.dedup();
    let mut best: Option<(f64, f64)> = None;
    for &t in &values {
        let (far, _) = far_frr(scores, t);
        if best.is_none_or(|(_, b)| (far - target).abs() <= (b - target).abs()) {
            best = Some((t, far));
        }
    }
    let (threshold, far) = best.expect("imposter scores are non-empty");
    if !(far >= target / 10.0 && far <= target * 10.0) {
        return Err(EvalError::UnreachableTarget {
            kind: "FAR",
            target,
        });
    }
    let (_, frr) = far_frr(scores, threshold);
    Ok(OperatingPoint {
        target: Target::Far(target),
        threshold,
        far,
        frr,
        pofa: pofa(imp, threshold)?,
    })
}

/// Operating points for every FRR target, then every FAR target. Targets
/// that cannot be reached come back as errors in place.
pub fn operating_table(
    scores: &ScoreSet,
    imp: &DistributionStats,
    frr_targets: &[f64],
    far_targets: &[f64],
) -> Vec<Result<OperatingPoint, EvalError>> {
    frr_targets
        .iter()
        .map(|&c| frr_operating_point(scores, imp, c))
        .chain(
            far_targets
                .iter()
                .map(|&c| far_operating_point(scores, imp, c)),
        )
        .collect()
}

/// One row of the ROC export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub pofa: f64,
}

/// FAR, FRR and POFA at every distinct score.
pub fn roc_curve(scores: &ScoreSet, imp: &DistributionStats) -> Result<Vec<RocPoint>, EvalError> {
    scores
        .thresholds()
        .into_iter()
        .map(|t| {
            let (far, frr) = far_frr(scores, t);
            Ok(RocPoint {
                threshold: t,
                far,
                frr,
                pofa: pofa(imp, t)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub center: f64,
    pub genuine: f64,
    pub imposter: f64,
}

/// Relative-frequency histogram with bins of width `1/code_bits`, centered
/// on the Hamming score lattice, spanning the observed score range.
pub fn histogram(scores: &ScoreSet, code_bits: usize) -> Vec<HistogramBin> {
    let all: Vec<f64> = scores
        .genuine
        .iter()
        .chain(&scores.imposter)
        .copied()
        .collect();
    if all.is_empty() {
        return Vec::new();
    }
    let width = code_bits as f64;
    let index = |v: f64| (v * width).round() as i64;
    let lo = all.iter().map(|&v| index(v)).min().unwrap();
    let hi = all.iter().map(|&v| index(v)).max().unwrap();
    let bins = (hi - lo + 1) as usize;
    let mut gen = vec![0usize; bins];
    let mut imp = vec![0usize; bins];
    for &v in &scores.genuine {
        gen[(index(v) - lo) as usize] += 1;
    }
    for &v in &scores.imposter {
        imp[(index(v) - lo) as usize] += 1;
    }
    (0..bins)
        .map(|b| HistogramBin {
            center: (lo + b as i64) as f64 / width,
            genuine: fraction(gen[b], scores.genuine.len()),
            imposter: fraction(imp[b], scores.imposter.len()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(gen: &[f64], imp: &[f64]) -> ScoreSet {
        ScoreSet::new(gen.to_vec(), imp.to_vec())
    }

    #[test]
    fn dof_examples() {
        let t1 = DistributionStats::from_moments(0.5044, 0.0122, 0);
        assert!((t1.dof / 1681.0 - 1.0).abs() < 0.01);
        assert!((DistributionStats::from_moments(0.5, 0.5, 0).dof - 1.0).abs() < 1e-15);
        let t2 = DistributionStats::from_moments(0.509, 0.0207, 0);
        assert!((t2.dof / 582.0 - 1.0).abs() < 0.01);
        assert_eq!(stats(&[0.5]), Err(EvalError::TooFewScores(1)));
    }

    #[test]
    fn stats_uses_sample_std() {
        let s = stats(&[0.4, 0.6]).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-15);
        assert!((s.std - 0.02f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decidability_and_fisher_examples() {
        let imp = DistributionStats::from_moments(0.5044, 0.0122, 0);
        let gen = DistributionStats::from_moments(0.6945, 0.0585, 0);
        assert!((decidability(&gen, &imp).unwrap() / 4.5 - 1.0).abs() < 0.005);
        assert!((fisher_ratio(&gen, &imp).unwrap() / 10.1248 - 1.0).abs() < 0.005);
        let imp2 = DistributionStats::from_moments(0.5090, 0.0207, 0);
        let gen2 = DistributionStats::from_moments(0.7478, 0.0556, 0);
        assert!((decidability(&gen2, &imp2).unwrap() / 5.689 - 1.0).abs() < 0.005);
        let same = DistributionStats::from_moments(0.5, 0.02, 0);
        assert_eq!(decidability(&same, &same).unwrap(), 0.0);
        assert_eq!(fisher_ratio(&same, &same).unwrap(), 0.0);
        let flat = DistributionStats::from_moments(0.5, 0.0, 0);
        assert_eq!(decidability(&flat, &flat), Err(EvalError::BothDegenerate));
    }

    #[test]
    fn far_frr_examples() {
        let s = set(&[0.7, 0.9], &[0.4, 0.5]);
        assert_eq!(far_frr(&s, 0.0), (1.0, 0.0));
        assert_eq!(far_frr(&s, 0.95), (0.0, 1.0));
        assert_eq!(far_frr(&s, 0.45), (0.5, 0.0));
        assert_eq!(ofa_ofr(&s, 0.45), far_frr(&s, 0.45));
    }

    #[test]
    fn eer_examples() {
        let separated = set(&[0.8; 5], &[0.3; 7]);
        assert_eq!(eer(&separated).unwrap().rate, 0.0);
        let same = [0.1, 0.25, 0.3, 0.3, 0.42, 0.6];
        assert!((eer(&set(&same, &same)).unwrap().rate - 0.5).abs() < 1e-12);
        assert!(eer(&set(&[], &[0.3])).is_err());
    }

    #[test]
    fn pofa_examples() {
        let imp = DistributionStats::from_moments(0.5044, 0.0122, 0);
        assert!((pofa(&imp, 0.5044 + POFA_MEAN_SHIFT).unwrap() - 0.5).abs() < 1e-12);
        let p = pofa(&imp, 0.56176).unwrap();
        assert!((p / 8.7648e-6 - 1.0).abs() < 0.1, "{p}");
        assert!((pofa(&imp, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let flat = DistributionStats::from_moments(0.5, 0.0, 0);
        assert_eq!(pofa(&flat, 0.5), Err(EvalError::DegenerateStd));
    }

    #[test]
    fn extremes_examples() {
        let mut imp: Vec<f64> = (0..999).map(|i| 0.4 + i as f64 * 1e-4).collect();
        imp.push(0.61);
        let gen = vec![0.6, 0.7, 0.8, 0.9];
        let e = extremes(&set(&gen, &imp)).unwrap();
        assert_eq!(e.mis, 0.61);
        assert_eq!(e.far_at_mis, 1.0 / 1000.0);
        assert_eq!(e.frr_at_mis, 0.25);
        assert_eq!(e.frr_at_mgs, 0.25);
        assert!(e.margin < 0.0);

        let e = extremes(&set(&[0.8, 0.9], &[0.5])).unwrap();
        assert_eq!(e.far_at_mis, 1.0);
        assert!(e.margin > 0.0);
    }

    #[test]
    fn storage_efficiency_examples() {
        assert!((storage_efficiency(1681.0, 4096) - 41.04).abs() < 0.005);
        assert!((storage_efficiency(555.0, 1024) - 54.20).abs() < 0.005);
        assert_eq!(storage_efficiency(512.0, 512), 100.0);
    }

    #[test]
    fn frr_target_on_944_genuines() {
        let gen: Vec<f64> = (0..944).map(|i| 0.6 + i as f64 * 1e-4).collect();
        let imp: Vec<f64> = (0..500).map(|i| 0.45 + i as f64 * 1e-4).collect();
        let s = set(&gen, &imp);
        let imp_stats = stats(&imp).unwrap();
        let op = frr_operating_point(&s, &imp_stats, 0.01).unwrap();
        assert_eq!(op.frr, 9.0 / 944.0);
        assert_eq!(op.far, 0.0);
        assert!(op.pofa > 0.0);
    }

    #[test]
    fn unreachable_targets() {
        let s = set(&[0.7, 0.8, 0.9], &[0.4, 0.5, 0.6]);
        let imp = stats(s.imposter()).unwrap();
        assert!(matches!(
            frr_operating_point(&s, &imp, 0.01),
            Err(EvalError::UnreachableTarget { .. })
        ));
        assert!(matches!(
            far_operating_point(&s, &imp, 1e-4),
            Err(EvalError::UnreachableTarget { .. })
        ));
        let table = operating_table(&s, &imp, &[0.5], &[0.3]);
        assert_eq!(table.len(), 2);
        assert!(table.iter().all(|r| r.is_ok()));
    }

    #[test]
    fn histogram_lattice() {
        let s = set(&[0.75, 0.75, 0.875], &[0.5, 0.5, 0.625, 0.5]);
        let h = histogram(&s, 8);
        let centers: Vec<f64> = h.iter().map(|b| b.center).collect();
        assert_eq!(centers, vec![0.5, 0.625, 0.75, 0.875]);
        assert_eq!(h[0].imposter, 0.75);
        assert!((h[2].genuine - 2.0 / 3.0).abs() < 1e-15);
        let total: f64 = h.iter().map(|b| b.genuine).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn far_frr_monotone(
            gen in proptest::collection::vec(0.0f64..1.0, 1..40),
            imp in proptest::collection::vec(0.0f64..1.0, 1..40),
        ) {
            let s = set(&gen, &imp);
            let mut last = (f64::INFINITY, f64::NEG_INFINITY);
            for t in s.thresholds() {
                let (far, frr) = far_frr(&s, t);
                prop_assert!(far <= last.0 && frr >= last.1);
                last = (far, frr);
            }
        }

        #[test]
        fn eer_zero_iff_separated(
            gen in proptest::collection::vec(0.0f64..1.0, 1..40),
            imp in proptest::collection::vec(0.0f64..1.0, 1..40),
        ) {
            let s = set(&gen, &imp);
            let e = extremes(&s).unwrap();
            let rate = eer(&s).unwrap().rate;
            prop_assert_eq!(rate == 0.0, e.mgs > e.mis);
            prop_assert!((0.0..=1.0).contains(&rate));
        }

        #[test]
        fn pofa_strictly_decreasing(mean in 0.3f64..0.7, std in 0.005f64..0.05, t in 0.0f64..1.0, dt in 1e-4f64..0.01) {
            let imp = DistributionStats::from_moments(mean, std, 10);
            // Outside about ±8 standard deviations the tail saturates in f64.
            prop_assume!((t + dt - mean - POFA_MEAN_SHIFT) / std < 30.0);
            prop_assume!((t - mean - POFA_MEAN_SHIFT) / std > -8.0);
            prop_assert!(pofa(&imp, t + dt).unwrap() < pofa(&imp, t).unwrap());
        }
    }
}
