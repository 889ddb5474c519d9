//! Hamming similarity between iris codes, enrolled identities, and the
//! mean-deviation similarity score (MDSS) for multi-template identities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::IrisCode;
use crate::evaluation::ScoreSet;

/// Upper bound on templates per enrolled identity.
pub const MAX_TEMPLATES: usize = 10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MatchError {
    #[error("code dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("encoders differ: {0} vs {1}")]
    EncoderMismatch(String, String),
    #[error("identity has no templates")]
    EmptyIdentity,
    #[error("identity has {0} templates, at most {MAX_TEMPLATES} allowed")]
    TooManyTemplates(usize),
    #[error("need at least two templates, got {0}")]
    TooFewTemplates(usize),
    #[error("imposter standard deviation must be positive, got {0}")]
    InvalidImposterStd(f64),
    #[error("empty {0} list")]
    Empty(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    #[serde(rename = "HS")]
    Hs,
    #[serde(rename = "MDSS")]
    Mdss,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Hs => "HS",
            ScoreKind::Mdss => "MDSS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub value: f64,
    pub kind: ScoreKind,
}

/// Divisor used for the standard deviation inside MDSS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdConvention {
    /// n - 1 divisor.
    #[default]
    Sample,
    /// n divisor.
    Population,
}

fn check_compatible(a: &IrisCode, b: &IrisCode) -> Result<(), MatchError> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(MatchError::DimensionMismatch(
            (a.rows(), a.cols()),
            (b.rows(), b.cols()),
        ));
    }
    if a.encoder() != b.encoder() {
        return Err(MatchError::EncoderMismatch(
            a.encoder().to_string(),
            b.encoder().to_string(),
        ));
    }
    Ok(())
}

fn agreement(a: &IrisCode, b: &IrisCode) -> f64 {
    let n = a.len();
    let full = n / 64;
    let mut differ: u32 = a.words()[..full]
        .iter()
        .zip(&b.words()[..full])
        .map(|(x, y)| (x ^ y).count_ones())
        .sum();
    if !n.is_multiple_of(64) {
        // Padding bits are zero in both codes.
        differ += (a.words()[full] ^ b.words()[full]).count_ones();
    }
    (n - differ as usize) as f64 / n as f64
}

/// Fraction of bit positions where the two codes agree.
pub fn hamming_similarity(a: &IrisCode, b: &IrisCode) -> Result<MatchScore, MatchError> {
    check_compatible(a, b)?;
    Ok(MatchScore {
        value: agreement(a, b),
        kind: ScoreKind::Hs,
    })
}

/// Best Hamming similarity over circular column shifts in `-max_shift..=max_shift`.
/// Not used by the default protocol.
pub fn best_shift_similarity(
    a: &IrisCode,
    b: &IrisCode,
    max_shift: usize,
) -> Result<MatchScore, MatchError> {
    check_compatible(a, b)?;
    let best = (-(max_shift as isize)..=max_shift as isize)
        .map(|s| agreement(a, &b.shifted_columns(s)))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MatchScore {
        value: best,
        kind: ScoreKind::Hs,
    })
}

/// A labelled identity holding 1 to 10 compatible templates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrolledIdentity {
    label: String,
    templates: Vec<IrisCode>,
}

impl EnrolledIdentity {
    pub fn new(label: impl Into<String>, templates: Vec<IrisCode>) -> Result<Self, MatchError> {
        let first = templates.first().ok_or(MatchError::EmptyIdentity)?;
        if templates.len() > MAX_TEMPLATES {
            return Err(MatchError::TooManyTemplates(templates.len()));
        }
        for t in &templates[1..] {
            check_compatible(first, t)?;
        }
        Ok(Self {
            label: label.into(),
            templates,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn templates(&self) -> &[IrisCode] {
        &self.templates
    }
}

/// `mean(HSS) + std(HSS) - s/2` with the sample standard deviation.
pub fn mdss(
    candidate: &IrisCode,
    identity: &EnrolledIdentity,
    imposter_std: f64,
) -> Result<MatchScore, MatchError> {
    mdss_with(candidate, identity, imposter_std, StdConvention::Sample)
}

pub fn mdss_with(
    candidate: &IrisCode,
    identity: &EnrolledIdentity,
    imposter_std: f64,
    convention: StdConvention,
) -> Result<MatchScore, MatchError> {
    if !(imposter_std > 0.0) {
        return Err(MatchError::InvalidImposterStd(imposter_std));
    }
    let hss = identity
        .templates
        .iter()
        .map(|t| hamming_similarity(candidate, t).map(|s| s.value))
        .collect::<Result<Vec<_>, _>>()?;
    let n = hss.len() as f64;
    let mean = hss.iter().sum::<f64>() / n;
    let ss: f64 = hss.iter().map(|h| (h - mean) * (h - mean)).sum();
    let std = match (convention, hss.len()) {
        (_, 1) => 0.0,
        (StdConvention::Sample, _) => (ss / (n - 1.0)).sqrt(),
        (StdConvention::Population, _) => (ss / n).sqrt(),
    };
    Ok(MatchScore {
        value: mean + std - imposter_std / 2.0,
        kind: ScoreKind::Mdss,
    })
}

/// One scored comparison, kept with enough context to serialize.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub kind: ScoreKind,
    pub genuine: bool,
    pub score: f64,
}

/// Comparisons in canonical order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Comparisons(pub Vec<Comparison>);

impl Comparisons {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn genuine_count(&self) -> usize {
        self.0.iter().filter(|c| c.genuine).count()
    }

    pub fn imposter_count(&self) -> usize {
        self.len() - self.genuine_count()
    }

    pub fn score_set(&self) -> ScoreSet {
        let (genuine, imposter): (Vec<&Comparison>, Vec<&Comparison>) =
            self.0.iter().partition(|c| c.genuine);
        ScoreSet::new(
            genuine.iter().map(|c| c.score).collect(),
            imposter.iter().map(|c| c.score).collect(),
        )
    }

    /// CSV with header `pair_id,label_a,label_b,kind,genuine,score`. Scores
    /// use the shortest representation that round-trips exactly.
    pub fn write_csv(&self, w: impl std::io::Write) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["pair_id", "label_a", "label_b", "kind", "genuine", "score"])?;
        for (i, c) in self.0.iter().enumerate() {
            out.write_record([
                i.to_string(),
                c.label_a.clone(),
                c.label_b.clone(),
                c.kind.as_str().to_string(),
                u8::from(c.genuine).to_string(),
                format!("{:?}", c.score),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl std::io::Read) -> Result<Self, csv::Error> {
        #[derive(Deserialize)]
        struct Row {
            #[allow(dead_code)]
            pair_id: usize,
            label_a: String,
            label_b: String,
            kind: ScoreKind,
            genuine: u8,
            score: f64,
        }
        let mut rdr = csv::Reader::from_reader(r);
        let mut out = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            out.push(Comparison {
                label_a: row.label_a,
                label_b: row.label_b,
                kind: row.kind,
                genuine: row.genuine != 0,
                score: row.score,
            });
        }
        Ok(Self(out))
    }
}

/// Scores every unordered pair once, in `(i, j)` order with `i < j`. A pair
/// is genuine iff its eye labels match.
pub fn all_pairs_scores(templates: &[(String, IrisCode)]) -> Result<Comparisons, MatchError> {
    if templates.len() < 2 {
        return Err(MatchError::TooFewTemplates(templates.len()));
    }
    for (_, t) in &templates[1..] {
        check_compatible(&templates[0].1, t)?;
    }
    let rows: Vec<Vec<Comparison>> = (0..templates.len())
        .into_par_iter()
        .map(|i| {
            let (la, a) = &templates[i];
            templates[i + 1..]
                .iter()
                .map(|(lb, b)| Comparison {
                    label_a: la.clone(),
                    label_b: lb.clone(),
                    kind: ScoreKind::Hs,
                    genuine: la == lb,
                    score: agreement(a, b),
                })
                .collect()
        })
        .collect();
    Ok(Comparisons(rows.into_iter().flatten().collect()))
}

/// Scores every candidate against every identity with MDSS, candidates in
/// order, identities in gallery order.
pub fn identity_gallery_scores(
    gallery: &[EnrolledIdentity],
    candidates: &[(String, IrisCode)],
    imposter_std: f64,
    convention: StdConvention,
) -> Result<Comparisons, MatchError> {
    if gallery.is_empty() {
        return Err(MatchError::Empty("gallery"));
    }
    if candidates.is_empty() {
        return Err(MatchError::Empty("candidate"));
    }
    let rows: Vec<Vec<Comparison>> = candidates
        .par_iter()
        .map(|(label, code)| {
            gallery
                .iter()
                .map(|identity| {
                    mdss_with(code, identity, imposter_std, convention).map(|s| Comparison {
                        label_a: label.clone(),
                        label_b: identity.label.clone(),
                        kind: ScoreKind::Mdss,
                        genuine: *label == identity.label,
                        score: s.value,
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(Comparisons(rows.into_iter().flatten().collect()))
}
