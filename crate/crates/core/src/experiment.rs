//! Dataset manifests and end-to-end runs: segment, encode, score, evaluate.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{IrisCode, TemplateError};
use crate::encoders::{EncodeError, Encoder, EncoderConfig};
use crate::evaluation::{stats, EvalError, ScoreSet, DEFAULT_FAR_TARGETS, DEFAULT_FRR_TARGETS};
use crate::gray::{GrayImage, ImageError};
use crate::matching::{
    all_pairs_scores, identity_gallery_scores, Comparisons, EnrolledIdentity, MatchError,
    StdConvention, MAX_TEMPLATES,
};
use crate::report::{
    evaluate, render_table, write_histogram_csv, write_roc_csv, EvaluationReport, ReportColumn,
};
use crate::segmentation::{segment, PupilCircle};
use crate::synth::SynthSample;

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    File(PathBuf, #[source] io::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Other(String),
}

/// One image of the dataset. `path` is relative to the manifest directory
/// unless absolute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub subject: String,
    pub eye: String,
    pub sample: usize,
}

impl ManifestEntry {
    /// Identity label: subject and eye side together.
    pub fn eye_label(&self) -> String {
        format!("{}_{}", self.subject, self.eye)
    }

    fn canonical_key(&self) -> (&str, &str, usize) {
        (&self.subject, &self.eye, self.sample)
    }
}

/// Validated list of images in canonical (subject, eye, sample) order.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(
        root: impl Into<PathBuf>,
        mut entries: Vec<ManifestEntry>,
    ) -> Result<Self, ExperimentError> {
        if entries.is_empty() {
            return Err(ExperimentError::Manifest("no entries".into()));
        }
        entries.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
        for pair in entries.windows(2) {
            if pair[0].canonical_key() == pair[1].canonical_key() {
                return Err(ExperimentError::Manifest(format!(
                    "duplicate sample {} of {}",
                    pair[1].sample,
                    pair[1].eye_label()
                )));
            }
        }
        let mut paths: Vec<&str> = entries.iter().map(|e| e.path.as_str()).collect();
        paths.sort_unstable();
        if let Some(p) = paths.windows(2).find(|w| w[0] == w[1]) {
            return Err(ExperimentError::Manifest(format!(
                "duplicate path {}",
                p[0]
            )));
        }
        if let Some(e) = entries
            .iter()
            .find(|e| e.subject.is_empty() || e.eye.is_empty())
        {
            return Err(ExperimentError::Manifest(format!(
                "empty label for {}",
                e.path
            )));
        }
        Ok(Self {
            root: root.into(),
            entries,
        })
    }

    /// Reads `path,subject,eye,sample` rows; relative image paths resolve
    /// against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| ExperimentError::File(path.into(), e))?;
        let entries = csv::Reader::from_reader(file)
            .deserialize()
            .collect::<Result<Vec<ManifestEntry>, _>>()?;
        Self::new(path.parent().unwrap_or(Path::new(".")), entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn identity_count(&self) -> usize {
        let mut labels: Vec<String> = self.entries.iter().map(ManifestEntry::eye_label).collect();
        labels.dedup();
        labels.len()
    }
}

/// Writes rendered samples as PGM (or PNG) files under `dir/images` plus
/// `dir/manifest.csv`.
pub fn write_synth_dataset(
    dir: impl AsRef<Path>,
    samples: &[SynthSample],
    png: bool,
) -> Result<DatasetManifest, ExperimentError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("images"))?;
    let ext = if png { "png" } else { "pgm" };
    let entries = samples
        .par_iter()
        .map(|s| {
            let rel = format!("images/{}_{}_{:03}.{ext}", s.subject, s.eye, s.sample);
            let out = dir.join(&rel);
            if png {
                s.image.save_png(&out)?;
            } else {
                s.image.save_pgm(&out)?;
            }
            Ok(ManifestEntry {
                path: rel,
                subject: s.subject.clone(),
                eye: s.eye.to_string(),
                sample: s.sample,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let manifest = DatasetManifest::new(dir, entries)?;
    manifest.save(dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn default_templates() -> usize {
    MAX_TEMPLATES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Enrollment {
    /// Every template against every other, Hamming similarity.
    #[default]
    Single,
    /// The first `templates` samples of each eye form its identity; the rest
    /// are candidates scored with MDSS.
    Multi {
        #[serde(default = "default_templates")]
        templates: usize,
    },
}

impl Enrollment {
    pub fn name(&self) -> String {
        match self {
            Self::Single => "single".into(),
            Self::Multi { templates } => format!("multi (k={templates})"),
        }
    }
}

fn default_frr_targets() -> Vec<f64> {
    DEFAULT_FRR_TARGETS.to_vec()
}

fn default_far_targets() -> Vec<f64> {
    DEFAULT_FAR_TARGETS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub title: String,
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub enrollment: Enrollment,
    /// Imposter standard deviation for MDSS. When absent it is read from
    /// `paired_metrics`, or else measured with a single-enrollment pass over
    /// the same templates.
    #[serde(default)]
    pub mdss_s: Option<f64>,
    #[serde(default)]
    pub paired_metrics: Option<PathBuf>,
    #[serde(default)]
    pub std_convention: StdConvention,
    #[serde(default = "default_frr_targets")]
    pub frr_targets: Vec<f64>,
    #[serde(default = "default_far_targets")]
    pub far_targets: Vec<f64>,
}

impl ExperimentConfig {
    pub fn new(encoder: EncoderConfig, enrollment: Enrollment) -> Self {
        Self {
            title: String::new(),
            encoder,
            enrollment,
            mdss_s: None,
            paired_metrics: None,
            std_convention: StdConvention::default(),
            frr_targets: default_frr_targets(),
            far_targets: default_far_targets(),
        }
    }

    /// TOML, or JSON when the extension is `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::File(path.into(), e))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.encoder.validate()?;
        if let Enrollment::Multi { templates } = self.enrollment {
            if templates == 0 || templates > MAX_TEMPLATES {
                return Err(ExperimentError::Config(format!(
                    "enrollment needs 1..={MAX_TEMPLATES} templates, got {templates}"
                )));
            }
        }
        if let Some(s) = self.mdss_s {
            if !(s > 0.0 && s.is_finite()) {
                return Err(ExperimentError::Config(format!(
                    "mdss_s must be positive, got {s}"
                )));
            }
        }
        let bad = |t: &f64| !(*t > 0.0 && *t < 1.0);
        if self.frr_targets.iter().chain(&self.far_targets).any(bad) {
            return Err(ExperimentError::Config("targets must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Per-image outcome of segmentation and encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub entry: ManifestEntry,
    pub pupil: Option<PupilCircle>,
    pub limbic_radius: Option<f64>,
    pub template: Result<IrisCode, String>,
}

impl ImageRecord {
    pub fn is_ok(&self) -> bool {
        self.template.is_ok()
    }
}

/// Segments and encodes every manifest image in parallel. Failures are kept
/// in the returned records rather than aborting the run.
pub fn process_images(
    manifest: &DatasetManifest,
    cfg: &EncoderConfig,
) -> Result<Vec<ImageRecord>, ExperimentError> {
    let encoder = Encoder::new(*cfg)?;
    let (angles, radii) = cfg.segment_dims();
    Ok(manifest
        .entries()
        .par_iter()
        .map(|entry| {
            let mut record = ImageRecord {
                entry: entry.clone(),
                pupil: None,
                limbic_radius: None,
                template: Err(String::new()),
            };
            let img = match GrayImage::open(manifest.resolve(entry)) {
                Ok(img) => img,
                Err(e) => {
                    record.template = Err(e.to_string());
                    return record;
                }
            };
            match segment(&img, angles, radii) {
                Ok(seg) => {
                    record.pupil = Some(seg.pupil);
                    record.limbic_radius = Some(seg.limbic_radius);
                    record.template = encoder.encode(&seg.normalized).map_err(|e| e.to_string());
                }
                Err(e) => record.template = Err(e.to_string()),
            }
            record
        })
        .collect())
}

/// Gallery and candidates for multi-enrollment, both in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrollmentSplit {
    pub gallery: Vec<EnrolledIdentity>,
    pub candidates: Vec<(String, IrisCode)>,
    /// Entries behind each gallery identity, then each candidate.
    pub gallery_entries: Vec<Vec<ManifestEntry>>,
    pub candidate_entries: Vec<ManifestEntry>,
}

/// The first `k` successfully encoded samples (by sample index) of each eye
/// are enrolled; the remaining ones become candidates.
pub fn split_enrollment(
    templates: &[(ManifestEntry, IrisCode)],
    k: usize,
) -> Result<EnrollmentSplit, ExperimentError> {
    let mut by_eye: BTreeMap<(String, String), Vec<&(ManifestEntry, IrisCode)>> = BTreeMap::new();
    for t in templates {
        by_eye
            .entry((t.0.subject.clone(), t.0.eye.clone()))
            .or_default()
            .push(t);
    }
    let mut split = EnrollmentSplit {
        gallery: Vec::new(),
        candidates: Vec::new(),
        gallery_entries: Vec::new(),
        candidate_entries: Vec::new(),
    };
    let mut candidates = Vec::new();
    for items in by_eye.values_mut() {
        items.sort_by_key(|t| t.0.sample);
        let take = k.min(items.len());
        let label = items[0].0.eye_label();
        split.gallery.push(EnrolledIdentity::new(
            label,
            items[..take].iter().map(|t| t.1.clone()).collect(),
        )?);
        split
            .gallery_entries
            .push(items[..take].iter().map(|t| t.0.clone()).collect());
        candidates.extend(items[take..].iter().copied());
    }
    candidates.sort_by(|a, b| a.0.canonical_key().cmp(&b.0.canonical_key()));
    for (entry, code) in candidates {
        split.candidates.push((entry.eye_label(), code.clone()));
        split.candidate_entries.push(entry.clone());
    }
    Ok(split)
}

/// Imposter standard deviation stored in a metrics JSON file.
pub fn imposter_std_from_metrics(path: impl AsRef<Path>) -> Result<f64, ExperimentError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::File(path.into(), e))?;
    let report: EvaluationReport = serde_json::from_str(&text)?;
    Ok(report.imposter.std)
}

fn labeled(templates: &[(ManifestEntry, IrisCode)]) -> Vec<(String, IrisCode)> {
    templates
        .iter()
        .map(|(e, c)| (e.eye_label(), c.clone()))
        .collect()
}

/// Scores successfully encoded templates under `config.enrollment`. Returns
/// the comparisons and, for multi-enrollment, the imposter std used.
pub fn score_templates(
    templates: &[(ManifestEntry, IrisCode)],
    config: &ExperimentConfig,
) -> Result<(Comparisons, Option<f64>), ExperimentError> {
    match config.enrollment {
        Enrollment::Single => Ok((all_pairs_scores(&labeled(templates))?, None)),
        Enrollment::Multi { templates: k } => {
            let s = match (config.mdss_s, &config.paired_metrics) {
                (Some(s), _) => s,
                (None, Some(path)) => imposter_std_from_metrics(path)?,
                (None, None) => {
                    let single = all_pairs_scores(&labeled(templates))?.score_set();
                    stats(single.imposter())?.std
                }
            };
            let split = split_enrollment(templates, k)?;
            if split.candidates.is_empty() {
                return Err(ExperimentError::Config(format!(
                    "no candidates left: every eye has at most {k} encoded samples; lower the enrollment size"
                )));
            }
            let cmp = identity_gallery_scores(
                &split.gallery,
                &split.candidates,
                s,
                config.std_convention,
            )?;
            Ok((cmp, Some(s)))
        }
    }
}

/// Everything produced by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub records: Vec<ImageRecord>,
    pub comparisons: Comparisons,
    pub scores: ScoreSet,
    pub report: EvaluationReport,
    pub mdss_s: Option<f64>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn column(&self, title: impl Into<String>) -> ReportColumn {
        ReportColumn {
            title: title.into(),
            encoder: Some(self.config.encoder),
            enrollment: self.config.enrollment.name(),
            report: self.report.clone(),
        }
    }

    /// Writes templates, the template index, scores, metrics, ROC and
    /// histogram exports into `dir`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let dir = dir.as_ref();
        write_templates(dir, &self.records)?;
        self.comparisons
            .write_csv(BufWriter::new(File::create(dir.join("scores.csv"))?))?;
        write_report(
            dir,
            &self.report,
            &self.scores,
            &[self.column(self.title())],
        )?;
        let mut cfg = self.config.clone();
        if cfg.mdss_s.is_none() {
            cfg.mdss_s = self.mdss_s;
        }
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;
        Ok(())
    }

    fn title(&self) -> String {
        if self.config.title.is_empty() {
            format!(
                "{} {}",
                self.config.encoder.encoder,
                self.config.enrollment.name()
            )
        } else {
            self.config.title.clone()
        }
    }
}

/// Writes `metrics.txt`, `metrics.json`, `roc.csv` and `histogram.csv`.
pub fn write_report(
    dir: &Path,
    report: &EvaluationReport,
    scores: &ScoreSet,
    columns: &[ReportColumn],
) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.txt"), render_table(columns))?;
    fs::write(
        dir.join("metrics.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    write_roc_csv(
        scores,
        &report.imposter,
        BufWriter::new(File::create(dir.join("roc.csv"))?),
    )
    .map_err(|e| ExperimentError::Other(e.to_string()))?;
    write_histogram_csv(
        scores,
        report.code_bits,
        BufWriter::new(File::create(dir.join("histogram.csv"))?),
    )?;
    Ok(())
}

/// Row of `templates.csv`: where each template went, or why none exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateIndexRow {
    pub image: String,
    pub subject: String,
    pub eye: String,
    pub sample: usize,
    pub template: String,
    pub pupil_x: Option<f64>,
    pub pupil_y: Option<f64>,
    pub pupil_radius: Option<f64>,
    pub limbic_radius: Option<f64>,
    pub error: String,
}

impl TemplateIndexRow {
    pub fn entry(&self) -> ManifestEntry {
        ManifestEntry {
            path: self.image.clone(),
            subject: self.subject.clone(),
            eye: self.eye.clone(),
            sample: self.sample,
        }
    }
}

pub const TEMPLATE_INDEX_FILE: &str = "templates.csv";

/// Saves each template as `templates/<subject>_<eye>_<sample>.irsc` and
/// writes the index `templates.csv` (template paths relative to `dir`).
pub fn write_templates(dir: &Path, records: &[ImageRecord]) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir.join("templates"))?;
    let rows = records
        .par_iter()
        .map(|r| {
            let e = &r.entry;
            let (template, error) = match &r.template {
                Ok(code) => {
                    let rel = format!("templates/{}_{}_{:03}.irsc", e.subject, e.eye, e.sample);
                    code.save(dir.join(&rel))?;
                    (rel, String::new())
                }
                Err(msg) => (String::new(), msg.clone()),
            };
            Ok(TemplateIndexRow {
                image: e.path.clone(),
                subject: e.subject.clone(),
                eye: e.eye.clone(),
                sample: e.sample,
                template,
                pupil_x: r.pupil.map(|p| p.cx),
                pupil_y: r.pupil.map(|p| p.cy),
                pupil_radius: r.pupil.map(|p| p.radius),
                limbic_radius: r.limbic_radius,
                error,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut w = csv::Writer::from_path(dir.join(TEMPLATE_INDEX_FILE))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads every successfully encoded template listed in a `templates.csv`.
pub fn load_templates(
    index: impl AsRef<Path>,
) -> Result<Vec<(ManifestEntry, IrisCode)>, ExperimentError> {
    let index = index.as_ref();
    let root = index.parent().unwrap_or(Path::new("."));
    let file = File::open(index).map_err(|e| ExperimentError::File(index.into(), e))?;
    let rows = csv::Reader::from_reader(file)
        .deserialize()
        .collect::<Result<Vec<TemplateIndexRow>, _>>()?;
    let mut out: Vec<(ManifestEntry, IrisCode)> = rows
        .par_iter()
        .filter(|r| !r.template.is_empty())
        .map(|r| Ok((r.entry(), IrisCode::load(root.join(&r.template))?)))
        .collect::<Result<_, ExperimentError>>()?;
    out.sort_by(|a, b| a.0.canonical_key().cmp(&b.0.canonical_key()));
    Ok(out)
}

fn successes(records: &[ImageRecord]) -> Vec<(ManifestEntry, IrisCode)> {
    records
        .iter()
        .filter_map(|r| {
            r.template
                .as_ref()
                .ok()
                .map(|c| (r.entry.clone(), c.clone()))
        })
        .collect()
}

/// Segments, encodes, scores and evaluates a dataset.
pub fn run_experiment(
    manifest: &DatasetManifest,
    config: &ExperimentConfig,
) -> Result<ExperimentOutcome, ExperimentError> {
    config.validate()?;
    let records = process_images(manifest, &config.encoder)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} images failed segmentation or encoding",
            records.len()
        );
    }
    let templates = successes(&records);
    let (comparisons, mdss_s) = score_templates(&templates, config)?;
    let scores = comparisons.score_set();
    let report = evaluate(
        &scores,
        config.encoder.code_bits(),
        &config.frr_targets,
        &config.far_targets,
    )?;
    Ok(ExperimentOutcome {
        config: config.clone(),
        records,
        comparisons,
        scores,
        report,
        mdss_s,
    })
}

/// Runs several configurations on one dataset and renders them side by
/// side. Columns are titled by each config's `title`, else `T1`, `T2`, ...
pub fn compare_experiments(
    manifest: &DatasetManifest,
    configs: &[ExperimentConfig],
) -> Result<(Vec<ExperimentOutcome>, String), ExperimentError> {
    let outcomes = configs
        .iter()
        .map(|c| run_experiment(manifest, c))
        .collect::<Result<Vec<_>, _>>()?;
    let columns: Vec<ReportColumn> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let title = if o.config.title.is_empty() {
                format!("T{}", i + 1)
            } else {
                o.config.title.clone()
            };
            o.column(title)
        })
        .collect();
    Ok((outcomes, render_table(&columns)))
}
