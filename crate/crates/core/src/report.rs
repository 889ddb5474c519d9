//! Evaluation summaries and their text/CSV renderings.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::code::EncoderKind;
use crate::encoders::EncoderConfig;
use crate::evaluation::{
    decidability, eer, extremes, fisher_ratio, histogram, operating_table, pofa, roc_curve, stats,
    storage_efficiency, DistributionStats, EqualErrorRate, EvalError, Extremes, OperatingPoint,
    ScoreSet, Target,
};

/// One requested operating point; `point` is `None` when unreachable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingRow {
    pub target: Target,
    pub point: Option<OperatingPoint>,
}

/// Every metric reported for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub code_bits: usize,
    pub genuine: DistributionStats,
    pub imposter: DistributionStats,
    pub decidability: f64,
    pub fisher_ratio: f64,
    pub eer: EqualErrorRate,
    pub extremes: Extremes,
    pub pofa_at_mgs: f64,
    pub storage_efficiency: f64,
    pub operating_points: Vec<OperatingRow>,
}

pub fn evaluate(
    scores: &ScoreSet,
    code_bits: usize,
    frr_targets: &[f64],
    far_targets: &[f64],
) -> Result<EvaluationReport, EvalError> {
    let genuine = stats(scores.genuine())?;
    let imposter = stats(scores.imposter())?;
    let ext = extremes(scores)?;
    let targets = frr_targets
        .iter()
        .map(|&c| Target::Frr(c))
        .chain(far_targets.iter().map(|&c| Target::Far(c)));
    let operating_points = targets
        .zip(operating_table(scores, &imposter, frr_targets, far_targets))
        .map(|(target, point)| OperatingRow {
            target,
            point: point.ok(),
        })
        .collect();
    Ok(EvaluationReport {
        code_bits,
        decidability: decidability(&genuine, &imposter)?,
        fisher_ratio: fisher_ratio(&genuine, &imposter)?,
        eer: eer(scores)?,
        pofa_at_mgs: pofa(&imposter, ext.mgs)?,
        storage_efficiency: storage_efficiency(imposter.dof, code_bits),
        extremes: ext,
        genuine,
        imposter,
        operating_points,
    })
}

/// System parameters printed above the metrics of one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportColumn {
    pub title: String,
    /// Unknown when evaluating a bare scores file.
    pub encoder: Option<EncoderConfig>,
    pub enrollment: String,
    pub report: EvaluationReport,
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn pair(a: f64, b: f64) -> String {
    format!("{} / {}", num(a), num(b))
}

fn filter_size(cfg: Option<&EncoderConfig>) -> String {
    let Some(cfg) = cfg else {
        return "-".into();
    };
    match cfg.encoder {
        EncoderKind::Hh1 => cfg.hilbert_size.to_string(),
        EncoderKind::Hh2 => format!("{}; {}", cfg.hilbert_size, cfg.hilbert_size / 2),
        EncoderKind::Lge => "not applicable".into(),
    }
}

fn target_label(t: &Target) -> String {
    match t {
        Target::Frr(c) => format!("near a FRR of {}:", num(*c)),
        Target::Far(c) => format!("near a FAR of {c:e}:"),
    }
}

/// Side-by-side table with one column per experiment, rows laid out like
/// the classic single/multi-enrollment result tables.
pub fn render_table(columns: &[ReportColumn]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    let mut push = |label: &str, f: &dyn Fn(&ReportColumn) -> String| {
        rows.push((label.to_string(), columns.iter().map(f).collect()));
    };
    push("TESTS:", &|c| c.title.clone());
    push("System parameters:", &|_| String::new());
    push("  Iris code size", &|c| match &c.encoder {
        Some(e) => format!(
            "{}x{} ({} bits)",
            e.code_rows, e.code_cols, c.report.code_bits
        ),
        None => format!("{} bits", c.report.code_bits),
    });
    push("  Encoder / enrollment", &|c| {
        let name = c.encoder.map_or("-".to_string(), |e| e.encoder.to_string());
        format!("{name} / {}", c.enrollment)
    });
    push("  Hilbert filter size", &|c| {
        filter_size(c.encoder.as_ref())
    });
    push("Inter-class score distribution:", &|_| String::new());
    push("  Mean / Standard deviation", &|c| {
        pair(c.report.imposter.mean, c.report.imposter.std)
    });
    push("  Degrees-of-freedom", &|c| num(c.report.imposter.dof));
    push("  Comparisons", &|c| c.report.imposter.count.to_string());
    push("Intra-class score distribution:", &|_| String::new());
    push("  Mean / Standard deviation", &|c| {
        pair(c.report.genuine.mean, c.report.genuine.std)
    });
    push("  Degrees-of-freedom", &|c| num(c.report.genuine.dof));
    push("  Comparisons", &|c| c.report.genuine.count.to_string());
    push("Evaluation criteria:", &|_| String::new());
    push("  Decidability index / Fisher's ratio", &|c| {
        pair(c.report.decidability, c.report.fisher_ratio)
    });
    push("  EER / EER threshold", &|c| {
        pair(c.report.eer.rate, c.report.eer.threshold)
    });
    push("  MIS / mGS", &|c| {
        pair(c.report.extremes.mis, c.report.extremes.mgs)
    });
    push("  mGS - MIS", &|c| num(c.report.extremes.margin));
    push("  FAR(MIS) / FRR(MIS)", &|c| {
        pair(c.report.extremes.far_at_mis, c.report.extremes.frr_at_mis)
    });
    push("  FAR(mGS) / FRR(mGS)", &|c| {
        pair(c.report.extremes.far_at_mgs, c.report.extremes.frr_at_mgs)
    });
    push("  POFA(mGS)", &|c| num(c.report.pofa_at_mgs));
    push("  Storage efficiency (%)", &|c| {
        num(c.report.storage_efficiency)
    });
    push("FUNCTIONING REGIMES:", &|_| String::new());

    let n_targets = columns
        .first()
        .map_or(0, |c| c.report.operating_points.len());
    for i in 0..n_targets {
        let label = target_label(&columns[0].report.operating_points[i].target);
        rows.push((format!("  {label}"), vec![String::new(); columns.len()]));
        let cell = |c: &ReportColumn, f: &dyn Fn(&OperatingPoint) -> String| {
            c.report
                .operating_points
                .get(i)
                .and_then(|r| r.point.as_ref())
                .map_or_else(|| "unreachable".to_string(), f)
        };
        rows.push((
            "    threshold / FRR(threshold)".into(),
            columns
                .iter()
                .map(|c| cell(c, &|p| pair(p.threshold, p.frr)))
                .collect(),
        ));
        rows.push((
            "    FAR(threshold) / POFA(threshold)".into(),
            columns
                .iter()
                .map(|c| cell(c, &|p| pair(p.far, p.pofa)))
                .collect(),
        ));
    }

    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns.len())
        .map(|j| rows.iter().map(|(_, v)| v[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (label, values) in &rows {
        let mut line = format!("{label:<label_width$}");
        for (v, w) in values.iter().zip(&widths) {
            let _ = write!(line, "  {v:<w$}");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// `threshold,far,frr,pofa` at every distinct score.
pub fn write_roc_csv(
    scores: &ScoreSet,
    imposter: &DistributionStats,
    w: impl io::Write,
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["threshold", "far", "frr", "pofa"])?;
    for p in roc_curve(scores, imposter)? {
        out.write_record([num(p.threshold), num(p.far), num(p.frr), num(p.pofa)])?;
    }
    out.flush()?;
    Ok(())
}

/// `bin_center,genuine_freq,imposter_freq,log10_genuine,log10_imposter`;
/// log columns are empty for empty bins.
pub fn write_histogram_csv(
    scores: &ScoreSet,
    code_bits: usize,
    w: impl io::Write,
) -> Result<(), csv::Error> {
    let log = |v: f64| {
        if v > 0.0 {
            num(v.log10())
        } else {
            String::new()
        }
    };
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "bin_center",
        "genuine_freq",
        "imposter_freq",
        "log10_genuine",
        "log10_imposter",
    ])?;
    for b in histogram(scores, code_bits) {
        out.write_record([
            num(b.center),
            num(b.genuine),
            num(b.imposter),
            log(b.genuine),
            log(b.imposter),
        ])?;
    }
    out.flush()?;
    Ok(())
}
