use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use irisbench::evaluation::{DEFAULT_FAR_TARGETS, DEFAULT_FRR_TARGETS};
use irisbench::experiment::{
    compare_experiments, load_templates, process_images, run_experiment, score_templates,
    split_enrollment, write_report, write_synth_dataset, write_templates, DatasetManifest,
    Enrollment, ExperimentConfig,
};
use irisbench::matching::{Comparisons, StdConvention, MAX_TEMPLATES};
use irisbench::report::{evaluate, ReportColumn};
use irisbench::synth::{synth_dataset, SynthParams};
use irisbench::transforms::LogGaborParams;
use irisbench::{segment, EncoderConfig, EncoderKind, GrayImage};

#[derive(Parser)]
#[command(
    name = "irisbench",
    version,
    about = "Iris segmentation, encoding, matching and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic eye dataset with a manifest.
    Synth {
        #[arg(long, default_value_t = 20)]
        identities: usize,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write PNG instead of PGM.
        #[arg(long)]
        png: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment every image and export the normalized iris segments.
    Segment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 512)]
        angles: usize,
        #[arg(long, default_value_t = 32)]
        radii: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment and encode every image into IRSC templates.
    Encode {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        encoder: EncoderArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split templates into enrolled identities and candidates.
    Enroll {
        /// `templates.csv` written by `encode`.
        #[arg(long)]
        templates: PathBuf,
        #[arg(long, default_value_t = MAX_TEMPLATES)]
        k: usize,
        /// Output CSV: label,role,subject,eye,sample.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score templates under single or multi-enrollment.
    Match {
        #[arg(long)]
        templates: PathBuf,
        #[command(flatten)]
        scoring: ScoringArgs,
        /// Output scores CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute metrics, ROC and histogram from a scores CSV.
    Evaluate {
        #[arg(long)]
        scores: PathBuf,
        /// Code length in bits (histogram bin width and storage efficiency).
        #[arg(long)]
        bits: usize,
        #[command(flatten)]
        targets: TargetArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline on one configuration.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// TOML or JSON experiment config; overrides the encoder/scoring flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        encoder: EncoderArgs,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[command(flatten)]
        targets: TargetArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several configurations and print them side by side.
    Compare {
        #[arg(long)]
        manifest: PathBuf,
        /// Experiment config files, one column each.
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        /// Encoders sharing the flag parameters, used when no config is given.
        #[arg(long, value_delimiter = ',', default_value = "hh2,hh1,lge")]
        encoders: Vec<EncoderKind>,
        #[command(flatten)]
        encoder: EncoderArgs,
        #[command(flatten)]
        scoring: ScoringArgs,
        #[command(flatten)]
        targets: TargetArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct EncoderArgs {
    #[arg(long, default_value = "hh2")]
    encoder: EncoderKind,
    #[arg(long, default_value_t = 16)]
    rows: usize,
    #[arg(long, default_value_t = 256)]
    cols: usize,
    /// Hilbert filter size (HH1/HH2).
    #[arg(long = "s", default_value_t = 16)]
    hilbert_size: usize,
    /// Log-Gabor center frequency (LGE).
    #[arg(long, default_value_t = 1.0 / 18.0)]
    f0: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma_ratio: f64,
}

impl EncoderArgs {
    fn config(&self, kind: EncoderKind) -> EncoderConfig {
        let lg = LogGaborParams {
            f0: self.f0,
            sigma_ratio: self.sigma_ratio,
        };
        match kind {
            EncoderKind::Hh1 => EncoderConfig::hh1(self.rows, self.cols, self.hilbert_size),
            EncoderKind::Hh2 => EncoderConfig::hh2(self.rows, self.cols, self.hilbert_size),
            EncoderKind::Lge => EncoderConfig::lge(self.rows, self.cols, lg),
        }
    }
}

#[derive(Args, Clone)]
struct ScoringArgs {
    /// single or multi.
    #[arg(long, default_value = "single")]
    mode: String,
    /// Templates per enrolled identity (multi mode).
    #[arg(long, default_value_t = MAX_TEMPLATES)]
    k: usize,
    /// Imposter standard deviation for MDSS.
    #[arg(long)]
    mdss_s: Option<f64>,
    /// metrics.json of a paired single-enrollment run supplying the MDSS s.
    #[arg(long)]
    paired_metrics: Option<PathBuf>,
    /// Use the n divisor for the MDSS standard deviation.
    #[arg(long)]
    population_std: bool,
}

impl ScoringArgs {
    fn enrollment(&self) -> Result<Enrollment> {
        match self.mode.as_str() {
            "single" => Ok(Enrollment::Single),
            "multi" => Ok(Enrollment::Multi { templates: self.k }),
            other => bail!("unknown mode {other:?}, expected single or multi"),
        }
    }

    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        cfg.enrollment = self.enrollment()?;
        cfg.mdss_s = self.mdss_s;
        cfg.paired_metrics = self.paired_metrics.clone();
        if self.population_std {
            cfg.std_convention = StdConvention::Population;
        }
        Ok(())
    }
}

#[derive(Args, Clone)]
struct TargetArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FRR_TARGETS)]
    frr_targets: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_FAR_TARGETS)]
    far_targets: Vec<f64>,
}

fn experiment_config(
    kind: EncoderKind,
    encoder: &EncoderArgs,
    scoring: &ScoringArgs,
    targets: &TargetArgs,
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(encoder.config(kind), Enrollment::Single);
    scoring.apply(&mut cfg)?;
    cfg.frr_targets = targets.frr_targets.clone();
    cfg.far_targets = targets.far_targets.clone();
    cfg.validate()?;
    Ok(cfg)
}

/// Writes a polar segment as an 8-bit image, angles down, radii across.
fn save_segment(path: &Path, seg: &irisbench::PolarIrisSegment) -> Result<()> {
    let data = seg.data();
    let (h, w) = data.dim();
    let bytes: Vec<u8> = data
        .iter()
        .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let img =
        image::GrayImage::from_raw(w as u32, h as u32, bytes).context("segment buffer size")?;
    img.save(path)?;
    Ok(())
}

fn cmd_segment(manifest: &Path, angles: usize, radii: usize, out: &Path) -> Result<()> {
    let manifest = DatasetManifest::load(manifest)?;
    fs::create_dir_all(out.join("segments"))?;
    let rows: Vec<[String; 7]> = manifest
        .entries()
        .par_iter()
        .map(|e| {
            let name = format!("segments/{}_{}_{:03}.pgm", e.subject, e.eye, e.sample);
            let result = GrayImage::open(manifest.resolve(e))
                .map_err(anyhow::Error::from)
                .and_then(|img| Ok(segment(&img, angles, radii)?));
            match result {
                Ok(seg) => {
                    save_segment(&out.join(&name), &seg.normalized)?;
                    Ok([
                        e.path.clone(),
                        name,
                        format!("{:?}", seg.pupil.cx),
                        format!("{:?}", seg.pupil.cy),
                        format!("{:?}", seg.pupil.radius),
                        format!("{:?}", seg.limbic_radius),
                        String::new(),
                    ])
                }
                Err(err) => Ok([
                    e.path.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    err.to_string(),
                ]),
            }
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_path(out.join("segmentation.csv"))?;
    w.write_record([
        "image",
        "segment",
        "pupil_x",
        "pupil_y",
        "pupil_radius",
        "limbic_radius",
        "error",
    ])?;
    let mut failed = 0;
    for r in &rows {
        failed += usize::from(!r[6].is_empty());
        w.write_record(r)?;
    }
    w.flush()?;
    println!("segmented {} of {} images", rows.len() - failed, rows.len());
    Ok(())
}

fn cmd_enroll(templates: &Path, k: usize, out: &Path) -> Result<()> {
    if k == 0 || k > MAX_TEMPLATES {
        bail!("k must be in 1..={MAX_TEMPLATES}");
    }
    let templates = load_templates(templates)?;
    let split = split_enrollment(&templates, k)?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["label", "role", "subject", "eye", "sample"])?;
    for entries in &split.gallery_entries {
        for e in entries {
            w.write_record([
                e.eye_label(),
                "enrolled".into(),
                e.subject.clone(),
                e.eye.clone(),
                e.sample.to_string(),
            ])?;
        }
    }
    for e in &split.candidate_entries {
        w.write_record([
            e.eye_label(),
            "candidate".into(),
            e.subject.clone(),
            e.eye.clone(),
            e.sample.to_string(),
        ])?;
    }
    w.flush()?;
    println!(
        "{} identities, {} candidates",
        split.gallery.len(),
        split.candidates.len()
    );
    Ok(())
}

fn cmd_match(templates: &Path, scoring: &ScoringArgs, out: &Path) -> Result<()> {
    let templates = load_templates(templates)?;
    let Some((_, first)) = templates.first() else {
        bail!("no templates to match");
    };
    let mut cfg = ExperimentConfig::new(
        EncoderConfig::hh2(first.rows(), first.cols(), 2),
        Enrollment::Single,
    );
    scoring.apply(&mut cfg)?;
    let (cmp, s) = score_templates(&templates, &cfg)?;
    cmp.write_csv(BufWriter::new(File::create(out)?))?;
    println!(
        "{} comparisons ({} genuine, {} imposter){}",
        cmp.len(),
        cmp.genuine_count(),
        cmp.imposter_count(),
        s.map(|s| format!(", MDSS s = {s:?}")).unwrap_or_default()
    );
    Ok(())
}

fn cmd_evaluate(scores: &Path, bits: usize, targets: &TargetArgs, out: &Path) -> Result<()> {
    let file = File::open(scores).with_context(|| format!("opening {}", scores.display()))?;
    let cmp = Comparisons::read_csv(file)?;
    let set = cmp.score_set();
    let report = evaluate(&set, bits, &targets.frr_targets, &targets.far_targets)?;
    let column = ReportColumn {
        title: scores.display().to_string(),
        encoder: None,
        enrollment: cmp.0.first().map_or("", |c| c.kind.as_str()).to_string(),
        report: report.clone(),
    };
    write_report(out, &report, &set, &[column])?;
    print!("{}", fs::read_to_string(out.join("metrics.txt"))?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Synth {
            identities,
            samples,
            seed,
            png,
            out,
        } => {
            let data = synth_dataset(identities, samples, seed, &SynthParams::default());
            let manifest = write_synth_dataset(&out, &data, png)?;
            println!(
                "wrote {} images to {}",
                manifest.entries().len(),
                out.display()
            );
        }
        Command::Segment {
            manifest,
            angles,
            radii,
            out,
        } => cmd_segment(&manifest, angles, radii, &out)?,
        Command::Encode {
            manifest,
            encoder,
            out,
        } => {
            let manifest = DatasetManifest::load(manifest)?;
            let records = process_images(&manifest, &encoder.config(encoder.encoder))?;
            write_templates(&out, &records)?;
            let ok = records.iter().filter(|r| r.is_ok()).count();
            println!("encoded {ok} of {} images", records.len());
        }
        Command::Enroll { templates, k, out } => cmd_enroll(&templates, k, &out)?,
        Command::Match {
            templates,
            scoring,
            out,
        } => cmd_match(&templates, &scoring, &out)?,
        Command::Evaluate {
            scores,
            bits,
            targets,
            out,
        } => cmd_evaluate(&scores, bits, &targets, &out)?,
        Command::Run {
            manifest,
            config,
            encoder,
            scoring,
            targets,
            out,
        } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::load(path)?,
                None => experiment_config(encoder.encoder, &encoder, &scoring, &targets)?,
            };
            let manifest = DatasetManifest::load(manifest)?;
            let outcome = run_experiment(&manifest, &cfg)?;
            outcome.write_outputs(&out)?;
            print!("{}", fs::read_to_string(out.join("metrics.txt"))?);
        }
        Command::Compare {
            manifest,
            configs,
            encoders,
            encoder,
            scoring,
            targets,
            out,
        } => {
            let configs = if configs.is_empty() {
                encoders
                    .iter()
                    .map(|&k| experiment_config(k, &encoder, &scoring, &targets))
                    .collect::<Result<Vec<_>>>()?
            } else {
                configs
                    .iter()
                    .map(ExperimentConfig::load)
                    .collect::<Result<Vec<_>, _>>()?
            };
            let manifest = DatasetManifest::load(manifest)?;
            let (outcomes, table) = compare_experiments(&manifest, &configs)?;
            for (i, o) in outcomes.iter().enumerate() {
                o.write_outputs(out.join(format!("T{}", i + 1)))?;
            }
            fs::write(out.join("comparison.txt"), &table)?;
            print!("{table}");
        }
    }
    Ok(())
}
