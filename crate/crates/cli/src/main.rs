//! Command-line driver for the faceprint pipeline: dataset synthesis and
//! ingestion, feature extraction, training, evaluation, and single-image
//! identification.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use faceprint_core::minutiae::{block_features, feature_csv_row};
use faceprint_core::mlp::{default_dims, train, MlpModel};
use faceprint_core::perfusion::{GradientNorm, ThresholdMode};
use faceprint_core::pipeline::{
    evaluate, ingest, load_features_csv, run_stages, synth_faces, PipelineConfig, SynthSpec,
};
use faceprint_core::pnm::read_gray_auto;
use faceprint_core::segmentation::Connectivity;

#[derive(Parser)]
#[command(
    name = "faceprint",
    version,
    about = "Thermal faceprint recognition: vessel-pattern features plus a neural classifier"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic faceprint dataset
    Synth(SynthCmd),
    /// Print a dataset's deterministic train/test manifest as CSV
    Ingest(IngestCmd),
    /// Run the image pipeline over a dataset and write feature vectors
    Extract(ExtractCmd),
    /// Train a classifier from a feature CSV
    Train(TrainCmd),
    /// Train and score per block size, writing reports and models
    Eval(EvalCmd),
    /// Classify a single image with a trained model
    Identify(IdentifyCmd),
}

/// Pipeline knobs shared by the processing subcommands. Every flag may
/// also be set from a `key=value` config file (key = flag name without
/// the leading `--`); explicit flags override the file.
#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// Plain-text key=value config file ('#' starts a comment line)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Foreground connectivity for segmentation: 4 or 8
    #[arg(long)]
    connectivity: Option<u8>,
    /// Scale applied to the estimated vertical (major) crop semi-axis
    #[arg(long)]
    scale_major: Option<f64>,
    /// Scale applied to the estimated horizontal (minor) crop semi-axis
    #[arg(long)]
    scale_minor: Option<f64>,
    /// Gradient magnitude norm: l2 or l1
    #[arg(long)]
    norm: Option<String>,
    /// Gradient threshold: "mean" or a percentile in 0..=100
    #[arg(long)]
    threshold: Option<String>,
    /// Thin the perfusion map before minutiae extraction: true or false
    #[arg(long)]
    thinning: Option<bool>,
    /// Feature grid block size in pixels
    #[arg(long)]
    block_size: Option<usize>,
    /// Gradient-descent learning rate
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Momentum coefficient in [0, 1)
    #[arg(long)]
    momentum: Option<f64>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for the split, weight init, and synthesis
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_connectivity(v: u8) -> Result<Connectivity> {
    match v {
        4 => Ok(Connectivity::Four),
        8 => Ok(Connectivity::Eight),
        other => bail!("connectivity must be 4 or 8, got {other}"),
    }
}

fn parse_norm(s: &str) -> Result<GradientNorm> {
    match s.to_ascii_lowercase().as_str() {
        "l2" => Ok(GradientNorm::L2),
        "l1" => Ok(GradientNorm::L1),
        other => bail!("norm must be l2 or l1, got {other:?}"),
    }
}

fn parse_threshold(s: &str) -> Result<ThresholdMode> {
    if s.eq_ignore_ascii_case("mean") {
        return Ok(ThresholdMode::Mean);
    }
    let p: f64 = s
        .parse()
        .with_context(|| format!("threshold must be \"mean\" or a percentile, got {s:?}"))?;
    Ok(ThresholdMode::Percentile(p))
}

fn apply_kv(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
    where
        T::Err: std::error::Error + Send + Sync + 'static,
    {
        value
            .parse()
            .with_context(|| format!("bad value {value:?} for config key {key:?}"))
    }
    match key {
        "connectivity" => cfg.connectivity = parse_connectivity(num(key, value)?)?,
        "scale-major" => cfg.scale_major = num(key, value)?,
        "scale-minor" => cfg.scale_minor = num(key, value)?,
        "norm" => cfg.norm = parse_norm(value)?,
        "threshold" => cfg.threshold = parse_threshold(value)?,
        "thinning" => cfg.thinning = num(key, value)?,
        "block-size" => cfg.block_size = num(key, value)?,
        "learning-rate" => cfg.train.learning_rate = num(key, value)?,
        "momentum" => cfg.train.momentum = num(key, value)?,
        "epochs" => cfg.train.epochs = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        other => bail!("unknown config key {other:?}"),
    }
    Ok(())
}

impl ConfigArgs {
    /// Defaults, overlaid with the config file, overlaid with the flags.
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').with_context(|| {
                    format!("{}:{}: expected key=value, got {line:?}", path.display(), i + 1)
                })?;
                apply_kv(&mut cfg, key.trim(), value.trim())
                    .with_context(|| format!("{}:{}", path.display(), i + 1))?;
            }
        }
        if let Some(v) = self.connectivity {
            cfg.connectivity = parse_connectivity(v)?;
        }
        if let Some(v) = self.scale_major {
            cfg.scale_major = v;
        }
        if let Some(v) = self.scale_minor {
            cfg.scale_minor = v;
        }
        if let Some(v) = &self.norm {
            cfg.norm = parse_norm(v)?;
        }
        if let Some(v) = &self.threshold {
            cfg.threshold = parse_threshold(v)?;
        }
        if let Some(v) = self.thinning {
            cfg.thinning = v;
        }
        if let Some(v) = self.block_size {
            cfg.block_size = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.train.learning_rate = v;
        }
        if let Some(v) = self.momentum {
            cfg.train.momentum = v;
        }
        if let Some(v) = self.epochs {
            cfg.train.epochs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthCmd {
    /// Output directory for subject_XX/img_YYY.pgm plus ground_truth.csv
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    subjects: usize,
    #[arg(long, default_value_t = 34)]
    per_subject: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Per-pixel noise amplitude (intensity units)
    #[arg(long, default_value_t = 3)]
    noise: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct IngestCmd {
    /// Dataset root laid out as root/<subject>/<image>.pgm|ppm
    #[arg(long, value_name = "DIR")]
    root: PathBuf,
    /// Fraction of each subject's images assigned to the train split
    #[arg(long, default_value_t = 0.5)]
    train_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the manifest CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractCmd {
    /// Dataset root laid out as root/<subject>/<image>.pgm|ppm
    #[arg(long, value_name = "DIR")]
    root: PathBuf,
    /// Write the feature CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct TrainCmd {
    /// Feature CSV of label,c0,c1,... rows (see `extract`)
    #[arg(long, value_name = "FILE")]
    features: PathBuf,
    /// Model output path; label names go to <out>.labels
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct EvalCmd {
    /// Dataset root laid out as root/<subject>/<image>.pgm|ppm
    #[arg(long, value_name = "DIR")]
    root: PathBuf,
    /// Fraction of each subject's images assigned to the train split
    #[arg(long, default_value_t = 0.5)]
    train_ratio: f64,
    /// Block sizes to sweep, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32])]
    blocks: Vec<usize>,
    /// Directory for report.txt, report.csv, and model_b<N>.mlp files
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct IdentifyCmd {
    /// Trained model file (from `train` or `eval`)
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Image to classify
    #[arg(long, value_name = "FILE")]
    image: PathBuf,
    /// Label-name file; defaults to <model>.labels when present
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

fn labels_path_for(model: &Path) -> PathBuf {
    PathBuf::from(format!("{}.labels", model.display()))
}

fn cmd_synth(c: SynthCmd) -> Result<()> {
    let spec = SynthSpec {
        subjects: c.subjects,
        per_subject: c.per_subject,
        width: c.width,
        height: c.height,
        noise: c.noise,
        seed: c.seed,
    };
    synth_faces(&c.out, &spec)?;
    println!(
        "wrote {} images ({} subjects x {}) under {}",
        c.subjects * c.per_subject,
        c.subjects,
        c.per_subject,
        c.out.display()
    );
    Ok(())
}

fn cmd_ingest(c: IngestCmd) -> Result<()> {
    let manifest = ingest(&c.root, c.train_ratio, c.seed)?;
    let (train_n, test_n) = manifest.split_counts();
    let csv = manifest.to_csv();
    match &c.out {
        Some(path) => fs::write(path, csv)
            .with_context(|| format!("writing manifest to {}", path.display()))?,
        None => print!("{csv}"),
    }
    eprintln!(
        "{} subjects, {} train / {} test, images {}x{}",
        manifest.subjects.len(),
        train_n,
        test_n,
        manifest.width,
        manifest.height
    );
    Ok(())
}

fn cmd_extract(c: ExtractCmd) -> Result<()> {
    let cfg = c.cfg.resolve()?;
    let manifest = ingest(&c.root, 0.5, cfg.seed)?;
    let mut rows = String::new();
    let mut kept = 0usize;
    let mut skipped = Vec::new();
    for entry in &manifest.entries {
        let features = read_gray_auto(&entry.path)
            .map_err(anyhow::Error::from)
            .and_then(|gray| {
                let stages = run_stages(&gray, &cfg)?;
                Ok(block_features(
                    &stages.minutiae,
                    manifest.width,
                    manifest.height,
                    cfg.block_size,
                )?)
            });
        match features {
            Ok(fv) => {
                rows.push_str(&feature_csv_row(&entry.subject, &fv));
                kept += 1;
            }
            Err(e) => skipped.push(format!("{}: {e:#}", entry.path.display())),
        }
    }
    for line in &skipped {
        eprintln!("skipped {line}");
    }
    if kept == 0 {
        bail!("every image failed the feature pipeline");
    }
    match &c.out {
        Some(path) => {
            fs::write(path, rows)
                .with_context(|| format!("writing features to {}", path.display()))?;
            eprintln!(
                "wrote {kept} feature rows to {} ({} skipped)",
                path.display(),
                skipped.len()
            );
        }
        None => print!("{rows}"),
    }
    Ok(())
}

fn cmd_train(c: TrainCmd) -> Result<()> {
    let cfg = c.cfg.resolve()?;
    let text = fs::read_to_string(&c.features)
        .with_context(|| format!("reading features from {}", c.features.display()))?;
    let ds = load_features_csv(&text)?;
    if ds.class_names.len() < 2 {
        bail!("need at least 2 classes to train, found {}", ds.class_names.len());
    }
    let dims = default_dims(ds.samples[0].features.len(), ds.class_names.len());
    let init = MlpModel::new(&dims, cfg.seed)?;
    let model = train(&init, &ds.samples, &cfg.train)?;
    model.save(&c.out)?;
    let labels_path = labels_path_for(&c.out);
    fs::write(&labels_path, ds.class_names.join("\n") + "\n")
        .with_context(|| format!("writing labels to {}", labels_path.display()))?;
    let loss = model.loss(&ds.samples, &cfg.train)?;
    println!(
        "trained on {} samples, {} classes; final loss {loss:.6}",
        ds.samples.len(),
        ds.class_names.len()
    );
    println!("model: {} (labels: {})", c.out.display(), labels_path.display());
    Ok(())
}

fn cmd_eval(c: EvalCmd) -> Result<()> {
    let cfg = c.cfg.resolve()?;
    let manifest = ingest(&c.root, c.train_ratio, cfg.seed)?;
    let report = evaluate(&manifest, &cfg, &c.blocks)?;
    fs::create_dir_all(&c.out_dir)
        .with_context(|| format!("creating {}", c.out_dir.display()))?;
    // report files omit the runtime line so identical runs stay
    // byte-identical; stdout keeps it
    fs::write(c.out_dir.join("report.txt"), report.render_text(false))?;
    fs::write(c.out_dir.join("report.csv"), report.render_csv())?;
    for entry in &report.entries {
        let model_path = c.out_dir.join(format!("model_b{}.mlp", entry.block_size));
        entry.model.save(&model_path)?;
        fs::write(
            labels_path_for(&model_path),
            report.subjects.join("\n") + "\n",
        )?;
    }
    print!("{}", report.render_text(true));
    Ok(())
}

fn cmd_identify(c: IdentifyCmd) -> Result<()> {
    let cfg = c.cfg.resolve()?;
    let model = MlpModel::load(&c.model)
        .with_context(|| format!("loading model from {}", c.model.display()))?;
    let gray = read_gray_auto(&c.image)
        .with_context(|| format!("reading image {}", c.image.display()))?;
    let stages = run_stages(&gray, &cfg)?;
    let fv = block_features(&stages.minutiae, gray.width(), gray.height(), cfg.block_size)?;
    let x = fv.to_f64();
    if x.len() != model.input_len() {
        bail!(
            "feature length {} does not match the model's input width {}; \
             pass the block size the model was trained with (--block-size)",
            x.len(),
            model.input_len()
        );
    }
    let idx = model.predict(&x)?;
    let labels_path = c
        .labels
        .clone()
        .unwrap_or_else(|| labels_path_for(&c.model));
    let name = fs::read_to_string(&labels_path)
        .ok()
        .and_then(|text| text.lines().nth(idx).map(str::to_string));
    match name {
        Some(n) => println!("{n}"),
        None => println!("{idx}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Synth(c) => cmd_synth(c),
        Cmd::Ingest(c) => cmd_ingest(c),
        Cmd::Extract(c) => cmd_extract(c),
        Cmd::Train(c) => cmd_train(c),
        Cmd::Eval(c) => cmd_eval(c),
        Cmd::Identify(c) => cmd_identify(c),
    }
}
