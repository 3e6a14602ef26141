//! `qim`: generate fixtures, fit quadric intersection models, score points and
//! evaluate outlier detection and identification.

mod io;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qim_core::{
    auc_roc, fit, identification_rates, inject_outliers, pca_fit, robustify, roc_curve,
    sample_circle, sample_curve, sample_sphere, sample_sphere_cylinder, threshold_search, Cloud,
    Cosine, CurveSpec, FitConfig, IdentificationSetup, LabeledScores, LossVariant, LrSchedule,
    ModelFile, NormScore, NormSign, OutlierScorer,
};

#[derive(Parser)]
#[command(name = "qim", version, about = "Outlier detection with intersections of quadrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic point cloud, optionally with injected outliers.
    Gen(GenArgs),
    /// Fit quadrics to a point cloud.
    Fit(FitArgs),
    /// Write one outlier score per input point.
    Score(ScoreArgs),
    /// Report AUC-ROC and identification rates.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Curve {
    /// Seam curve of a tennis ball on the unit sphere in R³.
    Tennis,
    /// Unit circle in R².
    Circle,
    /// Unit sphere in R^dim.
    Sphere,
    /// Intersection of the unit sphere with the cylinder x² + y² = x.
    SphereCylinder,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "tennis")]
    curve: Curve,
    /// Number of points on the curve.
    #[arg(long, default_value_t = 99, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Standard deviation of the isotropic Gaussian noise.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Number of outliers appended after the curve points.
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    /// Outlier norm as a multiple of the median point norm.
    #[arg(long, default_value_t = 2.0)]
    factor: f64,
    #[arg(long, default_value_t = 0.8)]
    a: f64,
    #[arg(long, default_value_t = 0.2)]
    b: f64,
    /// Ambient dimension for `--curve sphere`.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Point-cloud CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Labels CSV to write (1 marks an injected outlier).
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Loss {
    Qfull,
    Qbase,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Constant,
    Cosine,
}

#[derive(Args)]
struct FitArgs {
    /// Point-cloud CSV.
    #[arg(long)]
    input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    model: PathBuf,
    /// Training trace CSV to write.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "qfull")]
    loss: Loss,
    /// Number of quadrics.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    m: u64,
    /// Weight of the orthogonality penalty.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: u64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Project points onto the unit sphere before fitting.
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value = "cosine")]
    schedule: Schedule,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scorer {
    /// Mean order-2 distance to the quadrics of `--model`.
    Quadric,
    /// Distance to the principal subspace of `--train`.
    Pca,
    /// Euclidean norm of the point.
    Norm,
}

#[derive(Args)]
struct ScoreArgs {
    /// Point-cloud CSV to score.
    #[arg(long)]
    input: PathBuf,
    /// Scores file to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "quadric")]
    scorer: Scorer,
    /// Model file for `--scorer quadric`.
    #[arg(long, required_if_eq("scorer", "quadric"))]
    model: Option<PathBuf>,
    /// Training cloud for `--scorer pca`; defaults to the input.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Subspace dimension for `--scorer pca`.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Center the data before PCA.
    #[arg(long)]
    centered: bool,
    /// Score `-‖p‖` with `--scorer norm`, so that small norms are outlying.
    #[arg(long)]
    low_norm: bool,
    /// Project points onto the unit sphere before scoring.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Outlier scores, one per row.
    #[arg(long, requires = "labels")]
    scores: Option<PathBuf>,
    /// Labels aligned with `--scores` (1 = outlier).
    #[arg(long, requires = "scores")]
    labels: Option<PathBuf>,
    /// ROC curve CSV (`fpr,tpr`) to write.
    #[arg(long, requires = "scores")]
    roc: Option<PathBuf>,
    /// Gallery embeddings for identification.
    #[arg(long, requires = "identities")]
    gallery: Option<PathBuf>,
    /// Identity of each gallery row.
    #[arg(long, requires = "gallery")]
    identities: Option<PathBuf>,
    /// Distractor embeddings.
    #[arg(long, requires = "gallery")]
    distractors: Option<PathBuf>,
    /// Target false positive rate of the pair classifier.
    #[arg(long, default_value_t = 1e-3)]
    fpr: f64,
    /// Model used to robustify the cosine similarity.
    #[arg(long, requires = "gallery")]
    model: Option<PathBuf>,
    /// Comma-separated robustification thresholds to search.
    #[arg(long, requires = "model", value_delimiter = ',')]
    grid: Vec<f64>,
    /// Validation gallery for the threshold search; defaults to `--gallery`.
    #[arg(long, requires_all = ["val_identities", "model"])]
    val_gallery: Option<PathBuf>,
    #[arg(long, requires = "val_gallery")]
    val_identities: Option<PathBuf>,
    #[arg(long, requires = "val_gallery")]
    val_distractors: Option<PathBuf>,
    /// Project embeddings onto the unit sphere before scoring.
    #[arg(long)]
    normalize: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Score(args) => cmd_score(&args),
        Command::Eval(args) => cmd_eval(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let n = usize::try_from(args.n)?;
    // one generator per invocation; each stage draws its own sub-seed
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let sample_seed: u64 = rng.random();
    let outlier_seed: u64 = rng.random();
    let cloud: Cloud = match args.curve {
        Curve::Tennis => sample_curve(&CurveSpec {
            a: args.a,
            b: args.b,
            n,
            noise_sigma: args.noise,
            seed: sample_seed,
        })?,
        Curve::Circle => sample_circle(n, 1.0, args.noise, sample_seed)?,
        Curve::Sphere => sample_sphere(n, args.dim, args.noise, sample_seed)?,
        Curve::SphereCylinder => sample_sphere_cylinder(n, args.noise, sample_seed)?,
    };
    let (cloud, outliers) = inject_outliers(&cloud, args.outliers, args.factor, outlier_seed)?;
    io::write(&args.out, &io::format_cloud(&cloud))?;
    if let Some(path) = &args.labels {
        let labels = qim_core::labels_from_indices(cloud.len(), &outliers);
        io::write(path, &io::format_labels(&labels))?;
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let cloud = io::read_cloud(&args.input)?;
    let loss = match args.loss {
        Loss::Qfull => LossVariant::QFull,
        Loss::Qbase => LossVariant::QBase,
    };
    let config = FitConfig {
        loss,
        m: usize::try_from(args.m)?,
        lambda: args.lambda,
        learning_rate: args.lr,
        batch_size: usize::try_from(args.batch_size)?,
        epochs: args.epochs,
        seed: args.seed,
        normalize_inputs: args.normalize,
        schedule: match args.schedule {
            Schedule::Constant => LrSchedule::Constant,
            Schedule::Cosine => LrSchedule::Cosine,
        },
    };
    let result = fit(&cloud, &config)?;
    let file = ModelFile::new(result.model, loss, args.lambda);
    io::write(&args.model, &file.serialize())?;

    if let Some(path) = &args.trace {
        let mut text = String::from("epoch,data,penalty,total,seconds\n");
        for e in &result.trace.epochs {
            let _ = writeln!(text, "{},{},{},{},{}", e.epoch, e.data, e.penalty, e.total, e.seconds);
        }
        io::write(path, &text)?;
    }
    if let Some(last) = result.trace.last() {
        println!("data={}\npenalty={}\ntotal={}", last.data, last.penalty, last.total);
    }
    Ok(())
}

fn read_model(path: &Path) -> Result<ModelFile<f64>> {
    ModelFile::deserialize(&io::read_text(path)?)
        .with_context(|| format!("cannot load model {}", path.display()))
}

fn maybe_normalize(cloud: Cloud, normalize: bool) -> Cloud {
    if normalize {
        cloud.normalized()
    } else {
        cloud
    }
}

fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let cloud = maybe_normalize(io::read_cloud(&args.input)?, args.normalize);
    let scores = match args.scorer {
        Scorer::Quadric => {
            let path = args.model.as_ref().context("--model is required with --scorer quadric")?;
            let model = read_model(path)?.model;
            if model.dim() != cloud.dim() {
                bail!(
                    "model dimension {} does not match point dimension {}",
                    model.dim(),
                    cloud.dim()
                );
            }
            model.score_batch(&cloud)?
        }
        Scorer::Pca => {
            let train = match &args.train {
                Some(path) => maybe_normalize(io::read_cloud(path)?, args.normalize),
                None => cloud.clone(),
            };
            pca_fit(&train, args.k, args.centered)?.score_all(&cloud)?
        }
        Scorer::Norm => {
            let sign = if args.low_norm {
                NormSign::LowNormOutlier
            } else {
                NormSign::HighNormOutlier
            };
            NormScore::new(sign).score_all(&cloud)?
        }
    };
    let text = io::format_column(&scores);
    match &args.out {
        Some(path) => io::write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn setup(
    gallery: &Path,
    identities: &Path,
    distractors: Option<&PathBuf>,
    fpr: f64,
    normalize: bool,
) -> Result<IdentificationSetup<f64>> {
    let rows = |c: Cloud| c.points().map(<[f64]>::to_vec).collect::<Vec<_>>();
    let gallery_cloud = maybe_normalize(io::read_cloud(gallery)?, normalize);
    let identities = io::read_identities(identities)?;
    if identities.len() != gallery_cloud.len() {
        bail!(
            "{} gallery rows but {} identities",
            gallery_cloud.len(),
            identities.len()
        );
    }
    let distractors = match distractors {
        Some(path) => {
            let d = maybe_normalize(io::read_cloud(path)?, normalize);
            if d.dim() != gallery_cloud.dim() {
                bail!("distractor dimension {} differs from gallery dimension {}", d.dim(), gallery_cloud.dim());
            }
            rows(d)
        }
        None => Vec::new(),
    };
    Ok(IdentificationSetup {
        gallery: rows(gallery_cloud),
        identities,
        distractors,
        fpr,
    })
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut report = String::new();
    if let (Some(scores), Some(labels)) = (&args.scores, &args.labels) {
        let scores = io::read_scores(scores)?;
        let labels = io::read_labels(labels)?;
        if scores.len() != labels.len() {
            bail!("{} scores but {} labels", scores.len(), labels.len());
        }
        let data = LabeledScores::new(scores, labels)?;
        let _ = writeln!(report, "auc={}", auc_roc(&data)?);
        if let Some(path) = &args.roc {
            let mut text = String::from("fpr,tpr\n");
            for (f, t) in roc_curve(&data)? {
                let _ = writeln!(text, "{f},{t}");
            }
            io::write(path, &text)?;
        }
    }

    if let (Some(gallery), Some(identities)) = (&args.gallery, &args.identities) {
        let test = setup(gallery, identities, args.distractors.as_ref(), args.fpr, args.normalize)?;
        let plain = identification_rates(&test, &Cosine)?;
        let _ = writeln!(report, "fpr={}", args.fpr);
        let _ = writeln!(report, "ir={}", plain.ir);
        if !test.distractors.is_empty() {
            let _ = writeln!(report, "full_ir={}", plain.full_ir);
        }

        if let Some(model_path) = &args.model {
            let model = read_model(model_path)?.model;
            if model.dim() != test.gallery.first().map_or(0, Vec::len) {
                bail!("model dimension {} does not match embedding dimension", model.dim());
            }
            if args.grid.is_empty() {
                bail!("--grid is required with --model");
            }
            let validation = match (&args.val_gallery, &args.val_identities) {
                (Some(g), Some(i)) => setup(g, i, args.val_distractors.as_ref(), args.fpr, args.normalize)?,
                _ => test.clone(),
            };
            let choice = threshold_search(&validation, &Cosine, &model, &args.grid)?;
            let robust = identification_rates(&test, &robustify(Cosine, model.clone(), choice.threshold))?;
            let _ = writeln!(report, "threshold={}", choice.threshold);
            let _ = writeln!(report, "threshold_fallback={}", choice.fallback);
            let _ = writeln!(report, "ir_robust={}", robust.ir);
            if !test.distractors.is_empty() {
                let _ = writeln!(report, "full_ir_robust={}", robust.full_ir);
            }
        }
    }
    if report.is_empty() {
        bail!("nothing to evaluate: pass --scores/--labels or --gallery/--identities");
    }
    print!("{report}");
    Ok(())
}
