use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use morphbench::landmark::{generate_landmark_morph, LandmarkSet, MorphMetadata};
use morphbench::latent::{
    generate_latent_morph, read_latent, write_latent, Activation, BlurPyramid, CombineMode, DenseGenerator,
    EmbedConfig, ExternalGenerator, FeatureExtractor, Generator, IdentityFeatures, LatentCode, ReshapeGenerator,
    combine_latents, sidecar_path,
};
use morphbench::mad::{compute_det, DetectorModel, FeatureSet, Label, Pipeline, SvmParams};
use morphbench::protocol::{plan_pairs, MorphMethod, MorphPlan, PlanOptions, Split, SubjectManifest};
use morphbench::raster::{load_png, save_png, Raster};
use morphbench::report::{load_labelled, render};
use morphbench::vuln::{calibrate_threshold, evaluate, export_scatter, rate_above, AttemptMode, ScoreTable, Threshold};
use morphbench::Error;

type Result<T> = std::result::Result<T, Error>;

#[derive(Parser)]
#[command(name = "morphbench", version, about = "Face morph generation and morphing attack evaluation")]
struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split subjects and pair them within gender.
    PairPlan(PairPlanArgs),
    /// Generate morphs.
    #[command(subcommand)]
    Morph(MorphCommand),
    /// Synthesise an image from a latent file.
    Synth(SynthArgs),
    /// Threshold at a target FAR over non-mated scores.
    Calibrate(CalibrateArgs),
    /// Vulnerability report from a score table.
    VulnEval(VulnEvalArgs),
    /// Extract detector features from images.
    MadExtract(MadExtractArgs),
    /// Train a linear SVM detector.
    MadTrain(MadTrainArgs),
    /// Score features with a detector and compute DET metrics.
    MadEval(MadEvalArgs),
    /// Markdown tables from vulnerability and detection reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct PairPlanArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Fraction of each gender bucket used for training.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    #[arg(long)]
    pairs_per_subject: Option<usize>,
    #[arg(long, value_enum, default_value_t = MethodArg::Landmark)]
    method: MethodArg,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    w1: f64,
    #[arg(long, default_value_t = 0.5)]
    w2: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Landmark,
    Latent,
}

#[derive(Subcommand)]
enum MorphCommand {
    /// Landmark-driven morph of one pair, or of every landmark pair in a plan.
    Landmark(LandmarkArgs),
    /// Morph by embedding both images and combining their latent codes.
    Latent(LatentArgs),
}

#[derive(Args)]
struct LandmarkArgs {
    #[arg(long, required_unless_present = "plan")]
    img1: Option<PathBuf>,
    #[arg(long, required_unless_present = "plan")]
    lm1: Option<PathBuf>,
    #[arg(long, required_unless_present = "plan")]
    img2: Option<PathBuf>,
    #[arg(long, required_unless_present = "plan")]
    lm2: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Output PNG (single mode).
    #[arg(short, long, required_unless_present = "plan")]
    output: Option<PathBuf>,
    /// Metadata JSON (single mode).
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Plan to execute; writes `<pair id>.png` and `<pair id>.json` into --out-dir.
    #[arg(long, conflicts_with_all = ["img1", "img2", "lm1", "lm2", "output"], requires_all = ["manifest", "out_dir"])]
    plan: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Only execute pairs of this split.
    #[arg(long, value_enum)]
    split: Option<SplitArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum GeneratorKind {
    Reshape,
    DenseLinear,
    DenseSigmoid,
    External,
}

#[derive(Args)]
struct GeneratorArgs {
    #[arg(long, value_enum, default_value_t = GeneratorKind::Reshape)]
    generator: GeneratorKind,
    /// Latent layout LxD for dense and external generators.
    #[arg(long)]
    latent_shape: Option<String>,
    /// Image layout WxHxC for external generators.
    #[arg(long)]
    output_shape: Option<String>,
    /// Weight seed of the dense generators.
    #[arg(long, default_value_t = 0)]
    generator_seed: u64,
    /// External synthesis program; `{latent}` and `{output}` in --arg are substituted.
    #[arg(long)]
    program: Option<String>,
    #[arg(long = "arg", allow_hyphen_values = true)]
    program_args: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeaturesArg {
    Identity,
    Pyramid,
}

#[derive(Args)]
struct LatentArgs {
    #[arg(long, required_unless_present = "latent1")]
    img1: Option<PathBuf>,
    #[arg(long, required_unless_present = "latent2")]
    img2: Option<PathBuf>,
    /// Precomputed latent of the first subject (skips embedding).
    #[arg(long, requires = "latent2", conflicts_with_all = ["img1", "img2"])]
    latent1: Option<PathBuf>,
    #[arg(long, requires = "latent1")]
    latent2: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, value_enum, default_value_t = FeaturesArg::Identity)]
    features: FeaturesArg,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.5)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    /// Comma-separated per-layer loss weights.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    w1: f64,
    #[arg(long, default_value_t = 0.5)]
    w2: f64,
    /// Use (w1 a + w2 b) / 2 instead of normalising by w1 + w2.
    #[arg(long)]
    literal: bool,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the combined latent (float32 LE plus JSON sidecar).
    #[arg(long)]
    latent_out: Option<PathBuf>,
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    latent: PathBuf,
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    far: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VulnEvalArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Calibrate the threshold at this FAR.
    #[arg(long, conflicts_with = "tau", required_unless_present = "tau")]
    far: Option<f64>,
    /// Use this vendor threshold unchanged.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Aligned)]
    mode: ModeArg,
    /// Also write S1/S2 scatter data (two-subject tables).
    #[arg(long)]
    scatter: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Aligned,
    Cartesian,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Lbp,
    Hog,
    ColorTexture,
}

#[derive(Args)]
struct MadExtractArgs {
    #[arg(long, value_enum)]
    pipeline: PipelineArg,
    /// Working resolution; images are resized to SIZE x SIZE.
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Directory of attack (morph) PNGs.
    #[arg(long)]
    attack: Vec<PathBuf>,
    /// Directory of bona fide PNGs.
    #[arg(long)]
    bonafide: Vec<PathBuf>,
    /// Directory of unlabelled PNGs.
    #[arg(long)]
    unlabelled: Vec<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct MadTrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct MadEvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Write attack/bonafide rows in the score CSV schema.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// LABEL=vuln-report.json
    #[arg(long)]
    vuln: Vec<String>,
    /// LABEL=det-report.json
    #[arg(long)]
    det: Vec<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p.display(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    write_text(path, &text)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn parse_dims<const N: usize>(text: &str, what: &str) -> Result<[usize; N]> {
    let parts: Vec<usize> = text
        .split('x')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("bad {what} {text:?}")))?;
    parts
        .try_into()
        .map_err(|_| usage(format!("{what} {text:?} needs {N} 'x'-separated values")))
}

fn build_generator(args: &GeneratorArgs, image: Option<(usize, usize, usize)>) -> Result<Box<dyn Generator>> {
    let out = match (&args.output_shape, image) {
        (Some(s), _) => {
            let [w, h, c] = parse_dims::<3>(s, "output shape")?;
            (w, h, c)
        }
        (None, Some(shape)) => shape,
        (None, None) => return Err(usage("--output-shape is required here")),
    };
    let latent = args
        .latent_shape
        .as_deref()
        .map(|s| parse_dims::<2>(s, "latent shape").map(|[l, d]| (l, d)))
        .transpose()?;
    Ok(match args.generator {
        GeneratorKind::Reshape => match latent {
            Some((l, d)) => Box::new(ReshapeGenerator::with_layout(l, d, out.0, out.1, out.2)?),
            None => Box::new(ReshapeGenerator::for_image(out.0, out.1, out.2)),
        },
        GeneratorKind::DenseLinear | GeneratorKind::DenseSigmoid => {
            let shape = latent.ok_or_else(|| usage("--latent-shape is required for dense generators"))?;
            let act = if args.generator == GeneratorKind::DenseLinear { Activation::Identity } else { Activation::Sigmoid };
            Box::new(DenseGenerator::seeded(shape, out, act, args.generator_seed))
        }
        GeneratorKind::External => {
            let program = args.program.clone().ok_or_else(|| usage("--program is required for external generators"))?;
            let shape = latent.ok_or_else(|| usage("--latent-shape is required for external generators"))?;
            Box::new(ExternalGenerator {
                id: format!("external:{program}"),
                program,
                args: args.program_args.clone(),
                latent_shape: shape,
                output_shape: out,
                scratch: std::env::temp_dir(),
            })
        }
    })
}

fn pair_plan(a: PairPlanArgs, seed: u64) -> Result<()> {
    let manifest = SubjectManifest::load(&a.manifest)?;
    let method = match a.method {
        MethodArg::Landmark => MorphMethod::Landmark { alpha: a.alpha },
        MethodArg::Latent => MorphMethod::Latent { w1: a.w1, w2: a.w2 },
    };
    let opts = PlanOptions { split_ratio: a.ratio, seed, pairs_per_subject: a.pairs_per_subject, method };
    let plan = plan_pairs(&manifest, &opts)?;
    plan.validate(&manifest, None)?;
    for (split, c) in &plan.counts {
        eprintln!("{split:?}: {} subjects, {} bona fide images, {} morphs", c.subjects, c.bonafide_images, c.morphs);
    }
    plan.save(&a.output)?;
    Ok(())
}

fn landmark_one(img1: &Path, lm1: &Path, img2: &Path, lm2: &Path, alpha: f64) -> Result<(Raster, MorphMetadata)> {
    let (i1, i2) = (load_png(img1)?, load_png(img2)?);
    let (l1, l2) = (LandmarkSet::load(lm1)?, LandmarkSet::load(lm2)?);
    let m = generate_landmark_morph(&i1, &l1, &i2, &l2, alpha)?;
    if m.skipped_triangles > 0 {
        log::warn!("{} degenerate triangles skipped", m.skipped_triangles);
    }
    let meta = MorphMetadata { source_ids: vec![stem(img1), stem(img2)], alpha, skipped_triangles: m.skipped_triangles };
    Ok((m.image, meta))
}

fn morph_landmark(a: LandmarkArgs) -> Result<()> {
    let Some(plan_path) = a.plan else {
        let (img1, lm1, img2, lm2, out) = (a.img1.unwrap(), a.lm1.unwrap(), a.img2.unwrap(), a.lm2.unwrap(), a.output.unwrap());
        let (img, meta) = landmark_one(&img1, &lm1, &img2, &lm2, a.alpha)?;
        save_png(&img, &out)?;
        if let Some(p) = a.meta {
            write_json(Some(&p), &meta)?;
        }
        return Ok(());
    };
    let manifest_path = a.manifest.expect("clap requires --manifest");
    let out_dir = a.out_dir.expect("clap requires --out-dir");
    let manifest = SubjectManifest::load(&manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("")).to_path_buf();
    let plan = MorphPlan::load(&plan_path)?;
    plan.validate(&manifest, Some(&base))?;
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(out_dir.display(), e))?;
    let wanted = a.split.map(|s| match s {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    });
    let jobs: Vec<_> = plan
        .pairs
        .iter()
        .filter(|p| wanted.is_none_or(|w| w == p.split))
        .filter_map(|p| match p.method {
            MorphMethod::Landmark { alpha } => Some((p, alpha)),
            MorphMethod::Latent { .. } => None,
        })
        .collect();
    if jobs.is_empty() {
        log::warn!("plan has no landmark pairs to execute");
    }
    jobs.par_iter().try_for_each(|(p, alpha)| -> Result<()> {
        let lm = |rec: &morphbench::protocol::ImageRecord| {
            rec.landmarks
                .as_ref()
                .map(|l| base.join(l))
                .ok_or_else(|| usage(format!("pair {}: image {} has no landmark file", p.id, rec.path.display())))
        };
        let (img_a, img_b) = (base.join(&p.image_a.path), base.join(&p.image_b.path));
        let (img, mut meta) = landmark_one(&img_a, &lm(&p.image_a)?, &img_b, &lm(&p.image_b)?, *alpha)?;
        meta.source_ids = vec![p.subject_a.clone(), p.subject_b.clone()];
        save_png(&img, out_dir.join(format!("{}.png", p.id)))?;
        write_json(Some(&out_dir.join(format!("{}.json", p.id))), &meta)
    })?;
    eprintln!("wrote {} morphs to {}", jobs.len(), out_dir.display());
    Ok(())
}

#[derive(Serialize)]
struct LatentMeta {
    generator: String,
    features: String,
    weights: (f64, f64),
    mode: CombineMode,
    embedding_losses: Option<[f64; 2]>,
    config: Option<EmbedConfig>,
}

fn morph_latent(a: LatentArgs, seed: u64) -> Result<()> {
    let mode = if a.literal { CombineMode::Literal } else { CombineMode::Normalized };
    if let (Some(l), Some(m)) = (&a.latent_out, &a.meta) {
        if sidecar_path(l) == *m {
            return Err(usage(format!("--meta {} would overwrite the latent sidecar", m.display())));
        }
    }
    let (image, latent, meta) = if let (Some(p1), Some(p2)) = (&a.latent1, &a.latent2) {
        let (z1, _) = read_latent(p1)?;
        let (z2, _) = read_latent(p2)?;
        let gen = build_generator(&a.generator, None)?;
        let z = combine_latents(&z1, &z2, a.w1, a.w2, mode)?;
        let img = gen.synthesize(&z)?;
        let meta = LatentMeta {
            generator: gen.id().to_string(),
            features: String::new(),
            weights: (a.w1, a.w2),
            mode,
            embedding_losses: None,
            config: None,
        };
        (img, z, meta)
    } else {
        let i1 = load_png(a.img1.as_ref().expect("clap requires --img1"))?;
        let i2 = load_png(a.img2.as_ref().expect("clap requires --img2"))?;
        if a.generator.generator == GeneratorKind::External {
            return Err(usage("external generators cannot embed images; pass --latent1/--latent2"));
        }
        let gen = build_generator(&a.generator, Some(i1.shape()))?;
        let feats: Box<dyn FeatureExtractor> = match a.features {
            FeaturesArg::Identity => Box::new(IdentityFeatures),
            FeaturesArg::Pyramid => Box::new(BlurPyramid { levels: a.levels }),
        };
        let cfg = EmbedConfig {
            steps: a.steps,
            learning_rate: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            lambda: a.lambda.clone(),
            seed,
            ..Default::default()
        };
        let m = generate_latent_morph(&i1, &i2, gen.as_ref(), feats.as_ref(), &cfg, a.w1, a.w2, mode)?;
        let meta = LatentMeta {
            generator: gen.id().to_string(),
            features: feats.id().to_string(),
            weights: (a.w1, a.w2),
            mode,
            embedding_losses: Some(m.embedding_losses()),
            config: Some(cfg),
        };
        (m.image, m.latent, meta)
    };
    save_png(&image, &a.output)?;
    if let Some(p) = &a.latent_out {
        write_latent(p, &latent, &meta.generator)?;
    }
    if let Some(p) = &a.meta {
        write_json(Some(p), &meta)?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let (z, sidecar): (LatentCode, _) = read_latent(&a.latent)?;
    let mut g = a.generator;
    if g.latent_shape.is_none() {
        g.latent_shape = Some(format!("{}x{}", sidecar.layers, sidecar.dims));
    }
    if g.program.is_some() && g.generator == GeneratorKind::Reshape {
        g.generator = GeneratorKind::External;
    }
    let gen = build_generator(&g, None)?;
    save_png(&gen.synthesize(&z)?, &a.output)?;
    Ok(())
}

#[derive(Serialize)]
struct Calibration {
    tau: f64,
    far_target: f64,
    far: f64,
    nonmated: usize,
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let table = ScoreTable::load(&a.scores)?;
    let tau = calibrate_threshold(&table.nonmated, a.far)?;
    let out = Calibration { tau, far_target: a.far, far: rate_above(&table.nonmated, tau), nonmated: table.nonmated.len() };
    write_json(a.output.as_deref(), &out)
}

fn vuln_eval(a: VulnEvalArgs) -> Result<()> {
    let table = ScoreTable::load(&a.scores)?;
    let threshold = match (a.far, a.tau) {
        (Some(f), None) => Threshold::Far(f),
        (None, Some(t)) => Threshold::Fixed(t),
        _ => return Err(usage("pass exactly one of --far and --tau")),
    };
    let mode = match a.mode {
        ModeArg::Aligned => AttemptMode::Aligned,
        ModeArg::Cartesian => AttemptMode::Cartesian,
    };
    let report = evaluate(&table, threshold, mode)?;
    if let Some(p) = &a.scatter {
        export_scatter(&table, report.tau, p)?;
    }
    write_json(a.output.as_deref(), &report)
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir.display(), e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir.display(), e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn mad_extract(a: MadExtractArgs) -> Result<()> {
    let pipeline = match a.pipeline {
        PipelineArg::Lbp => Pipeline::lbp(),
        PipelineArg::Hog => Pipeline::hog(),
        PipelineArg::ColorTexture => Pipeline::color_texture(),
    }
    .with_size(a.size);
    let mut inputs: Vec<(PathBuf, Option<Label>)> = Vec::new();
    for (dirs, label) in [(&a.attack, Some(Label::Attack)), (&a.bonafide, Some(Label::Bonafide)), (&a.unlabelled, None)] {
        for d in dirs {
            inputs.extend(list_pngs(d)?.into_iter().map(|p| (p, label)));
        }
    }
    if inputs.is_empty() {
        return Err(usage("no input images; pass --attack, --bonafide or --unlabelled directories"));
    }
    let features: Vec<Vec<f64>> = inputs
        .par_iter()
        .map(|(p, _)| -> Result<Vec<f64>> { Ok(pipeline.extract(&load_png(p)?)?) })
        .collect::<Result<_>>()?;
    let mut set = FeatureSet::new(pipeline);
    for ((path, label), values) in inputs.iter().zip(features) {
        set.push(&stem(path), *label, values)?;
    }
    set.save(&a.output)?;
    Ok(())
}

fn mad_train(a: MadTrainArgs, seed: u64) -> Result<()> {
    let set = FeatureSet::load(&a.features)?;
    let model = DetectorModel::train(&set, SvmParams { c: a.c, epochs: a.epochs }, seed)?;
    model.save(&a.output)?;
    Ok(())
}

fn mad_eval(a: MadEvalArgs) -> Result<()> {
    let model = DetectorModel::load(&a.model)?;
    let set = FeatureSet::load(&a.features)?;
    let scores = model.score_set(&set)?;
    let mut table = ScoreTable::new();
    for (s, score) in set.samples.iter().zip(&scores) {
        if let Some(label) = s.label {
            table.add_detection(label == Label::Attack, &s.id, *score)?;
        }
    }
    if let Some(p) = &a.scores {
        table.save(p)?;
    }
    let report = compute_det(&table.attack_scores(), &table.bonafide_scores())?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_json(a.output.as_deref(), &report)
}

fn report(a: ReportArgs) -> Result<()> {
    if a.vuln.is_empty() && a.det.is_empty() {
        return Err(usage("pass at least one --vuln or --det report"));
    }
    let vuln = a.vuln.iter().map(|s| load_labelled(s)).collect::<std::result::Result<Vec<_>, _>>()?;
    let det = a.det.iter().map(|s| load_labelled(s)).collect::<std::result::Result<Vec<_>, _>>()?;
    write_text(a.output.as_deref(), &render(&vuln, &det))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("--threads: {e}")))?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::PairPlan(a) => pair_plan(a, seed),
        Command::Morph(MorphCommand::Landmark(a)) => morph_landmark(a),
        Command::Morph(MorphCommand::Latent(a)) => morph_latent(a, seed),
        Command::Synth(a) => synth(a),
        Command::Calibrate(a) => calibrate(a),
        Command::VulnEval(a) => vuln_eval(a),
        Command::MadExtract(a) => mad_extract(a),
        Command::MadTrain(a) => mad_train(a, seed),
        Command::MadEval(a) => mad_eval(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
