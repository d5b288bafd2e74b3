//! The `siqa` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{feature_config_hash, RunConfig};
use crate::dataset::{
    default_distortion_grid, load_manifest, make_synthetic_corpus, synthetic_pristine_pairs, Corpus, PristinePair,
    StereoRecord,
};
use crate::error::{Error, Result};
use crate::eval::{
    bland_altman, extract_record, feature_mos_correlation, run_experiment, write_bland_altman, write_scatter,
    FeatureStore, SplitMode,
};
use crate::fusion::{synthesize_pair, write_fused, DisparityMethod};
use crate::image::{save_preview, GrayImage};
use crate::model::{load_model, predict, save_model, train_stacked};
use crate::nss::{read_feature_file, write_feature_file, FeatureRecord};

#[derive(Debug, Parser)]
#[command(name = "siqa", version, about = "No-reference stereo image quality assessment")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML run configuration. Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic distorted corpus with pseudo-DMOS scores.
    CorpusGen(CorpusGenArgs),
    /// Fuse a stereo pair into contrast and phase images.
    Synthesize(SynthesizeArgs),
    /// Extract features for every record of a manifest.
    Extract(ExtractArgs),
    /// Train a stacked model.
    Train(TrainArgs),
    /// Score stereo pairs with a trained model.
    Score(ScoreArgs),
    /// Repeated 80/20 train/test evaluation.
    Evaluate(EvaluateArgs),
    /// Correlation of every feature with the subjective scores.
    FeatureCorr(FeatureCorrArgs),
}

#[derive(Debug, Args, Default)]
pub struct FusionFlags {
    /// Fusion threshold g.
    #[arg(long)]
    pub g: Option<f64>,
    /// Spatial frequency in cycles/degree.
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub ppd: Option<f64>,
    /// Local-mean Gaussian std in pixels.
    #[arg(long)]
    pub mu_sigma: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    /// phase or block.
    #[arg(long, value_parser = parse_disparity)]
    pub disparity: Option<DisparityMethod>,
}

#[derive(Debug, Args, Default)]
pub struct TrainFlags {
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CorpusGenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub scenes: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Use the pristine records of this manifest instead of procedural scenes.
    #[arg(long)]
    pub pristine: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    /// Output container (.siqf).
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for 8-bit contrast.png and phase.png previews.
    #[arg(long)]
    pub preview_dir: Option<PathBuf>,
    #[command(flatten)]
    pub fusion: FusionFlags,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fusion: FusionFlags,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Score every record of a manifest.
    #[arg(long, conflicts_with_all = ["left", "right"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "right")]
    pub left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    pub right: Option<PathBuf>,
    #[command(flatten)]
    pub fusion: FusionFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Precomputed feature file; extracted in-process when absent.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// by-record or by-scene.
    #[arg(long)]
    pub split: Option<SplitMode>,
    #[command(flatten)]
    pub fusion: FusionFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct FeatureCorrArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fusion: FusionFlags,
}

fn parse_disparity(s: &str) -> std::result::Result<DisparityMethod, String> {
    match s {
        "phase" => Ok(DisparityMethod::Phase),
        "block" => Ok(DisparityMethod::Block),
        _ => Err(format!("unknown disparity method '{s}' (phase, block)")),
    }
}

impl FusionFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        let f = &mut cfg.fusion;
        if let Some(v) = self.g {
            f.g = v;
        }
        if let Some(v) = self.fs {
            f.f_s = v;
        }
        if let Some(v) = self.ppd {
            f.pixels_per_degree = v;
        }
        if let Some(v) = self.mu_sigma {
            f.mu_sigma = Some(v);
        }
        if let Some(v) = self.c1 {
            f.c1 = v;
        }
        if let Some(v) = self.disparity {
            f.disparity = v;
        }
    }
}

impl TrainFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.max_epochs {
            cfg.model.train.max_epochs = v;
        }
        if let Some(v) = self.patience {
            cfg.model.train.patience = v;
        }
    }
}

/// Defaults, then the config file, then flags.
fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::CorpusGen(a) => {
            if let Some(v) = a.scenes {
                cfg.corpus.scenes = v;
            }
            if let Some(v) = a.width {
                cfg.corpus.width = v;
            }
            if let Some(v) = a.height {
                cfg.corpus.height = v;
            }
        }
        Command::Synthesize(a) => a.fusion.apply(&mut cfg),
        Command::Extract(a) => a.fusion.apply(&mut cfg),
        Command::Train(a) => a.train.apply(&mut cfg),
        Command::Score(a) => a.fusion.apply(&mut cfg),
        Command::Evaluate(a) => {
            a.fusion.apply(&mut cfg);
            a.train.apply(&mut cfg);
            if let Some(v) = a.repeats {
                cfg.experiment.repeats = v;
            }
            if let Some(v) = a.split {
                cfg.experiment.split = v;
            }
        }
        Command::FeatureCorr(a) => a.fusion.apply(&mut cfg),
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(0) => 0,
        Ok(failed) => {
            eprintln!("error: {failed} item(s) failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command; returns the number of failed items.
pub fn execute(cli: &Cli) -> Result<usize> {
    let cfg = effective_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::CorpusGen(a) => cmd_corpus_gen(a, &cfg),
        Command::Synthesize(a) => cmd_synthesize(a, &cfg),
        Command::Extract(a) => cmd_extract(a, &cfg),
        Command::Train(a) => cmd_train(a, &cfg),
        Command::Score(a) => cmd_score(a, &cfg),
        Command::Evaluate(a) => cmd_evaluate(a, &cfg),
        Command::FeatureCorr(a) => cmd_feature_corr(a, &cfg),
    })
}

fn cmd_corpus_gen(a: &CorpusGenArgs, cfg: &RunConfig) -> Result<usize> {
    let pristine = match &a.pristine {
        Some(m) => {
            let corpus = load_manifest(m)?;
            corpus
                .records
                .iter()
                .filter(|r| r.distortion == crate::dataset::Distortion::Pristine)
                .map(|r| {
                    Ok(PristinePair {
                        scene_id: r.reference_id.clone(),
                        left: GrayImage::load(&r.left_path)?,
                        right: GrayImage::load(&r.right_path)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            let c = &cfg.corpus;
            synthetic_pristine_pairs(c.scenes, c.width, c.height, cfg.seed)?
        }
    };
    let manifest = make_synthetic_corpus(&pristine, &default_distortion_grid(), &a.out, cfg.seed)?;
    let n = load_manifest(&manifest)?.len();
    println!("wrote {} ({n} records)", manifest.display());
    Ok(0)
}

fn cmd_synthesize(a: &SynthesizeArgs, cfg: &RunConfig) -> Result<usize> {
    let left = GrayImage::load(&a.left)?;
    let right = GrayImage::load(&a.right)?;
    let start = Instant::now();
    let fused = synthesize_pair(&left, &right, &cfg.fusion)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_fused(&fused, &a.out)?;
    if let Some(dir) = &a.preview_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_preview(&fused.contrast, dir.join("contrast.png"))?;
        save_preview(&fused.phase, dir.join("phase.png"))?;
    }
    println!("synthesized {}x{} in {elapsed:.3} s", left.width(), left.height());
    Ok(0)
}

/// Loads reusable rows from an existing feature file with a matching hash.
fn cached_features(path: &Path, hash: &str) -> Vec<FeatureRecord> {
    if !path.exists() {
        return Vec::new();
    }
    match read_feature_file(path) {
        Ok(f) if f.config_hash.as_deref() == Some(hash) => f.records,
        Ok(_) => {
            eprintln!("note: {} was written with other settings; recomputing", path.display());
            Vec::new()
        }
        Err(e) => {
            eprintln!("note: ignoring unreadable {}: {e}", path.display());
            Vec::new()
        }
    }
}

const EXTRACT_CHUNK: usize = 32;

fn cmd_extract(a: &ExtractArgs, cfg: &RunConfig) -> Result<usize> {
    use rayon::prelude::*;

    let corpus = load_manifest(&a.manifest)?;
    let hash = feature_config_hash(&cfg.fusion);
    let mut done = cached_features(&a.out, &hash);
    let todo: Vec<&StereoRecord> = corpus
        .records
        .iter()
        .filter(|r| !done.iter().any(|f| f.id == r.id))
        .collect();
    let skipped = corpus.len() - todo.len();
    let mut computed = 0;
    let mut failed = 0;
    let order = |done: &mut Vec<FeatureRecord>| {
        let pos = |id: &str| corpus.records.iter().position(|r| r.id == id).unwrap_or(usize::MAX);
        done.sort_by_key(|f| pos(&f.id));
    };
    order(&mut done);
    write_feature_file(&a.out, Some(&hash), &done)?;
    for chunk in todo.chunks(EXTRACT_CHUNK) {
        let results: Vec<_> = chunk.par_iter().map(|r| extract_record(r, &cfg.fusion)).collect();
        for (r, res) in chunk.iter().zip(results) {
            match res {
                Ok(f) => {
                    done.push(f);
                    computed += 1;
                }
                Err(e) => {
                    eprintln!("{}: {e}", r.id);
                    failed += 1;
                }
            }
        }
        order(&mut done);
        write_feature_file(&a.out, Some(&hash), &done)?;
    }
    println!("computed {computed}, skipped {skipped}, failed {failed}");
    Ok(failed)
}

/// Features for every record, from a file when given, else extracted.
/// Returns the store and the number of records without features.
fn corpus_features(corpus: &Corpus, features: Option<&Path>, cfg: &RunConfig) -> Result<(FeatureStore, usize)> {
    let store = match features {
        Some(p) => {
            let file = read_feature_file(p)?;
            let hash = feature_config_hash(&cfg.fusion);
            if file.config_hash.as_deref() != Some(hash.as_str()) {
                eprintln!("note: {} was extracted with different fusion settings", p.display());
            }
            FeatureStore::align(corpus, &file.records)
        }
        None => {
            let results = crate::eval::extract_corpus(corpus, &cfg.fusion);
            FeatureStore {
                features: results
                    .into_iter()
                    .zip(&corpus.records)
                    .map(|(res, r)| match res {
                        Ok(f) => Some(f),
                        Err(e) => {
                            eprintln!("{}: {e}", r.id);
                            None
                        }
                    })
                    .collect(),
            }
        }
    };
    let missing: Vec<&str> = corpus
        .records
        .iter()
        .zip(&store.features)
        .filter(|(_, f)| f.is_none())
        .map(|(r, _)| r.id.as_str())
        .collect();
    if !missing.is_empty() {
        eprintln!("{} record(s) without features: {}", missing.len(), missing.join(", "));
    }
    Ok((store, missing.len()))
}

fn cmd_train(a: &TrainArgs, cfg: &RunConfig) -> Result<usize> {
    let corpus = load_manifest(&a.manifest)?;
    let (store, missing) = corpus_features(&corpus, Some(&a.features), cfg)?;
    let mut phase = Vec::new();
    let mut contrast = Vec::new();
    let mut targets = Vec::new();
    for (r, f) in corpus.records.iter().zip(&store.features) {
        if let Some(f) = f {
            phase.push(f.phase.clone());
            contrast.push(f.contrast.clone());
            targets.push(r.dmos);
        }
    }
    let model = train_stacked(&phase, &contrast, &targets, &cfg.stacked())?;
    save_model(&model, &a.out)?;
    println!("trained on {} records, wrote {}", targets.len(), a.out.display());
    Ok(missing)
}

fn cmd_score(a: &ScoreArgs, cfg: &RunConfig) -> Result<usize> {
    let model = load_model(&a.model)?;
    match (&a.manifest, &a.left, &a.right) {
        (Some(m), _, _) => {
            let corpus = load_manifest(m)?;
            let mut failed = 0;
            for r in &corpus.records {
                match extract_record(r, &cfg.fusion).and_then(|f| predict(&model, &f.phase, &f.contrast)) {
                    Ok(s) => println!("{}\t{s:.6}", r.id),
                    Err(e) => {
                        eprintln!("{}: {e}", r.id);
                        failed += 1;
                    }
                }
            }
            Ok(failed)
        }
        (None, Some(l), Some(rp)) => {
            let record = StereoRecord {
                id: "pair".into(),
                reference_id: "pair".into(),
                left_path: l.clone(),
                right_path: rp.clone(),
                dmos: 0.0,
                distortion: crate::dataset::Distortion::Other,
                symmetric: true,
            };
            let f = extract_record(&record, &cfg.fusion)?;
            println!("{:.6}", predict(&model, &f.phase, &f.contrast)?);
            Ok(0)
        }
        _ => Err(Error::invalid("give --manifest or both --left and --right")),
    }
}

fn cmd_evaluate(a: &EvaluateArgs, cfg: &RunConfig) -> Result<usize> {
    let corpus = load_manifest(&a.manifest)?;
    let (store, missing) = corpus_features(&corpus, a.features.as_deref(), cfg)?;
    let report = run_experiment(&corpus, &store, &cfg.experiment())?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut echo = cfg.flatten();
    echo.push(("feature_config_hash".into(), feature_config_hash(&cfg.fusion)));
    report.write_tsv(a.out_dir.join("report.tsv"), &echo)?;
    let summary = report.summary();
    crate::io_util::write_atomic(&a.out_dir.join("summary.txt"), |w| {
        use std::io::Write;
        w.write_all(summary.as_bytes())
    })?;

    let first = &report.repeats[0];
    let pred: Vec<f64> = first.predictions.iter().map(|p| p.1).collect();
    let truth: Vec<f64> = first.predictions.iter().map(|p| corpus.records[p.0].dmos).collect();
    let ids: Vec<String> = first.predictions.iter().map(|p| corpus.records[p.0].id.clone()).collect();
    write_scatter(a.out_dir.join("scatter.tsv"), &pred, &truth)?;
    if let Ok(ba) = bland_altman(&truth, &pred) {
        write_bland_altman(a.out_dir.join("bland_altman.tsv"), &ids, &ba)?;
    }
    print!("{summary}");
    for f in &report.failures {
        eprintln!("repeat {}: {}", f.repeat, f.message);
    }
    Ok(missing + report.failures.len())
}

fn cmd_feature_corr(a: &FeatureCorrArgs, cfg: &RunConfig) -> Result<usize> {
    let corpus = load_manifest(&a.manifest)?;
    let (store, missing) = corpus_features(&corpus, a.features.as_deref(), cfg)?;
    let table = feature_mos_correlation(&corpus, &store)?;
    table.write_tsv(&a.out)?;
    for n in &table.notices {
        eprintln!("skipped: {n}");
    }
    println!("wrote {} ({} features x {} groups)", a.out.display(), table.slots.len(), table.groups.len());
    Ok(missing)
}
