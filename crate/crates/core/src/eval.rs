//! Correlation metrics, Bland–Altman agreement, train/test splits, the
//! repeated-split experiment runner and the per-feature correlation table.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Corpus, Distortion, StereoRecord};
use crate::error::{Error, Result};
use crate::fusion::{synthesize_pair, FusionParams};
use crate::image::GrayImage;
use crate::io_util::{derive_seed, fmt_f64, write_atomic};
use crate::model::{train_stacked, StackedConfig};
use crate::nss::{extract_contrast_features, extract_phase_features, FeatureKind, FeatureRecord};

pub const TRAIN_FRACTION: f64 = 0.8;
pub const MIN_SPLIT_UNITS: usize = 5;
pub const BLAND_ALTMAN_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTriple {
    pub plcc: f64,
    pub srocc: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlandAltmanStats {
    pub mean_diff: f64,
    pub rpc: f64,
    /// `(mean, difference)` per observation.
    pub points: Vec<(f64, f64)>,
}

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::invalid(format!("need at least {min} values, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value"));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::degenerate("correlation of a constant sequence"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 3)?;
    pearson(x, y)
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 3)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 1)?;
    let ss: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

pub fn metric_triple(pred: &[f64], truth: &[f64]) -> Result<MetricTriple> {
    Ok(MetricTriple {
        plcc: plcc(pred, truth)?,
        srocc: srocc(pred, truth)?,
        rmse: rmse(pred, truth)?,
    })
}

pub fn bland_altman(subjective: &[f64], objective: &[f64]) -> Result<BlandAltmanStats> {
    check_pair(subjective, objective, 3)?;
    let diffs: Vec<f64> = subjective.iter().zip(objective).map(|(s, o)| s - o).collect();
    let mean_diff = mean(&diffs);
    let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
    let points = subjective
        .iter()
        .zip(objective)
        .map(|(s, o)| ((s + o) / 2.0, s - o))
        .collect();
    Ok(BlandAltmanStats {
        mean_diff,
        rpc: BLAND_ALTMAN_Z * var.sqrt(),
        points,
    })
}

/// Median; an even count averages the two central values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

fn median_triple(ts: &[MetricTriple]) -> Option<MetricTriple> {
    let col = |f: fn(&MetricTriple) -> f64| median(&ts.iter().map(f).collect::<Vec<_>>());
    Some(MetricTriple {
        plcc: col(|t| t.plcc)?,
        srocc: col(|t| t.srocc)?,
        rmse: col(|t| t.rmse)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Records drawn independently; scenes may appear on both sides.
    #[default]
    ByRecord,
    /// Whole scenes go to one side.
    ByScene,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::ByRecord => "by-record",
            SplitMode::ByScene => "by-scene",
        }
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by-record" | "by_record" => Ok(SplitMode::ByRecord),
            "by-scene" | "by_scene" => Ok(SplitMode::ByScene),
            _ => Err(Error::invalid(format!("unknown split mode '{s}'"))),
        }
    }
}

/// Record indices of one train/test split, each list in corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices<R: Borrow<StereoRecord>>(records: &[R], seed: u64, mode: SplitMode) -> Result<SplitIndices> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let in_train: Vec<bool> = match mode {
        SplitMode::ByRecord => {
            let n = records.len();
            if n < MIN_SPLIT_UNITS {
                return Err(Error::invalid(format!("{n} records; a split needs at least {MIN_SPLIT_UNITS}")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let n_train = ((n as f64) * TRAIN_FRACTION).round() as usize;
            let mut flags = vec![false; n];
            for &i in &order[..n_train] {
                flags[i] = true;
            }
            flags
        }
        SplitMode::ByScene => {
            let mut seen = HashSet::new();
            let mut scenes: Vec<&str> = records
                .iter()
                .map(|r| r.borrow().reference_id.as_str())
                .filter(|s| seen.insert(*s))
                .collect();
            if scenes.len() < MIN_SPLIT_UNITS {
                return Err(Error::invalid(format!(
                    "{} scenes; a scene split needs at least {MIN_SPLIT_UNITS}",
                    scenes.len()
                )));
            }
            scenes.shuffle(&mut rng);
            let n_train = ((scenes.len() as f64) * TRAIN_FRACTION).round() as usize;
            let train: HashSet<&str> = scenes[..n_train].iter().copied().collect();
            records.iter().map(|r| train.contains(r.borrow().reference_id.as_str())).collect()
        }
    };
    let (train, test) = (0..records.len()).partition(|&i| in_train[i]);
    Ok(SplitIndices { train, test })
}

/// 80/20 split returning record ids.
pub fn split_80_20(corpus: &Corpus, seed: u64, mode: SplitMode) -> Result<(Vec<String>, Vec<String>)> {
    let s = split_indices(&corpus.records, seed, mode)?;
    let ids = |v: Vec<usize>| v.into_iter().map(|i| corpus.records[i].id.clone()).collect();
    Ok((ids(s.train), ids(s.test)))
}

/// Loads a record's pair, fuses it and fits both feature vectors.
pub fn extract_record(record: &StereoRecord, params: &FusionParams) -> Result<FeatureRecord> {
    let left = GrayImage::load(&record.left_path)?;
    let right = GrayImage::load(&record.right_path)?;
    let fused = synthesize_pair(&left, &right, params)?;
    Ok(FeatureRecord {
        id: record.id.clone(),
        phase: extract_phase_features(&fused.phase)?,
        contrast: extract_contrast_features(&fused.contrast)?,
    })
}

/// Per-record extraction in corpus order; failures stay in place.
pub fn extract_corpus(corpus: &Corpus, params: &FusionParams) -> Vec<Result<FeatureRecord>> {
    corpus.records.par_iter().map(|r| extract_record(r, params)).collect()
}

/// Features aligned with a corpus: `features[i]` belongs to `records[i]`,
/// `None` where extraction failed.
#[derive(Debug, Clone, Default)]
pub struct FeatureStore {
    pub features: Vec<Option<FeatureRecord>>,
}

impl FeatureStore {
    /// Aligns records looked up by id; records without features map to `None`.
    pub fn align(corpus: &Corpus, features: &[FeatureRecord]) -> Self {
        let by_id: BTreeMap<&str, &FeatureRecord> = features.iter().map(|f| (f.id.as_str(), f)).collect();
        FeatureStore {
            features: corpus.records.iter().map(|r| by_id.get(r.id.as_str()).map(|f| (*f).clone())).collect(),
        }
    }

    pub fn available(&self) -> usize {
        self.features.iter().filter(|f| f.is_some()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub repeats: usize,
    pub seed: u64,
    pub split: SplitMode,
    pub model: StackedConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            repeats: 1000,
            seed: 0,
            split: SplitMode::ByRecord,
            model: StackedConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be >= 1"));
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatResult {
    pub repeat: usize,
    pub stacked: MetricTriple,
    pub phase: MetricTriple,
    pub contrast: MetricTriple,
    /// Stacked-model metrics on the test records of each distortion;
    /// groups with fewer than 3 records or constant scores are absent.
    pub per_distortion: BTreeMap<Distortion, MetricTriple>,
    /// `(record index, predicted score)` for every test record.
    pub predictions: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatFailure {
    pub repeat: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub corpus_name: String,
    pub records_used: usize,
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatResult>,
    pub failures: Vec<RepeatFailure>,
    pub median: MetricTriple,
    pub median_phase: MetricTriple,
    pub median_contrast: MetricTriple,
    /// Median over the repeats where the group was scored, with that count.
    pub median_per_distortion: BTreeMap<Distortion, (MetricTriple, usize)>,
}

fn run_repeat(
    records: &[&StereoRecord],
    feats: &[&FeatureRecord],
    repeat: usize,
    cfg: &ExperimentConfig,
    index_of: &[usize],
) -> Result<RepeatResult> {
    let split = split_indices(records, derive_seed(cfg.seed, &format!("split/{repeat}")), cfg.split)?;
    let pick = |idx: &[usize], kind: FeatureKind| -> Vec<_> {
        idx.iter()
            .map(|&i| match kind {
                FeatureKind::Phase => feats[i].phase.clone(),
                FeatureKind::Contrast => feats[i].contrast.clone(),
            })
            .collect()
    };
    let targets: Vec<f64> = split.train.iter().map(|&i| records[i].dmos).collect();
    let model_cfg = StackedConfig {
        seed: derive_seed(cfg.seed, &format!("train/{repeat}")),
        ..cfg.model
    };
    let model = train_stacked(
        &pick(&split.train, FeatureKind::Phase),
        &pick(&split.train, FeatureKind::Contrast),
        &targets,
        &model_cfg,
    )?;

    let mut scores = Vec::with_capacity(split.test.len());
    for &i in &split.test {
        scores.push(model.predict_levels(&feats[i].phase, &feats[i].contrast)?);
    }
    let truth: Vec<f64> = split.test.iter().map(|&i| records[i].dmos).collect();
    let stacked: Vec<f64> = scores.iter().map(|s| s.stacked).collect();
    let phase: Vec<f64> = scores.iter().map(|s| s.phase).collect();
    let contrast: Vec<f64> = scores.iter().map(|s| s.contrast).collect();

    let mut groups: BTreeMap<Distortion, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (k, &i) in split.test.iter().enumerate() {
        let g = groups.entry(records[i].distortion).or_default();
        g.0.push(stacked[k]);
        g.1.push(truth[k]);
    }
    let per_distortion = groups
        .into_iter()
        .filter_map(|(d, (p, t))| metric_triple(&p, &t).ok().map(|m| (d, m)))
        .collect();

    Ok(RepeatResult {
        repeat,
        stacked: metric_triple(&stacked, &truth)?,
        phase: metric_triple(&phase, &truth)?,
        contrast: metric_triple(&contrast, &truth)?,
        per_distortion,
        predictions: split.test.iter().zip(&stacked).map(|(&i, &p)| (index_of[i], p)).collect(),
    })
}

/// Repeated 80/20 train/test runs over cached features. Records without
/// features are left out; failed repeats are recorded, not fatal.
pub fn run_experiment(corpus: &Corpus, store: &FeatureStore, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if store.features.len() != corpus.records.len() {
        return Err(Error::invalid(format!(
            "{} feature slots for {} records",
            store.features.len(),
            corpus.records.len()
        )));
    }
    let mut records = Vec::new();
    let mut feats = Vec::new();
    let mut index_of = Vec::new();
    for (i, (r, f)) in corpus.records.iter().zip(&store.features).enumerate() {
        if let Some(f) = f {
            records.push(r);
            feats.push(f);
            index_of.push(i);
        }
    }

    let outcomes: Vec<Result<RepeatResult>> = (0..cfg.repeats)
        .into_par_iter()
        .map(|k| run_repeat(&records, &feats, k, cfg, &index_of))
        .collect();
    let mut repeats = Vec::new();
    let mut failures = Vec::new();
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => repeats.push(r),
            Err(e) => failures.push(RepeatFailure {
                repeat: k,
                message: e.to_string(),
            }),
        }
    }
    if repeats.is_empty() {
        let first = failures.first().map(|f| f.message.as_str()).unwrap_or("");
        return Err(Error::degenerate(format!("all {} repeats failed; first: {first}", cfg.repeats)));
    }

    let collect = |f: fn(&RepeatResult) -> MetricTriple| repeats.iter().map(f).collect::<Vec<_>>();
    let mut by_kind: BTreeMap<Distortion, Vec<MetricTriple>> = BTreeMap::new();
    for r in &repeats {
        for (d, m) in &r.per_distortion {
            by_kind.entry(*d).or_default().push(*m);
        }
    }
    let median_per_distortion = by_kind
        .into_iter()
        .map(|(d, ms)| (d, (median_triple(&ms).expect("nonempty"), ms.len())))
        .collect();

    Ok(ExperimentReport {
        corpus_name: corpus.name.clone(),
        records_used: records.len(),
        config: *cfg,
        median: median_triple(&collect(|r| r.stacked)).expect("nonempty"),
        median_phase: median_triple(&collect(|r| r.phase)).expect("nonempty"),
        median_contrast: median_triple(&collect(|r| r.contrast)).expect("nonempty"),
        median_per_distortion,
        repeats,
        failures,
    })
}

impl ExperimentReport {
    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(s, "corpus: {} ({} records with features)", self.corpus_name, self.records_used);
        let _ = writeln!(
            s,
            "protocol: {:.0}/{:.0} split, {}, {} repeats ({} failed), seed {}",
            TRAIN_FRACTION * 100.0,
            (1.0 - TRAIN_FRACTION) * 100.0,
            c.split.as_str(),
            c.repeats,
            self.failures.len(),
            c.seed
        );
        let _ = writeln!(s, "{:<12} {:>8} {:>8} {:>10}", "median", "PLCC", "SROCC", "RMSE");
        let line = |s: &mut String, name: &str, m: &MetricTriple| {
            let _ = writeln!(s, "{:<12} {:>8.4} {:>8.4} {:>10.4}", name, m.plcc, m.srocc, m.rmse);
        };
        line(&mut s, "stacked", &self.median);
        line(&mut s, "phase", &self.median_phase);
        line(&mut s, "contrast", &self.median_contrast);
        for (d, (m, n)) in &self.median_per_distortion {
            line(&mut s, &format!("{d} (n={n})"), m);
        }
        s
    }

    /// Tab-separated report: config echo as `#` lines, then one row per
    /// repeat and scope, then the median rows (repeat column `median`).
    pub fn write_tsv(&self, path: impl AsRef<Path>, echo: &[(String, String)]) -> Result<()> {
        let c = &self.config;
        write_atomic(path.as_ref(), |w| {
            writeln!(w, "# siqa-report v1")?;
            writeln!(w, "# corpus={}", self.corpus_name)?;
            writeln!(w, "# records_used={}", self.records_used)?;
            writeln!(w, "# split={}", c.split.as_str())?;
            writeln!(w, "# train_fraction={TRAIN_FRACTION}")?;
            writeln!(w, "# repeats={}", c.repeats)?;
            writeln!(w, "# failed_repeats={}", self.failures.len())?;
            writeln!(w, "# seed={}", c.seed)?;
            for (k, v) in echo {
                writeln!(w, "# {k}={v}")?;
            }
            writeln!(w, "repeat\tscope\tplcc\tsrocc\trmse")?;
            let row = |w: &mut dyn Write, rep: &str, scope: &str, m: &MetricTriple| {
                writeln!(w, "{rep}\t{scope}\t{}\t{}\t{}", fmt_f64(m.plcc), fmt_f64(m.srocc), fmt_f64(m.rmse))
            };
            for r in &self.repeats {
                let k = r.repeat.to_string();
                row(w, &k, "stacked", &r.stacked)?;
                row(w, &k, "phase", &r.phase)?;
                row(w, &k, "contrast", &r.contrast)?;
                for (d, m) in &r.per_distortion {
                    row(w, &k, d.as_str(), m)?;
                }
            }
            row(w, "median", "stacked", &self.median)?;
            row(w, "median", "phase", &self.median_phase)?;
            row(w, "median", "contrast", &self.median_contrast)?;
            for (d, (m, _)) in &self.median_per_distortion {
                row(w, "median", d.as_str(), m)?;
            }
            for f in &self.failures {
                writeln!(w, "# failure repeat={} {}", f.repeat, f.message.replace('\n', " "))?;
            }
            Ok(())
        })
    }
}

/// Two columns: predicted score, subjective score.
pub fn write_scatter(path: impl AsRef<Path>, predicted: &[f64], subjective: &[f64]) -> Result<()> {
    check_pair(predicted, subjective, 0)?;
    write_atomic(path.as_ref(), |w| {
        writeln!(w, "predicted\tsubjective")?;
        for (p, s) in predicted.iter().zip(subjective) {
            writeln!(w, "{}\t{}", fmt_f64(*p), fmt_f64(*s))?;
        }
        Ok(())
    })
}

/// Three columns: record id, mean, difference; summary in `#` lines.
pub fn write_bland_altman(path: impl AsRef<Path>, ids: &[String], stats: &BlandAltmanStats) -> Result<()> {
    if ids.len() != stats.points.len() {
        return Err(Error::invalid("one id per point required"));
    }
    write_atomic(path.as_ref(), |w| {
        writeln!(w, "# mean_diff={}", fmt_f64(stats.mean_diff))?;
        writeln!(w, "# rpc={}", fmt_f64(stats.rpc))?;
        writeln!(w, "id\tmean\tdiff")?;
        for (id, (m, d)) in ids.iter().zip(&stats.points) {
            writeln!(w, "{id}\t{}\t{}", fmt_f64(*m), fmt_f64(*d))?;
        }
        Ok(())
    })
}

/// PLCC of every feature slot against dmos, per distortion group.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    /// Column labels: each distortion present (pristine excluded), then `all`.
    pub groups: Vec<String>,
    /// `phase.<slot>` / `contrast.<slot>` labels, 76 rows.
    pub slots: Vec<String>,
    /// `values[slot][group]`, `None` where the group was skipped.
    pub values: Vec<Vec<Option<f64>>>,
    pub notices: Vec<String>,
}

impl CorrelationTable {
    pub fn get(&self, slot: &str, group: &str) -> Option<f64> {
        let i = self.slots.iter().position(|s| s == slot)?;
        let j = self.groups.iter().position(|g| g == group)?;
        self.values[i][j]
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), |w| {
            writeln!(w, "feature\t{}", self.groups.join("\t"))?;
            for (slot, row) in self.slots.iter().zip(&self.values) {
                write!(w, "{slot}")?;
                for v in row {
                    match v {
                        Some(v) => write!(w, "\t{}", fmt_f64(*v))?,
                        None => write!(w, "\tNA")?,
                    }
                }
                writeln!(w)?;
            }
            Ok(())
        })
    }
}

/// Columns as `(label, feature matrix rows, dmos)` triples feed the table;
/// each feature row holds the 76 slot values of one record.
pub fn correlation_table(slots: Vec<String>, groups: Vec<(String, Vec<Vec<f64>>, Vec<f64>)>) -> CorrelationTable {
    let mut notices = Vec::new();
    let mut values = vec![Vec::with_capacity(groups.len()); slots.len()];
    for (label, rows, dmos) in &groups {
        if rows.len() < 3 {
            notices.push(format!("{label}: {} records, skipped", rows.len()));
            for v in values.iter_mut() {
                v.push(None);
            }
            continue;
        }
        for (s, col_out) in values.iter_mut().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[s]).collect();
            match plcc(&col, dmos) {
                Ok(r) => col_out.push(Some(r)),
                Err(e) => {
                    notices.push(format!("{label}: {}: {e}", slots[s]));
                    col_out.push(None);
                }
            }
        }
    }
    CorrelationTable {
        groups: groups.into_iter().map(|g| g.0).collect(),
        slots,
        values,
        notices,
    }
}

/// Feature–dmos correlation per distortion kind over records with features.
pub fn feature_mos_correlation(corpus: &Corpus, store: &FeatureStore) -> Result<CorrelationTable> {
    if store.features.len() != corpus.records.len() {
        return Err(Error::invalid("feature store does not match the corpus"));
    }
    let mut slots = Vec::new();
    for kind in [FeatureKind::Phase, FeatureKind::Contrast] {
        slots.extend(kind.slot_names().into_iter().map(|n| format!("{kind}.{n}")));
    }
    let mut by_kind: BTreeMap<Distortion, (Vec<Vec<f64>>, Vec<f64>)> = BTreeMap::new();
    let mut all = (Vec::new(), Vec::new());
    for (r, f) in corpus.records.iter().zip(&store.features) {
        let Some(f) = f else { continue };
        let row: Vec<f64> = f.phase.values().iter().chain(f.contrast.values()).copied().collect();
        all.0.push(row.clone());
        all.1.push(r.dmos);
        if r.distortion != Distortion::Pristine {
            let g = by_kind.entry(r.distortion).or_default();
            g.0.push(row);
            g.1.push(r.dmos);
        }
    }
    let mut groups: Vec<_> = by_kind
        .into_iter()
        .map(|(d, (rows, dmos))| (d.as_str().to_string(), rows, dmos))
        .collect();
    groups.push(("all".to_string(), all.0, all.1));
    Ok(correlation_table(slots, groups))
}
