//! Two level-0 networks (phase features, contrast features) and a level-1
//! refiner that combines their outputs.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Dataset, Mlp};
use super::standardize::{Standardizer, TargetScaler};
use super::train::{train_mlp, TrainConfig};
use crate::error::{Error, Result};
use crate::nss::{FeatureKind, FeatureVector, CONTRAST_LEN, PHASE_LEN};

pub const LEVEL0_HIDDEN: usize = 25;
pub const REFINER_HIDDEN: usize = 3;
pub const MIN_TRAIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackedConfig {
    pub seed: u64,
    pub train: TrainConfig,
    /// Share of the training set used for the level-0 networks (part A);
    /// the rest (part B) trains the refiner.
    pub part_a_fraction: f64,
    /// Share of part A held out for level-0 early stopping.
    pub level0_valid_fraction: f64,
}

impl Default for StackedConfig {
    fn default() -> Self {
        StackedConfig {
            seed: 0,
            train: TrainConfig::default(),
            part_a_fraction: 0.75,
            level0_valid_fraction: 0.2,
        }
    }
}

impl StackedConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.rprop.validate()?;
        if !(self.part_a_fraction > 0.0 && self.part_a_fraction < 1.0) {
            return Err(Error::invalid("part_a_fraction must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.level0_valid_fraction) {
            return Err(Error::invalid("level0_valid_fraction must lie in [0, 1)"));
        }
        if self.train.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    pub net_phase: Mlp,
    pub net_contrast: Mlp,
    pub refiner: Mlp,
    pub phase_std: Standardizer,
    pub contrast_std: Standardizer,
    pub refiner_std: Standardizer,
    pub target: TargetScaler,
    /// Settings the model was trained with, echoed into the model file.
    pub config: StackedConfig,
}

/// Predictions of each network in target units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelScores {
    pub phase: f64,
    pub contrast: f64,
    pub stacked: f64,
}

fn check_kind(fv: &FeatureVector, kind: FeatureKind) -> Result<()> {
    if fv.kind() != kind {
        return Err(Error::invalid(format!("expected {kind} features, got {}", fv.kind())));
    }
    Ok(())
}

fn round_count(n: usize, frac: f64) -> usize {
    ((n as f64) * frac).round() as usize
}

pub fn train_stacked(
    phase: &[FeatureVector],
    contrast: &[FeatureVector],
    targets: &[f64],
    cfg: &StackedConfig,
) -> Result<StackedModel> {
    cfg.validate()?;
    let n = targets.len();
    if phase.len() != n || contrast.len() != n {
        return Err(Error::invalid(format!(
            "{} phase rows, {} contrast rows, {} targets",
            phase.len(),
            contrast.len(),
            n
        )));
    }
    if n < MIN_TRAIN_SAMPLES {
        return Err(Error::invalid(format!(
            "{n} training samples, at least {MIN_TRAIN_SAMPLES} required"
        )));
    }
    for (p, c) in phase.iter().zip(contrast) {
        check_kind(p, FeatureKind::Phase)?;
        check_kind(c, FeatureKind::Contrast)?;
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("non-finite target"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_a = round_count(n, cfg.part_a_fraction).clamp(2, n - 2);
    let (part_a, part_b) = order.split_at(n_a);

    let a_targets: Vec<f64> = part_a.iter().map(|&i| targets[i]).collect();
    let target = TargetScaler::fit(&a_targets)?;
    let phase_rows: Vec<&[f64]> = part_a.iter().map(|&i| phase[i].values()).collect();
    let contrast_rows: Vec<&[f64]> = part_a.iter().map(|&i| contrast[i].values()).collect();
    let phase_std = Standardizer::fit(&phase_rows)?;
    let contrast_std = Standardizer::fit(&contrast_rows)?;

    let build = |idx: &[usize], feats: &[FeatureVector], std: &Standardizer| -> Result<Dataset> {
        Dataset::new(
            idx.iter().map(|&i| std.apply(feats[i].values())).collect::<Result<_>>()?,
            idx.iter().map(|&i| target.standardize(targets[i])).collect(),
        )
    };

    let n_valid = round_count(part_a.len(), cfg.level0_valid_fraction);
    let (a_fit, a_valid) = part_a.split_at(part_a.len() - n_valid);
    let seed_phase = rng.next_u64();
    let seed_contrast = rng.next_u64();
    let seed_refiner = rng.next_u64();

    let level0 = |feats: &[FeatureVector], std: &Standardizer, dim: usize, seed: u64| -> Result<Mlp> {
        let fit = build(a_fit, feats, std)?;
        let valid = build(a_valid, feats, std)?;
        Ok(train_mlp(Mlp::random(dim, LEVEL0_HIDDEN, seed), &fit, &valid, &cfg.train)?.net)
    };
    let (net_phase, net_contrast) = rayon::join(
        || level0(phase, &phase_std, PHASE_LEN, seed_phase),
        || level0(contrast, &contrast_std, CONTRAST_LEN, seed_contrast),
    );
    let (net_phase, net_contrast) = (net_phase?, net_contrast?);

    let mut level1_inputs = Vec::with_capacity(part_b.len());
    for &i in part_b {
        let p = net_phase.forward(&phase_std.apply(phase[i].values())?)?;
        let c = net_contrast.forward(&contrast_std.apply(contrast[i].values())?)?;
        level1_inputs.push(vec![p, c]);
    }
    let refs: Vec<&[f64]> = level1_inputs.iter().map(|r| r.as_slice()).collect();
    let refiner_std = Standardizer::fit(&refs)?;
    let refiner_data = Dataset::new(
        level1_inputs
            .iter()
            .map(|r| refiner_std.apply(r))
            .collect::<Result<_>>()?,
        part_b.iter().map(|&i| target.standardize(targets[i])).collect(),
    )?;
    let refiner = train_mlp(
        Mlp::random(2, REFINER_HIDDEN, seed_refiner),
        &refiner_data,
        &Dataset::default(),
        &cfg.train,
    )?
    .net;

    Ok(StackedModel {
        net_phase,
        net_contrast,
        refiner,
        phase_std,
        contrast_std,
        refiner_std,
        target,
        config: *cfg,
    })
}

impl StackedModel {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            (self.net_phase.dims(), [PHASE_LEN, LEVEL0_HIDDEN, 1], "phase"),
            (self.net_contrast.dims(), [CONTRAST_LEN, LEVEL0_HIDDEN, 1], "contrast"),
            (self.refiner.dims(), [2, REFINER_HIDDEN, 1], "refiner"),
        ];
        for (got, want, name) in dims {
            if got != want {
                return Err(Error::invalid(format!("{name} network is {got:?}, expected {want:?}")));
            }
        }
        if self.phase_std.dim() != PHASE_LEN
            || self.contrast_std.dim() != CONTRAST_LEN
            || self.refiner_std.dim() != 2
        {
            return Err(Error::invalid("standardizer dimensions do not match the networks"));
        }
        Ok(())
    }

    pub fn predict_levels(&self, phase: &FeatureVector, contrast: &FeatureVector) -> Result<LevelScores> {
        check_kind(phase, FeatureKind::Phase)?;
        check_kind(contrast, FeatureKind::Contrast)?;
        let p = self.net_phase.forward(&self.phase_std.apply(phase.values())?)?;
        let c = self.net_contrast.forward(&self.contrast_std.apply(contrast.values())?)?;
        let z = self.refiner.forward(&self.refiner_std.apply(&[p, c])?)?;
        Ok(LevelScores {
            phase: self.target.destandardize(p),
            contrast: self.target.destandardize(c),
            stacked: self.target.destandardize(z),
        })
    }
}

/// Quality score in target units.
pub fn predict(model: &StackedModel, phase: &FeatureVector, contrast: &FeatureVector) -> Result<f64> {
    Ok(model.predict_levels(phase, contrast)?.stacked)
}
