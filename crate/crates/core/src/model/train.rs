use serde::{Deserialize, Serialize};

use super::mlp::{Dataset, Mlp};
use super::rprop::{RpropConfig, RpropState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub rprop: RpropConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 500,
            patience: 25,
            rprop: RpropConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub train: f64,
    pub valid: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: Mlp,
    /// Loss after each epoch's update.
    pub history: Vec<EpochLoss>,
    /// 1-based epoch whose weights were returned (0 = initial weights).
    pub best_epoch: usize,
}

pub(crate) fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Full-batch RPROP with early stopping on the validation MSE.
///
/// With an empty validation set the loop runs for `max_epochs` and the final
/// weights are returned.
pub fn train_mlp(net: Mlp, train: &Dataset, valid: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    cfg.rprop.validate()?;
    if variance(&train.targets) == 0.0 {
        return Err(Error::degenerate("training targets have zero variance"));
    }

    let mut net = net;
    let mut state = RpropState::new(net.params().len(), cfg.rprop);
    let mut history = Vec::with_capacity(cfg.max_epochs);
    let use_valid = !valid.is_empty();
    let mut best = (
        if use_valid { net.mse(valid)? } else { f64::INFINITY },
        0usize,
        net.clone(),
    );

    for epoch in 1..=cfg.max_epochs {
        let grad = net.gradient(train)?;
        state.step(net.params_mut(), &grad);
        let train_loss = net.mse(train)?;
        let valid_loss = if use_valid { Some(net.mse(valid)?) } else { None };
        history.push(EpochLoss {
            train: train_loss,
            valid: valid_loss,
        });
        if !train_loss.is_finite() {
            return Err(Error::degenerate(format!("training diverged at epoch {epoch}")));
        }
        if let Some(v) = valid_loss {
            if v < best.0 {
                best = (v, epoch, net.clone());
            } else if epoch - best.1 >= cfg.patience {
                break;
            }
        }
    }

    if use_valid {
        Ok(TrainOutcome {
            net: best.2,
            history,
            best_epoch: best.1,
        })
    } else {
        let last = history.len();
        Ok(TrainOutcome {
            net,
            history,
            best_epoch: last,
        })
    }
}
