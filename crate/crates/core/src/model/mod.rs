//! Feedforward networks, RPROP training and the stacked quality model.

mod io;
mod mlp;
mod rprop;
mod stacked;
mod standardize;
mod train;

pub use io::{decode_model, encode_model, load_model, save_model, MODEL_FORMAT, MODEL_VERSION};
pub use mlp::{sigmoid, Dataset, Mlp};
pub use rprop::{RpropConfig, RpropState};
pub use stacked::{
    predict, train_stacked, LevelScores, StackedConfig, StackedModel, LEVEL0_HIDDEN, MIN_TRAIN_SAMPLES,
    REFINER_HIDDEN,
};
pub use standardize::{Standardizer, TargetScaler};
pub use train::{train_mlp, EpochLoss, TrainConfig, TrainOutcome};
