//! No-reference stereo image quality assessment.
//!
//! A stereo pair is fused into a contrast image and a phase image
//! ([`fusion`]); natural-scene-statistics features are fitted on both
//! ([`nss`]); a stacked pair of small networks maps the features to a
//! quality score ([`model`]). [`dataset`] and [`eval`] hold the corpus
//! handling and the train/test protocol, and [`cli`] wires everything into
//! the `siqa` binary.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod image;
pub mod matrix;
pub mod model;
pub mod nss;

mod io_util;

pub use io_util::derive_seed;

pub use error::{Error, Result};
pub use fusion::{synthesize_pair, FusedImages, FusionParams};
pub use image::GrayImage;
pub use matrix::Matrix;
pub use model::{predict, StackedModel};
pub use nss::{extract_contrast_features, extract_phase_features, FeatureKind, FeatureVector};
