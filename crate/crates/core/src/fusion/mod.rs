//! Binocular fusion of a rectified stereo pair into a contrast image and a
//! phase image.
//!
//! Each eye is decomposed into local modulation contrast `m` and phase
//! `theta`. A per-pixel disparity drives the gain `alpha = 1 - D / (g^2 + D)`,
//! and the two eyes are combined with
//!
//! ```text
//! m'     = sqrt(mL^2 + mR^2 + 2 mL mR cos(alpha (thetaR - thetaL)))
//! theta' = atan2(mL sin(alpha thetaL) + mR sin(alpha thetaR),
//!                mL cos(alpha thetaL) + mR cos(alpha thetaR))
//! ```

mod analytic;
mod container;
mod disparity;

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use analytic::{analytic_decompose, analytic_rows, local_mean, AnalyticDecomposition};
pub use container::{read_fused, write_fused, FUSED_MAGIC, FUSED_VERSION};
pub use disparity::{block_disparity, phase_disparity, BLOCK_SIZE, SEARCH_RANGE};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::matrix::Matrix;

/// How the per-pixel disparity feeding the gain control is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisparityMethod {
    /// Absolute wrapped phase difference converted to degrees.
    #[default]
    Phase,
    /// 8x8 SAD block matching over a +-16 px horizontal window.
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    /// Fusion threshold.
    pub g: f64,
    /// Spatial frequency in cycles/degree.
    pub f_s: f64,
    pub pixels_per_degree: f64,
    /// Std (pixels) of the Gaussian local-mean window. `None` uses one
    /// period of the reference grating, `pixels_per_degree / f_s`.
    pub mu_sigma: Option<f64>,
    /// Stabilizer added to the local mean in the contrast normalization.
    pub c1: f64,
    pub disparity: DisparityMethod,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            g: 0.053,
            f_s: 0.68,
            pixels_per_degree: 32.0,
            mu_sigma: None,
            c1: 1e-3,
            disparity: DisparityMethod::Phase,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g", self.g),
            ("f_s", self.f_s),
            ("pixels_per_degree", self.pixels_per_degree),
            ("c1", self.c1),
            ("mu_sigma", self.mu_sigma.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Grating period in pixels.
    pub fn period_px(&self) -> f64 {
        self.pixels_per_degree / self.f_s
    }

    pub fn mean_sigma(&self) -> f64 {
        self.mu_sigma.unwrap_or_else(|| self.period_px())
    }
}

/// Per-pixel gain and the disparity that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GainField {
    pub alpha: Matrix,
    /// Degrees of visual angle.
    pub disparity: Matrix,
}

/// The synthesized contrast and phase images of a stereo pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedImages {
    pub contrast: Matrix,
    pub phase: Matrix,
}

/// Everything computed on the way to [`FusedImages`].
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub left: AnalyticDecomposition,
    pub right: AnalyticDecomposition,
    pub gain: GainField,
    pub fused: FusedImages,
}

/// Wraps an angle into `(-pi, pi]`. Odd except at the `pi` boundary.
#[inline]
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x % TAU;
    if y > PI {
        y -= TAU;
    } else if y <= -PI {
        y += TAU;
    }
    y
}

/// Horizontal sine grating `i0 + m cos(2 pi f_s x / ppd + theta)`.
pub fn grating_image(
    i0: f64,
    m: f64,
    f_s: f64,
    theta: f64,
    ppd: f64,
    width: usize,
    height: usize,
) -> Result<GrayImage> {
    if !(0.0..=1.0).contains(&i0) {
        return Err(Error::invalid(format!("mean luminance {i0} outside [0, 1]")));
    }
    if !(m >= 0.0 && m <= i0.min(1.0 - i0)) {
        return Err(Error::invalid(format!(
            "contrast {m} outside [0, min(i0, 1 - i0)]"
        )));
    }
    if !(f_s > 0.0 && ppd > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("f_s and ppd must be > 0"));
    }
    let row: Vec<f64> = (0..width)
        .map(|x| i0 + m * (TAU * f_s * (x as f64 / ppd) + theta).cos())
        .collect();
    GrayImage::from_clamped(Matrix::from_fn(height, width, |_, j| row[j]))
}

/// Gain control `alpha = 1 - d / (g^2 + d)`.
pub fn gain_control(d: f64, g: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::invalid(format!("disparity must be >= 0, got {d}")));
    }
    if !(g > 0.0) {
        return Err(Error::invalid(format!("threshold g must be > 0, got {g}")));
    }
    if d.is_infinite() {
        return Ok(0.0);
    }
    Ok(1.0 - d / (g * g + d))
}

#[inline]
fn combined_contrast(ml: f64, mr: f64, cos_dphi: f64) -> f64 {
    // 2 (mL mR) keeps the expression bitwise symmetric in the two eyes
    let sq = ml * ml + mr * mr + 2.0 * (ml * mr) * cos_dphi;
    sq.max(0.0).sqrt()
}

#[inline]
fn combined_phase(ml: f64, mr: f64, phi_l: f64, phi_r: f64) -> f64 {
    let (sl, cl) = phi_l.sin_cos();
    let (sr, cr) = phi_r.sin_cos();
    analytic::arg(ml * cl + mr * cr, ml * sl + mr * sr)
}

/// Linear superposition of the two eyes before fusion: `(m_hat, theta_hat)`.
pub fn prefusion_sum(ml: f64, mr: f64, theta_l: f64, theta_r: f64) -> (f64, f64) {
    let m_hat = fuse_contrast(ml, mr, theta_l, theta_r, 1.0);
    let theta_hat = combined_phase(ml, mr, theta_l, theta_r);
    (m_hat, theta_hat)
}

pub fn fuse_contrast(ml: f64, mr: f64, theta_l: f64, theta_r: f64, alpha: f64) -> f64 {
    let dphi = wrap_phase(theta_r - theta_l);
    combined_contrast(ml, mr, (alpha * dphi).cos())
}

pub fn fuse_phase(ml: f64, mr: f64, theta_l: f64, theta_r: f64, alpha: f64) -> f64 {
    combined_phase(ml, mr, alpha * theta_l, alpha * theta_r)
}

pub fn gain_field(disparity: Matrix, g: f64) -> Result<GainField> {
    let mut alpha = Matrix::zeros(disparity.rows(), disparity.cols());
    for (a, &d) in alpha.as_mut_slice().iter_mut().zip(disparity.as_slice()) {
        *a = gain_control(d, g)?;
    }
    Ok(GainField { alpha, disparity })
}

pub fn synthesize_pair(left: &GrayImage, right: &GrayImage, params: &FusionParams) -> Result<FusedImages> {
    Ok(synthesize_detailed(left, right, params)?.fused)
}

/// Like [`synthesize_pair`] but also returns the per-eye decompositions and gain.
pub fn synthesize_detailed(
    left: &GrayImage,
    right: &GrayImage,
    params: &FusionParams,
) -> Result<Synthesis> {
    params.validate()?;
    left.matrix().ensure_same_shape(right.matrix())?;

    let (dec_l, dec_r) = rayon::join(
        || analytic_decompose(left, params),
        || analytic_decompose(right, params),
    );
    let disparity = match params.disparity {
        DisparityMethod::Phase => phase_disparity(&dec_l, &dec_r, params)?,
        DisparityMethod::Block => block_disparity(left, right, params)?,
    };
    let gain = gain_field(disparity, params.g)?;

    let (rows, cols) = left.matrix().shape();
    let n = rows * cols;
    let mut contrast = vec![0.0; n];
    let mut phase = vec![0.0; n];
    contrast
        .par_iter_mut()
        .zip(phase.par_iter_mut())
        .enumerate()
        .for_each(|(k, (c, p))| {
            let ml = dec_l.m.as_slice()[k];
            let mr = dec_r.m.as_slice()[k];
            let tl = dec_l.theta.as_slice()[k];
            let tr = dec_r.theta.as_slice()[k];
            let a = gain.alpha.as_slice()[k];
            *c = fuse_contrast(ml, mr, tl, tr, a);
            *p = fuse_phase(ml, mr, tl, tr, a);
        });

    Ok(Synthesis {
        left: dec_l,
        right: dec_r,
        gain,
        fused: FusedImages {
            contrast: Matrix::from_vec(rows, cols, contrast)?,
            phase: Matrix::from_vec(rows, cols, phase)?,
        },
    })
}
