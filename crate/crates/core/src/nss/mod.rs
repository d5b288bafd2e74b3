//! Spatial natural-scene statistics of the synthesized images.
//!
//! Both images go through the same two-scale pipeline: normalize by the
//! global maximum magnitude, compute MSCN coefficients, fit the base
//! distribution (AGGD for phase, GGD for contrast), then fit an AGGD to
//! each of the four paired-product maps. Scale 2 repeats this on the 2x2
//! box-downsampled image.
//!
//! Slot layout (scale-major; orientations H, V, D1, D2; AGGD blocks are
//! `nu, eta, sigma_l2, sigma_r2`; GGD blocks are `alpha, sigma2`):
//!
//! | kind     | per scale                      | total |
//! |----------|--------------------------------|-------|
//! | phase    | base AGGD (4) + 4 x AGGD (4)   | 40    |
//! | contrast | base GGD (2) + 4 x AGGD (4)    | 36    |

mod fit;
mod io;

use std::fmt;

pub use fit::{
    fit_aggd, fit_ggd, rho, AggdParams, GgdParams, EMPTY_SIDE_VARIANCE, MIN_SAMPLES, SHAPE_MAX,
    SHAPE_MIN, SHAPE_STEP,
};
pub use io::{read_feature_file, write_feature_file, FeatureFile, FeatureRecord};

use crate::error::{Error, Result};
use crate::matrix::{convolve_separable, gaussian_kernel, Matrix};

pub const MSCN_RADIUS: usize = 3;
pub const MSCN_SIGMA: f64 = 7.0 / 6.0;
/// Stabilizer applied after normalizing the input by its max magnitude.
pub const MSCN_C: f64 = 0.01;
/// Smallest side accepted by the feature extractors; the half-resolution
/// paired-product maps then still hold at least [`MIN_SAMPLES`] values.
pub const MIN_FEATURE_SIDE: usize = 24;

pub const PHASE_LEN: usize = 40;
pub const CONTRAST_LEN: usize = 36;

pub const ORIENTATIONS: [&str; 4] = ["h", "v", "d1", "d2"];
const AGGD_SLOTS: [&str; 4] = ["nu", "eta", "sigma_l2", "sigma_r2"];
const GGD_SLOTS: [&str; 2] = ["alpha", "sigma2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Phase,
    Contrast,
}

impl FeatureKind {
    pub fn len(self) -> usize {
        match self {
            FeatureKind::Phase => PHASE_LEN,
            FeatureKind::Contrast => CONTRAST_LEN,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Phase => "phase",
            FeatureKind::Contrast => "contrast",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "phase" => Some(FeatureKind::Phase),
            "contrast" => Some(FeatureKind::Contrast),
            _ => None,
        }
    }

    /// Names of every slot, e.g. `s1.base.nu` or `s2.d1.sigma_r2`.
    pub fn slot_names(self) -> Vec<String> {
        let base: &[&str] = match self {
            FeatureKind::Phase => &AGGD_SLOTS,
            FeatureKind::Contrast => &GGD_SLOTS,
        };
        let mut names = Vec::with_capacity(self.len());
        for scale in 1..=2 {
            names.extend(base.iter().map(|p| format!("s{scale}.base.{p}")));
            for o in ORIENTATIONS {
                names.extend(AGGD_SLOTS.iter().map(|p| format!("s{scale}.{o}.{p}")));
            }
        }
        names
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    kind: FeatureKind,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(kind: FeatureKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != kind.len() {
            return Err(Error::invalid(format!(
                "{kind} feature vector has {} values, expected {}",
                values.len(),
                kind.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{kind} feature vector has non-finite values")));
        }
        Ok(FeatureVector { kind, values })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Mean-subtracted contrast-normalized coefficients
/// `(I - mu) / (delta + c)` with Gaussian-weighted local mean `mu` and
/// local standard deviation `delta`.
pub fn mscn(img: &Matrix, window_radius: usize, gaussian_sigma: f64, c: f64) -> Matrix {
    let kernel = gaussian_kernel(gaussian_sigma, window_radius);
    let mu = convolve_separable(img, &kernel);
    let sq = convolve_separable(&img.map(|v| v * v), &kernel);
    Matrix::from_fn(img.rows(), img.cols(), |i, j| {
        let m = mu.get(i, j);
        let var = (sq.get(i, j) - m * m).max(0.0);
        (img.get(i, j) - m) / (var.sqrt() + c)
    })
}

/// Products of horizontally, vertically and diagonally adjacent
/// coefficients, in the order H, V, D1, D2.
pub fn paired_products(m: &Matrix) -> [Matrix; 4] {
    let (r, c) = m.shape();
    let (r1, c1) = (r.saturating_sub(1), c.saturating_sub(1));
    [
        Matrix::from_fn(r, c1, |i, j| m.get(i, j) * m.get(i, j + 1)),
        Matrix::from_fn(r1, c, |i, j| m.get(i, j) * m.get(i + 1, j)),
        Matrix::from_fn(r1, c1, |i, j| m.get(i, j) * m.get(i + 1, j + 1)),
        Matrix::from_fn(r1, c1, |i, j| m.get(i, j + 1) * m.get(i + 1, j)),
    ]
}

/// 2x2 box average followed by decimation; odd trailing rows/columns drop.
pub fn downsample2(img: &Matrix) -> Result<Matrix> {
    let (r, c) = img.shape();
    if r < 2 || c < 2 {
        return Err(Error::invalid(format!("cannot downsample a {r}x{c} matrix")));
    }
    Ok(Matrix::from_fn(r / 2, c / 2, |i, j| {
        let (a, b) = (2 * i, 2 * j);
        (img.get(a, b) + img.get(a, b + 1) + img.get(a + 1, b) + img.get(a + 1, b + 1)) / 4.0
    }))
}

fn check_input(m: &Matrix, what: &str) -> Result<()> {
    let (r, c) = m.shape();
    if r < MIN_FEATURE_SIDE || c < MIN_FEATURE_SIDE {
        return Err(Error::invalid(format!(
            "{what} image is {c}x{r}, features need at least {MIN_FEATURE_SIDE}x{MIN_FEATURE_SIDE}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::invalid(format!("{what} image has non-finite values")));
    }
    Ok(())
}

/// MSCN of `m` after scaling it to unit max magnitude.
fn normalized_mscn(m: &Matrix) -> Result<Matrix> {
    let peak = m.max_abs();
    if peak == 0.0 {
        return Err(Error::degenerate("image is identically zero"));
    }
    let scaled = m.map(|v| v / peak);
    Ok(mscn(&scaled, MSCN_RADIUS, MSCN_SIGMA, MSCN_C))
}

fn push_aggd(out: &mut Vec<f64>, p: AggdParams) {
    out.extend([p.nu, p.eta, p.sigma_l2, p.sigma_r2]);
}

fn scale_features(img: &Matrix, kind: FeatureKind, out: &mut Vec<f64>) -> Result<()> {
    let coeffs = normalized_mscn(img)?;
    match kind {
        FeatureKind::Phase => push_aggd(out, fit_aggd(coeffs.as_slice())?),
        FeatureKind::Contrast => {
            let p = fit_ggd(coeffs.as_slice())?;
            out.extend([p.alpha, p.sigma2]);
        }
    }
    for prod in paired_products(&coeffs) {
        push_aggd(out, fit_aggd(prod.as_slice())?);
    }
    Ok(())
}

fn extract(img: &Matrix, kind: FeatureKind) -> Result<FeatureVector> {
    check_input(img, kind.as_str())?;
    let mut values = Vec::with_capacity(kind.len());
    scale_features(img, kind, &mut values)?;
    scale_features(&downsample2(img)?, kind, &mut values)?;
    FeatureVector::new(kind, values)
}

pub fn extract_phase_features(phase: &Matrix) -> Result<FeatureVector> {
    extract(phase, FeatureKind::Phase)
}

pub fn extract_contrast_features(contrast: &Matrix) -> Result<FeatureVector> {
    extract(contrast, FeatureKind::Contrast)
}
