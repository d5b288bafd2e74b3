//! Synthetic distortions: additive white noise, Gaussian blur and 8x8
//! block-DCT quantization (a JPEG-like blocking surrogate).

use std::f64::consts::PI;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::matrix::{convolve_separable, gaussian_kernel, reflect_index, Matrix};

/// Quantization step per unit of `q_scale - 1`, in orthonormal-DCT units of
/// `[0, 1]` luminance.
pub const BLOCK_STEP_UNIT: f64 = 0.01;
const BLOCK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistortionKind {
    Wn,
    Blur,
    Block,
}

impl DistortionKind {
    pub const ALL: [DistortionKind; 3] = [DistortionKind::Wn, DistortionKind::Blur, DistortionKind::Block];

    pub fn as_str(self) -> &'static str {
        match self {
            DistortionKind::Wn => "wn",
            DistortionKind::Blur => "blur",
            DistortionKind::Block => "block",
        }
    }

    pub fn validate_level(self, level: f64) -> Result<()> {
        let ok = match self {
            DistortionKind::Wn => (0.0..=1.0).contains(&level),
            DistortionKind::Blur => level >= 0.0 && level.is_finite(),
            DistortionKind::Block => level >= 1.0 && level.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{} level {level} out of range", self.as_str())))
        }
    }
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eye {
    Both,
    Left,
    Right,
}

impl Eye {
    pub const ALL: [Eye; 3] = [Eye::Both, Eye::Left, Eye::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Eye::Both => "both",
            Eye::Left => "left",
            Eye::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub kind: DistortionKind,
    /// Noise std (luminance units), blur std (pixels) or quantization scale.
    pub level: f64,
    pub eye: Eye,
}

impl DistortionSpec {
    pub fn validate(&self) -> Result<()> {
        self.kind.validate_level(self.level)
    }

    pub fn apply(&self, img: &GrayImage, seed: u64) -> Result<GrayImage> {
        match self.kind {
            DistortionKind::Wn => distort_wn(img, self.level, seed),
            DistortionKind::Blur => distort_blur(img, self.level),
            DistortionKind::Block => distort_block(img, self.level),
        }
    }
}

pub fn distort_wn(img: &GrayImage, sigma: f64, seed: u64) -> Result<GrayImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = img.matrix().map(|v| v);
    let mut noisy = noisy;
    for v in noisy.as_mut_slice() {
        *v += normal.sample(&mut rng);
    }
    GrayImage::from_clamped(noisy)
}

pub fn distort_blur(img: &GrayImage, sigma_px: f64) -> Result<GrayImage> {
    if !(sigma_px >= 0.0 && sigma_px.is_finite()) {
        return Err(Error::invalid(format!("blur sigma must be >= 0, got {sigma_px}")));
    }
    if sigma_px == 0.0 {
        return Ok(img.clone());
    }
    let radius = (3.0 * sigma_px).ceil() as usize;
    GrayImage::from_clamped(convolve_separable(img.matrix(), &gaussian_kernel(sigma_px, radius)))
}

/// Orthonormal DCT-II basis, `basis[u][x]`.
fn dct_basis() -> [[f64; BLOCK]; BLOCK] {
    let mut c = [[0.0; BLOCK]; BLOCK];
    for (u, row) in c.iter_mut().enumerate() {
        let scale = if u == 0 { (1.0 / BLOCK as f64).sqrt() } else { (2.0 / BLOCK as f64).sqrt() };
        for (x, v) in row.iter_mut().enumerate() {
            *v = scale * (((2 * x + 1) * u) as f64 * PI / (2 * BLOCK) as f64).cos();
        }
    }
    c
}

pub fn distort_block(img: &GrayImage, q_scale: f64) -> Result<GrayImage> {
    if !(q_scale >= 1.0 && q_scale.is_finite()) {
        return Err(Error::invalid(format!("q_scale must be >= 1, got {q_scale}")));
    }
    let step = (q_scale - 1.0) * BLOCK_STEP_UNIT;
    let src = img.matrix();
    let (rows, cols) = src.shape();
    let basis = dct_basis();
    let mut out = Matrix::zeros(rows, cols);

    let mut block = [[0.0; BLOCK]; BLOCK];
    let mut tmp = [[0.0; BLOCK]; BLOCK];
    let mut coef = [[0.0; BLOCK]; BLOCK];
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            // partial edge blocks are completed by reflection
            for (x, row) in block.iter_mut().enumerate() {
                let i = reflect_index((r0 + x) as isize, rows);
                for (y, v) in row.iter_mut().enumerate() {
                    *v = src.get(i, reflect_index((c0 + y) as isize, cols));
                }
            }
            // coef = C * block * C^T
            for u in 0..BLOCK {
                for y in 0..BLOCK {
                    tmp[u][y] = (0..BLOCK).map(|x| basis[u][x] * block[x][y]).sum();
                }
            }
            for u in 0..BLOCK {
                for v in 0..BLOCK {
                    let f: f64 = (0..BLOCK).map(|y| tmp[u][y] * basis[v][y]).sum();
                    coef[u][v] = if step > 0.0 { (f / step).round() * step } else { f };
                }
            }
            // block = C^T * coef * C
            for u in 0..BLOCK {
                for y in 0..BLOCK {
                    tmp[u][y] = (0..BLOCK).map(|v| coef[u][v] * basis[v][y]).sum();
                }
            }
            for x in 0..BLOCK.min(rows - r0) {
                for y in 0..BLOCK.min(cols - c0) {
                    let v: f64 = (0..BLOCK).map(|u| basis[u][x] * tmp[u][y]).sum();
                    out.set(r0 + x, c0 + y, v);
                }
            }
        }
    }
    GrayImage::from_clamped(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn noise_image(seed: u64, rows: usize, cols: usize) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrayImage::new(Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>())).unwrap()
    }

    fn variance(m: &Matrix) -> f64 {
        let mean = m.mean();
        m.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m.as_slice().len() as f64
    }

    fn psnr(a: &Matrix, b: &Matrix) -> f64 {
        let mse = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.as_slice().len() as f64;
        10.0 * (1.0 / mse).log10()
    }

    #[test]
    fn white_noise() {
        let flat = GrayImage::new(Matrix::filled(128, 128, 0.5)).unwrap();
        assert_eq!(distort_wn(&flat, 0.0, 1).unwrap(), flat);
        let a = distort_wn(&flat, 0.1, 7).unwrap();
        let sd = variance(a.matrix()).sqrt();
        assert!((0.09..=0.11).contains(&sd), "std {sd}");
        assert_eq!(a, distort_wn(&flat, 0.1, 7).unwrap());
        assert_ne!(a, distort_wn(&flat, 0.1, 8).unwrap());
        assert!(distort_wn(&flat, -0.1, 7).is_err());
    }

    #[test]
    fn blur() {
        let img = noise_image(2, 64, 64);
        assert_eq!(distort_blur(&img, 0.0).unwrap(), img);
        assert!(variance(distort_blur(&img, 2.0).unwrap().matrix()) < variance(img.matrix()));
        let flat = GrayImage::new(Matrix::filled(32, 40, 0.3)).unwrap();
        let out = distort_blur(&flat, 3.5).unwrap();
        assert!(out.matrix().as_slice().iter().all(|v| (v - 0.3).abs() < 1e-12));
        assert!(distort_blur(&img, -1.0).is_err());
    }

    #[test]
    fn block_identity_at_unit_scale() {
        let img = noise_image(3, 37, 45);
        let out = distort_block(&img, 1.0).unwrap();
        for (a, b) in img.matrix().as_slice().iter().zip(out.matrix().as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(distort_block(&img, 0.5).is_err());
    }

    #[test]
    fn block_dc_only_is_flat_per_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = GrayImage::new(Matrix::from_fn(32, 32, |i, _| {
            0.3 + 0.2 * (i / 8) as f64 / 4.0 + 0.005 * rng.random::<f64>()
        }))
        .unwrap();
        // step 1.0: every AC coefficient rounds to zero, DC (about 8 x mean) survives
        let out = distort_block(&img, 101.0).unwrap();
        let m = out.matrix();
        for r0 in (0..32).step_by(8) {
            for c0 in (0..32).step_by(8) {
                let v = m.get(r0, c0);
                assert!(v > 0.0);
                for i in r0..r0 + 8 {
                    for j in c0..c0 + 8 {
                        assert_eq!(m.get(i, j), v);
                    }
                }
            }
        }
    }

    #[test]
    fn block_psnr_decreases_with_scale() {
        let img = distort_blur(&noise_image(5, 64, 64), 1.0).unwrap();
        let scores: Vec<f64> = [2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&q| psnr(img.matrix(), distort_block(&img, q).unwrap().matrix()))
            .collect();
        assert!(scores.windows(2).all(|w| w[0] > w[1]), "{scores:?}");
    }
}
