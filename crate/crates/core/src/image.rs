//! Luminance images and raster I/O.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Smallest width/height accepted by pipeline entry points.
pub const MIN_SIDE: usize = 16;

/// BT.601 luma weights applied to RGB inputs.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Luminance image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    data: Matrix,
}

impl GrayImage {
    /// Wraps a matrix after checking size, finiteness and range.
    pub fn new(data: Matrix) -> Result<Self> {
        let (h, w) = data.shape();
        if w < MIN_SIDE || h < MIN_SIDE {
            return Err(Error::invalid(format!(
                "image is {w}x{h}, minimum is {MIN_SIDE}x{MIN_SIDE}"
            )));
        }
        if let Some(v) = data
            .as_slice()
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::invalid(format!(
                "pixel value {v} outside [0, 1]"
            )));
        }
        Ok(GrayImage { data })
    }

    /// Clamps every value into `[0, 1]` (non-finite values become 0) before wrapping.
    pub fn from_clamped(data: Matrix) -> Result<Self> {
        Self::new(data.map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 }))
    }

    pub fn width(&self) -> usize {
        self.data.cols()
    }

    pub fn height(&self) -> usize {
        self.data.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| match source {
            image::ImageError::IoError(e) => Error::io(path, e),
            source => Error::Image {
                path: path.to_path_buf(),
                source,
            },
        })?;
        Self::from_dynamic(&img)
    }

    pub fn from_dynamic(img: &DynamicImage) -> Result<Self> {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = match img {
            DynamicImage::ImageLuma8(buf) => {
                Matrix::from_vec(h, w, buf.pixels().map(|p| p[0] as f64 / 255.0).collect())?
            }
            DynamicImage::ImageLumaA8(buf) => {
                Matrix::from_vec(h, w, buf.pixels().map(|p| p[0] as f64 / 255.0).collect())?
            }
            DynamicImage::ImageLuma16(buf) => {
                Matrix::from_vec(h, w, buf.pixels().map(|p| p[0] as f64 / 65535.0).collect())?
            }
            DynamicImage::ImageLumaA16(buf) => {
                Matrix::from_vec(h, w, buf.pixels().map(|p| p[0] as f64 / 65535.0).collect())?
            }
            other => {
                let rgb = other.to_rgb32f();
                let [wr, wg, wb] = LUMA_WEIGHTS;
                Matrix::from_vec(
                    h,
                    w,
                    rgb.pixels()
                        .map(|p| wr * p[0] as f64 + wg * p[1] as f64 + wb * p[2] as f64)
                        .collect(),
                )?
            }
        };
        Self::from_clamped(data)
    }

    /// Writes a 16-bit grayscale PNG.
    pub fn save_png16(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(
            self.width() as u32,
            self.height() as u32,
            self.data
                .as_slice()
                .iter()
                .map(|v| (v * 65535.0).round() as u16)
                .collect(),
        )
        .expect("buffer length matches dimensions");
        buf.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Min-max normalizes a real matrix into an 8-bit preview image.
pub fn save_preview(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (lo, hi) = m
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let pixels = m
        .as_slice()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(m.cols() as u32, m.rows() as u32, pixels)
            .expect("buffer length matches dimensions");
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}
