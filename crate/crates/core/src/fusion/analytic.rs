//! Row-wise analytic signal and local contrast/phase decomposition.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::FusionParams;
use crate::image::GrayImage;
use crate::matrix::{convolve_separable, gaussian_kernel, Matrix};

/// Per-pixel modulation contrast and local phase of one eye's image.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDecomposition {
    /// Modulation contrast, `>= 0`.
    pub m: Matrix,
    /// Local phase wrapped to `(-pi, pi]`.
    pub theta: Matrix,
}

/// Discrete analytic signal of every row, computed on the even (mirror)
/// extension of the row so that the periodic FFT sees no jump at the ends.
pub fn analytic_rows(src: &Matrix) -> (Matrix, Matrix) {
    let (rows, cols) = src.shape();
    let len = 2 * cols;
    let mut planner = FftPlanner::<f64>::new();
    let forward: Arc<dyn Fft<f64>> = planner.plan_fft_forward(len);
    let inverse: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(len);

    let mut re = vec![0.0; rows * cols];
    let mut im = vec![0.0; rows * cols];
    re.par_chunks_mut(cols)
        .zip(im.par_chunks_mut(cols))
        .enumerate()
        .for_each_init(
            || {
                let scratch_len = forward
                    .get_inplace_scratch_len()
                    .max(inverse.get_inplace_scratch_len());
                (
                    vec![Complex64::new(0.0, 0.0); len],
                    vec![Complex64::new(0.0, 0.0); scratch_len],
                )
            },
            |(buf, scratch), (i, (re_out, im_out))| {
                let row = src.row(i);
                for (k, &v) in row.iter().enumerate() {
                    buf[k] = Complex64::new(v, 0.0);
                    buf[len - 1 - k] = Complex64::new(v, 0.0);
                }
                forward.process_with_scratch(buf, scratch);
                // one-sided spectrum: keep DC and Nyquist, double positives
                let half = len / 2;
                for (k, c) in buf.iter_mut().enumerate() {
                    if k == 0 || k == half {
                        continue;
                    } else if k < half {
                        *c *= 2.0;
                    } else {
                        *c = Complex64::new(0.0, 0.0);
                    }
                }
                inverse.process_with_scratch(buf, scratch);
                let scale = 1.0 / len as f64;
                for k in 0..cols {
                    re_out[k] = buf[k].re * scale;
                    im_out[k] = buf[k].im * scale;
                }
            },
        );
    (
        Matrix::from_vec(rows, cols, re).expect("shape"),
        Matrix::from_vec(rows, cols, im).expect("shape"),
    )
}

/// `atan2` mapped into `(-pi, pi]`, with `arg(0) = 0`.
#[inline]
pub(crate) fn arg(re: f64, im: f64) -> f64 {
    if re == 0.0 && im == 0.0 {
        return 0.0;
    }
    let a = im.atan2(re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Gaussian-weighted local mean used as the luminance reference.
pub fn local_mean(img: &Matrix, sigma: f64) -> Matrix {
    let radius = (3.0 * sigma).ceil() as usize;
    convolve_separable(img, &gaussian_kernel(sigma, radius))
}

pub fn analytic_decompose(img: &GrayImage, params: &FusionParams) -> AnalyticDecomposition {
    let src = img.matrix();
    let mean = local_mean(src, params.mean_sigma());
    let detail = src
        .zip_map(&mean, |a, b| a - b)
        .expect("same shape");
    let (re, im) = analytic_rows(&detail);
    let c1 = params.c1;

    let m = Matrix::from_fn(src.rows(), src.cols(), |i, j| {
        re.get(i, j).hypot(im.get(i, j)) / (mean.get(i, j) + c1)
    });
    let theta = re.zip_map(&im, arg).expect("same shape");
    AnalyticDecomposition { m, theta }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_signal_of_cosine_has_unit_envelope() {
        let n = 256;
        let w = 2.0 * PI / 32.0;
        let src = Matrix::from_fn(1, n, |_, j| (w * j as f64).cos());
        let (re, im) = analytic_rows(&src);
        for j in 64..192 {
            let amp = re.get(0, j).hypot(im.get(0, j));
            assert!((amp - 1.0).abs() < 0.02, "amp {amp} at {j}");
            assert!((im.get(0, j) - (w * j as f64).sin()).abs() < 0.02);
        }
    }

    #[test]
    fn arg_conventions() {
        assert_eq!(arg(0.0, 0.0), 0.0);
        assert_eq!(arg(-1.0, -0.0), PI);
        assert_eq!(arg(-1.0, 0.0), PI);
    }
}
