//! Procedural pristine stereo pairs: a multi-octave textured background with
//! a few textured foreground shapes, each layer shifted horizontally by its
//! own disparity in the right view.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::image::GrayImage;
use crate::matrix::{convolve_separable, gaussian_kernel, Matrix};

const MARGIN: usize = 24;
const BACKGROUND_SHIFT: usize = 2;

fn smooth_noise(rng: &mut ChaCha8Rng, rows: usize, cols: usize, sigma: f64) -> Matrix {
    let white = Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let radius = (3.0 * sigma).ceil() as usize;
    let m = convolve_separable(&white, &gaussian_kernel(sigma, radius));
    let mean = m.mean();
    let sd = (m.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m.as_slice().len() as f64)
        .sqrt()
        .max(1e-12);
    m.map(|v| (v - mean) / sd)
}

fn rescale(m: &Matrix, lo: f64, hi: f64) -> Matrix {
    let (min, max) = m
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = (max - min).max(1e-12);
    m.map(|v| lo + (hi - lo) * (v - min) / span)
}

struct Shape {
    cy: f64,
    cx: f64,
    ry: f64,
    rx: f64,
    ellipse: bool,
    shift: usize,
    level: f64,
    texture: Matrix,
}

impl Shape {
    fn contains(&self, i: usize, x: usize) -> bool {
        let dy = (i as f64 - self.cy) / self.ry;
        let dx = (x as f64 - self.cx) / self.rx;
        if self.ellipse {
            dy * dy + dx * dx <= 1.0
        } else {
            dy.abs() <= 1.0 && dx.abs() <= 1.0
        }
    }
}

/// Rectified stereo pair of the requested size, fully determined by `seed`.
pub fn synthetic_scene(width: usize, height: usize, seed: u64) -> Result<(GrayImage, GrayImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = width + 2 * MARGIN;
    let rows = height;

    let mut background = Matrix::zeros(rows, cols);
    for (sigma, weight) in [(24.0, 1.0), (10.0, 0.7), (4.0, 0.45), (1.5, 0.25)] {
        let layer = smooth_noise(&mut rng, rows, cols, sigma);
        for (b, l) in background.as_mut_slice().iter_mut().zip(layer.as_slice()) {
            *b += weight * l;
        }
    }
    let background = rescale(&background, 0.15, 0.85);

    let n_shapes = rng.random_range(3..=5);
    let shapes: Vec<Shape> = (0..n_shapes)
        .map(|_| {
            let texture_sigma = rng.random_range(1.0..3.0);
            let texture = smooth_noise(&mut rng, rows, cols, texture_sigma);
            Shape {
                cy: rng.random_range(0.15..0.85) * rows as f64,
                cx: MARGIN as f64 + rng.random_range(0.15..0.85) * width as f64,
                ry: rng.random_range(0.08..0.25) * rows as f64,
                rx: rng.random_range(0.08..0.25) * width as f64,
                ellipse: rng.random_bool(0.5),
                shift: rng.random_range(4..=10),
                level: rng.random_range(0.2..0.8),
                texture,
            }
        })
        .collect();

    let render = |right: bool| -> Matrix {
        Matrix::from_fn(rows, width, |i, x| {
            let bx = x + MARGIN + if right { BACKGROUND_SHIFT } else { 0 };
            let mut v = background.get(i, bx);
            for s in &shapes {
                let sx = x + MARGIN + if right { s.shift } else { 0 };
                if sx < cols && s.contains(i, sx) {
                    v = s.level + 0.08 * s.texture.get(i, sx);
                }
            }
            v
        })
    };
    Ok((GrayImage::from_clamped(render(false))?, GrayImage::from_clamped(render(true))?))
}
