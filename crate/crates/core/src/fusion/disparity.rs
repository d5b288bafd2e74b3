use std::f64::consts::TAU;

use super::{wrap_phase, AnalyticDecomposition, FusionParams};
use crate::error::Result;
use crate::image::GrayImage;
use crate::matrix::Matrix;

pub const BLOCK_SIZE: usize = 8;
pub const SEARCH_RANGE: isize = 16;

/// Disparity in degrees from the absolute wrapped phase difference:
/// `|wrap(thetaR - thetaL)| / (2 pi f_s)`.
pub fn phase_disparity(
    left: &AnalyticDecomposition,
    right: &AnalyticDecomposition,
    params: &FusionParams,
) -> Result<Matrix> {
    let scale = 1.0 / (TAU * params.f_s);
    left.theta
        .zip_map(&right.theta, |tl, tr| wrap_phase(tr - tl).abs() * scale)
}

/// Disparity in degrees from SAD block matching of the raw luminance.
///
/// Each 8x8 tile of the left image is compared with right-image tiles
/// shifted horizontally by `-16..=16` px; the best shift (smallest SAD, then
/// smallest magnitude) converted by `pixels_per_degree` fills the tile.
pub fn block_disparity(left: &GrayImage, right: &GrayImage, params: &FusionParams) -> Result<Matrix> {
    let (l, r) = (left.matrix(), right.matrix());
    l.ensure_same_shape(r)?;
    let (rows, cols) = l.shape();
    let mut out = Matrix::zeros(rows, cols);

    for r0 in (0..rows).step_by(BLOCK_SIZE) {
        let h = BLOCK_SIZE.min(rows - r0);
        for c0 in (0..cols).step_by(BLOCK_SIZE) {
            let w = BLOCK_SIZE.min(cols - c0);
            let mut best: Option<(f64, isize)> = None;
            for shift in -SEARCH_RANGE..=SEARCH_RANGE {
                let start = c0 as isize + shift;
                if start < 0 || start as usize + w > cols {
                    continue;
                }
                let start = start as usize;
                let mut sad = 0.0;
                for i in r0..r0 + h {
                    let lr = &l.row(i)[c0..c0 + w];
                    let rr = &r.row(i)[start..start + w];
                    sad += lr.iter().zip(rr).map(|(a, b)| (a - b).abs()).sum::<f64>();
                }
                let better = match best {
                    None => true,
                    Some((s, d)) => sad < s || (sad == s && shift.abs() < d.abs()),
                };
                if better {
                    best = Some((sad, shift));
                }
            }
            let deg = best.map_or(0.0, |(_, d)| d.unsigned_abs() as f64 / params.pixels_per_degree);
            for i in r0..r0 + h {
                for j in c0..c0 + w {
                    out.set(i, j, deg);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn decomposition(theta: f64) -> AnalyticDecomposition {
        AnalyticDecomposition {
            m: Matrix::filled(4, 4, 0.2),
            theta: Matrix::filled(4, 4, theta),
        }
    }

    #[test]
    fn identical_eyes_have_zero_disparity() {
        let p = FusionParams::default();
        let d = phase_disparity(&decomposition(0.4), &decomposition(0.4), &p).unwrap();
        assert!(d.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn half_cycle_phase_difference() {
        let p = FusionParams::default();
        let l = decomposition(-PI / 2.0);
        let r = decomposition(PI / 2.0);
        let d = phase_disparity(&l, &r, &p).unwrap();
        for &v in d.as_slice() {
            assert!((v - 0.735_294_117_647).abs() < 1e-4);
        }
        let swapped = phase_disparity(&r, &l, &p).unwrap();
        assert_eq!(d, swapped);
    }

    #[test]
    fn dimension_mismatch() {
        let p = FusionParams::default();
        let a = decomposition(0.0);
        let b = AnalyticDecomposition {
            m: Matrix::zeros(4, 5),
            theta: Matrix::zeros(4, 5),
        };
        assert!(phase_disparity(&a, &b, &p).is_err());
    }

    #[test]
    fn block_matching_recovers_shift() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (rows, cols) = (32, 96);
        let base: Vec<f64> = (0..rows * (cols + 8)).map(|_| rng.random::<f64>()).collect();
        let wide = cols + 8;
        let left = Matrix::from_fn(rows, cols, |i, j| base[i * wide + j + 8]);
        // right(x) = left(x + 5), so the match for a left tile sits 5 px left
        let right = Matrix::from_fn(rows, cols, |i, j| base[i * wide + j + 3]);
        let p = FusionParams::default();
        let d = block_disparity(
            &GrayImage::new(left).unwrap(),
            &GrayImage::new(right).unwrap(),
            &p,
        )
        .unwrap();
        // interior tiles see the true 5 px shift
        assert!((d.get(10, 48) - 5.0 / 32.0).abs() < 1e-12);
    }
}
