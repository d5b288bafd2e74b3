//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use siqa::Matrix;

/// Lanczos approximation (g = 7, n = 9), accurate to ~1e-15.
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn gamma_ratio_13(shape: f64) -> f64 {
    // Gamma(1/a) / Gamma(3/a)
    (ln_gamma(1.0 / shape) - ln_gamma(3.0 / shape)).exp()
}

/// Symmetric generalized Gaussian draws with shape `a` and variance `var`.
pub fn ggd_samples(rng: &mut ChaCha8Rng, shape: f64, var: f64, n: usize) -> Vec<f64> {
    let gamma = Gamma::new(1.0 / shape, 1.0).unwrap();
    let scale = (var * gamma_ratio_13(shape)).sqrt();
    (0..n)
        .map(|_| {
            let mag = scale * gamma.sample(rng).powf(1.0 / shape);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Asymmetric generalized Gaussian draws; `sl2`/`sr2` are the one-sided
/// second moments of the negative and positive halves.
pub fn aggd_samples(rng: &mut ChaCha8Rng, nu: f64, sl2: f64, sr2: f64, n: usize) -> Vec<f64> {
    let gamma = Gamma::new(1.0 / nu, 1.0).unwrap();
    let r = gamma_ratio_13(nu).sqrt();
    let (bl, br) = (sl2.sqrt() * r, sr2.sqrt() * r);
    let p_left = bl / (bl + br);
    (0..n)
        .map(|_| {
            let y = gamma.sample(rng).powf(1.0 / nu);
            if rng.random_bool(p_left) {
                -bl * y
            } else {
                br * y
            }
        })
        .collect()
}

/// Brute-force average ranks: 1 + #smaller + (#equal - 1) / 2.
pub fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Textbook Pearson correlation.
pub fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

// ---- straight-line NSS features ----

const SHAPES: usize = 9801;

fn ref_rho(a: f64) -> f64 {
    (ln_gamma(1.0 / a) + ln_gamma(3.0 / a) - 2.0 * ln_gamma(2.0 / a)).exp()
}

fn ref_shape_for(target: f64, grid: &[f64]) -> f64 {
    let mut best = 0;
    for k in 1..SHAPES {
        if (grid[k] - target).abs() < (grid[best] - target).abs() {
            best = k;
        }
    }
    0.2 + best as f64 * 1e-3
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i.rem_euclid(2 * n);
    if i >= n {
        i = 2 * n - 1 - i;
    }
    i as usize
}

fn ref_mscn(img: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (h, w) = (img.len(), img[0].len());
    let sigma = 7.0 / 6.0;
    let mut wts = [[0.0; 7]; 7];
    let mut total = 0.0;
    for (a, row) in wts.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            let (dy, dx) = (a as f64 - 3.0, b as f64 - 3.0);
            *v = (-(dy * dy + dx * dx) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    let mut out = vec![vec![0.0; w]; h];
    for i in 0..h {
        for j in 0..w {
            let (mut mu, mut sq) = (0.0, 0.0);
            for a in 0..7 {
                for b in 0..7 {
                    let v = img[reflect(i as isize + a as isize - 3, h)][reflect(j as isize + b as isize - 3, w)];
                    mu += wts[a][b] / total * v;
                    sq += wts[a][b] / total * v * v;
                }
            }
            let sd = (sq - mu * mu).max(0.0).sqrt();
            out[i][j] = (img[i][j] - mu) / (sd + 0.01);
        }
    }
    out
}

fn ref_ggd(x: &[f64], grid: &[f64]) -> [f64; 2] {
    let n = x.len() as f64;
    let m1 = x.iter().map(|v| v.abs()).sum::<f64>() / n;
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / n;
    [ref_shape_for(m2 / (m1 * m1), grid), m2]
}

fn ref_aggd(x: &[f64], grid: &[f64]) -> [f64; 4] {
    let neg: Vec<f64> = x.iter().copied().filter(|v| *v < 0.0).collect();
    let pos: Vec<f64> = x.iter().copied().filter(|v| *v > 0.0).collect();
    let side = |s: &[f64]| {
        if s.is_empty() {
            1e-12
        } else {
            (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).max(1e-12)
        }
    };
    let (sl2, sr2) = (side(&neg), side(&pos));
    let g = (sl2 / sr2).sqrt();
    let n = x.len() as f64;
    let m1 = x.iter().map(|v| v.abs()).sum::<f64>() / n;
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / n;
    let r_hat = m1 * m1 / m2;
    let r_norm = r_hat * (g.powi(3) + 1.0) * (g + 1.0) / (g * g + 1.0).powi(2);
    let nu = ref_shape_for(1.0 / r_norm, grid);
    let r = gamma_ratio_13(nu).sqrt();
    let (bl, br) = (sl2.sqrt() * r, sr2.sqrt() * r);
    let eta = (bl - br) * (ln_gamma(2.0 / nu) - ln_gamma(1.0 / nu)).exp();
    [nu, eta, sl2, sr2]
}

fn ref_scale(img: &[Vec<f64>], phase: bool, grid: &[f64], out: &mut Vec<f64>) {
    let peak = img.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let scaled: Vec<Vec<f64>> = img.iter().map(|r| r.iter().map(|v| v / peak).collect()).collect();
    let m = ref_mscn(&scaled);
    let (h, w) = (m.len(), m[0].len());
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    if phase {
        out.extend(ref_aggd(&flat, grid));
    } else {
        out.extend(ref_ggd(&flat, grid));
    }
    let mut hp = Vec::new();
    let mut vp = Vec::new();
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    for i in 0..h {
        for j in 0..w {
            if j + 1 < w {
                hp.push(m[i][j] * m[i][j + 1]);
            }
            if i + 1 < h {
                vp.push(m[i][j] * m[i + 1][j]);
            }
            if i + 1 < h && j + 1 < w {
                d1.push(m[i][j] * m[i + 1][j + 1]);
            }
            if i + 1 < h && j >= 1 {
                d2.push(m[i][j] * m[i + 1][j - 1]);
            }
        }
    }
    for p in [hp, vp, d1, d2] {
        out.extend(ref_aggd(&p, grid));
    }
}

/// Reference feature vector (40 values for phase, 36 for contrast).
pub fn reference_features(img: &Matrix, phase: bool) -> Vec<f64> {
    let grid: Vec<f64> = (0..SHAPES).map(|k| ref_rho(0.2 + k as f64 * 1e-3)).collect();
    let rows: Vec<Vec<f64>> = (0..img.rows()).map(|i| img.row(i).to_vec()).collect();
    let mut out = Vec::new();
    ref_scale(&rows, phase, &grid, &mut out);
    let half: Vec<Vec<f64>> = (0..rows.len() / 2)
        .map(|i| {
            (0..rows[0].len() / 2)
                .map(|j| (rows[2 * i][2 * j] + rows[2 * i][2 * j + 1] + rows[2 * i + 1][2 * j] + rows[2 * i + 1][2 * j + 1]) / 4.0)
                .collect()
        })
        .collect();
    ref_scale(&half, phase, &grid, &mut out);
    out
}

/// Central-difference gradient of `f` at `params`.
pub fn finite_difference(params: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + h;
            let up = f(&p);
            p[k] = orig - h;
            let down = f(&p);
            p[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Per-eye ground truth of a grating: modulation contrast and local phase
/// at column `x`.
pub fn grating_truth(i0: f64, m: f64, f_s: f64, theta: f64, ppd: f64, c1: f64, x: usize) -> (f64, f64) {
    let phase = 2.0 * std::f64::consts::PI * f_s * x as f64 / ppd + theta;
    (m / (i0 + c1), siqa::fusion::wrap_phase(phase))
}

/// Worst errors of `synthesize_pair` against the closed-form fusion of two
/// gratings: (max relative contrast error, max absolute phase error).
/// Only columns at least two periods from either border count, and phase
/// is skipped within 0.15 rad of the wrap point where the gain makes the
/// closed form discontinuous.
pub fn grating_pair_errors(i0: f64, left: (f64, f64), right: (f64, f64), width: usize) -> (f64, f64) {
    use siqa::fusion::{fuse_contrast, fuse_phase, gain_control, grating_image, wrap_phase};
    let p = siqa::FusionParams::default();
    let height = 24;
    let l = grating_image(i0, left.0, p.f_s, left.1, p.pixels_per_degree, width, height).unwrap();
    let r = grating_image(i0, right.0, p.f_s, right.1, p.pixels_per_degree, width, height).unwrap();
    let fused = siqa::synthesize_pair(&l, &r, &p).unwrap();
    let d = wrap_phase(right.1 - left.1).abs() / (2.0 * std::f64::consts::PI * p.f_s);
    let alpha = gain_control(d, p.g).unwrap();
    let margin = (2.0 * p.period_px()).ceil() as usize;
    let (mut worst_c, mut worst_p) = (0.0f64, 0.0f64);
    for x in margin..width - margin {
        let (ml, tl) = grating_truth(i0, left.0, p.f_s, left.1, p.pixels_per_degree, p.c1, x);
        let (mr, tr) = grating_truth(i0, right.0, p.f_s, right.1, p.pixels_per_degree, p.c1, x);
        let want_c = fuse_contrast(ml, mr, tl, tr, alpha);
        let want_p = fuse_phase(ml, mr, tl, tr, alpha);
        for y in 0..height {
            let got_c = fused.contrast.get(y, x);
            worst_c = worst_c.max((got_c - want_c).abs() / want_c);
            if std::f64::consts::PI - tl.abs() > 0.15 && std::f64::consts::PI - tr.abs() > 0.15 {
                worst_p = worst_p.max(wrap_phase(fused.phase.get(y, x) - want_p).abs());
            }
        }
    }
    (worst_c, worst_p)
}
