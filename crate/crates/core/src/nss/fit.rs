//! Moment-matching estimators for the generalized Gaussian (GGD) and the
//! asymmetric generalized Gaussian (AGGD).

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;
pub const SHAPE_MIN: f64 = 0.2;
pub const SHAPE_MAX: f64 = 10.0;
pub const SHAPE_STEP: f64 = 1e-3;

/// Variance assigned to an AGGD side that received no samples.
pub const EMPTY_SIDE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams {
    pub alpha: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdParams {
    pub nu: f64,
    pub sigma_l2: f64,
    pub sigma_r2: f64,
    pub eta: f64,
}

impl AggdParams {
    /// Left and right scale parameters `beta = sigma sqrt(G(1/nu) / G(3/nu))`.
    pub fn betas(&self) -> (f64, f64) {
        let k = (0.5 * (ln_gamma(1.0 / self.nu) - ln_gamma(3.0 / self.nu))).exp();
        (self.sigma_l2.sqrt() * k, self.sigma_r2.sqrt() * k)
    }
}

/// `rho(a) = G(1/a) G(3/a) / G(2/a)^2`, the ratio `E[x^2] / E[|x|]^2` of a
/// GGD with shape `a`.
pub fn rho(shape: f64) -> f64 {
    (ln_gamma(1.0 / shape) + ln_gamma(3.0 / shape) - 2.0 * ln_gamma(2.0 / shape)).exp()
}

struct ShapeTable {
    shapes: Vec<f64>,
    rho: Vec<f64>,
}

fn table() -> &'static ShapeTable {
    static TABLE: OnceLock<ShapeTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = ((SHAPE_MAX - SHAPE_MIN) / SHAPE_STEP).round() as usize + 1;
        let shapes: Vec<f64> = (0..n).map(|k| (200 + k) as f64 / 1000.0).collect();
        let rho = shapes.iter().map(|&a| rho(a)).collect();
        ShapeTable { shapes, rho }
    })
}

/// Grid shape whose `rho` is nearest to `target`; ties go to the smaller shape.
fn invert_rho(target: f64) -> f64 {
    let t = table();
    let mut best = 0;
    let mut best_err = f64::INFINITY;
    for (k, &r) in t.rho.iter().enumerate() {
        let err = (r - target).abs();
        if err < best_err {
            best_err = err;
            best = k;
        }
    }
    t.shapes[best]
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::degenerate(format!(
            "{} samples, at least {MIN_SAMPLES} required",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::degenerate("non-finite sample"));
    }
    if samples.iter().all(|&v| v == 0.0) {
        return Err(Error::degenerate("all samples are zero"));
    }
    Ok(())
}

pub fn fit_ggd(samples: &[f64]) -> Result<GgdParams> {
    check_samples(samples)?;
    let n = samples.len() as f64;
    let mean_abs = samples.iter().map(|v| v.abs()).sum::<f64>() / n;
    let second = samples.iter().map(|v| v * v).sum::<f64>() / n;
    let alpha = invert_rho(second / (mean_abs * mean_abs));
    Ok(GgdParams {
        alpha,
        sigma2: second,
    })
}

pub fn fit_aggd(samples: &[f64]) -> Result<AggdParams> {
    check_samples(samples)?;
    let n = samples.len() as f64;
    let (mut left_sum, mut left_n, mut right_sum, mut right_n) = (0.0, 0usize, 0.0, 0usize);
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for &v in samples {
        let sq = v * v;
        if v < 0.0 {
            left_sum += sq;
            left_n += 1;
        } else if v > 0.0 {
            right_sum += sq;
            right_n += 1;
        }
        abs_sum += v.abs();
        sq_sum += sq;
    }
    let side = |sum: f64, count: usize| {
        if count == 0 {
            EMPTY_SIDE_VARIANCE
        } else {
            (sum / count as f64).max(EMPTY_SIDE_VARIANCE)
        }
    };
    let sigma_l2 = side(left_sum, left_n);
    let sigma_r2 = side(right_sum, right_n);
    let (sl, sr) = (sigma_l2.sqrt(), sigma_r2.sqrt());

    let mean_abs = abs_sum / n;
    let r_hat = mean_abs * mean_abs / (sq_sum / n);
    // (g^3 + 1)(g + 1) / (g^2 + 1)^2 with g = sl / sr, written symmetrically
    let skew = (sl * sl * sl + sr * sr * sr) * (sl + sr) / ((sigma_l2 + sigma_r2) * (sigma_l2 + sigma_r2));
    let nu = invert_rho(1.0 / (r_hat * skew));

    let mut params = AggdParams {
        nu,
        sigma_l2,
        sigma_r2,
        eta: 0.0,
    };
    let (bl, br) = params.betas();
    params.eta = (bl - br) * (ln_gamma(2.0 / nu) - ln_gamma(1.0 / nu)).exp();
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rho_at_gaussian_shape() {
        assert!((rho(2.0) - PI / 2.0).abs() < 1e-6);
        // Laplacian: G(1) G(3) / G(2)^2 = 2
        assert!((rho(1.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn table_spans_grid() {
        let t = table();
        assert_eq!(t.shapes.len(), 9801);
        assert_eq!(t.shapes[0], 0.2);
        assert_eq!(*t.shapes.last().unwrap(), 10.0);
        assert!(t.rho.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_ggd(&[1.0; 99]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_ggd(&[0.0; 500]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_aggd(&[0.0; 500]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn one_sided_aggd_stays_finite() {
        let xs: Vec<f64> = (1..=200).map(|k| k as f64 / 100.0).collect();
        let p = fit_aggd(&xs).unwrap();
        assert_eq!(p.sigma_l2, EMPTY_SIDE_VARIANCE);
        assert!(p.eta.is_finite() && p.eta < 0.0);
    }
}
