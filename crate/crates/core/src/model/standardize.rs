use crate::error::{Error, Result};

/// Per-feature z-scoring fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features whose training variance was zero; their std is set to 1.
    pub flagged: Vec<bool>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::invalid("cannot standardize zero rows"))?;
        let d = first.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("rows have different lengths"));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(*r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(*r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut flagged = vec![false; d];
        let std = var
            .iter()
            .zip(flagged.iter_mut())
            .map(|(s, f)| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    *f = true;
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std, flagged })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "expected {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

/// Scalar z-scoring of the regression target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetScaler {
    pub mean: f64,
    pub std: f64,
}

impl TargetScaler {
    pub fn fit(targets: &[f64]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::invalid("no targets"));
        }
        let var = super::train::variance(targets);
        if !(var > 0.0) {
            return Err(Error::degenerate("targets have zero variance"));
        }
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        Ok(TargetScaler { mean, std: var.sqrt() })
    }

    pub fn standardize(&self, t: f64) -> f64 {
        (t - self.mean) / self.std
    }

    pub fn destandardize(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_feature_is_flagged() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = Standardizer::fit(&refs).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        assert_eq!(s.flagged, vec![false, true]);
        assert_eq!(s.apply(&[3.0, 6.0]).unwrap(), vec![1.0, 1.0]);
        assert!(s.apply(&[1.0]).is_err());
    }

    #[test]
    fn target_round_trip() {
        let sc = TargetScaler::fit(&[-10.0, 20.0, 60.0, 5.5]).unwrap();
        for t in [-10.0, 0.0, 33.3, 100.0] {
            assert!((sc.destandardize(sc.standardize(t)) - t).abs() < 1e-12);
        }
        assert!(TargetScaler::fit(&[1.0, 1.0]).is_err());
    }
}
