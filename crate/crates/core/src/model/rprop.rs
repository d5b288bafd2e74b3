//! Resilient backpropagation, iRPROP- variant.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpropConfig {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub delta0: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for RpropConfig {
    fn default() -> Self {
        RpropConfig {
            eta_plus: 1.2,
            eta_minus: 0.5,
            delta0: 0.07,
            delta_min: 1e-6,
            delta_max: 50.0,
        }
    }
}

impl RpropConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.eta_plus > 1.0
            && self.eta_minus > 0.0
            && self.eta_minus < 1.0
            && self.delta_min > 0.0
            && self.delta_min <= self.delta0
            && self.delta0 <= self.delta_max;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::invalid(format!("inconsistent RPROP settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpropState {
    pub cfg: RpropConfig,
    pub deltas: Vec<f64>,
    /// Sign of the gradient used in the previous step (`0` after a reversal).
    pub prev_sign: Vec<i8>,
}

#[inline]
fn sign(g: f64) -> i8 {
    if g > 0.0 {
        1
    } else if g < 0.0 {
        -1
    } else {
        0
    }
}

impl RpropState {
    pub fn new(n: usize, cfg: RpropConfig) -> Self {
        RpropState {
            cfg,
            deltas: vec![cfg.delta0; n],
            prev_sign: vec![0; n],
        }
    }

    /// Updates `params` in place from `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        debug_assert_eq!(params.len(), self.deltas.len());
        let c = self.cfg;
        for k in 0..params.len() {
            let s = sign(grads[k]);
            match self.prev_sign[k] * s {
                1 => {
                    self.deltas[k] = (self.deltas[k] * c.eta_plus).min(c.delta_max);
                    params[k] -= s as f64 * self.deltas[k];
                    self.prev_sign[k] = s;
                }
                -1 => {
                    self.deltas[k] = (self.deltas[k] * c.eta_minus).max(c.delta_min);
                    self.prev_sign[k] = 0;
                }
                _ => {
                    params[k] -= s as f64 * self.deltas[k];
                    self.prev_sign[k] = s;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_sign_grows_step() {
        let mut st = RpropState::new(1, RpropConfig::default());
        let mut w = [1.0];
        st.step(&mut w, &[0.3]);
        assert_eq!(w[0], 1.0 - 0.07);
        st.step(&mut w, &[2.0]);
        let second = (1.0 - 0.07) - w[0];
        assert!((second - 1.2 * 0.07).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_weight_and_step() {
        let mut st = RpropState::new(2, RpropConfig::default());
        let mut w = [0.5, -0.5];
        st.step(&mut w, &[0.0, 1.0]);
        assert_eq!(w[0], 0.5);
        assert_eq!(st.deltas[0], 0.07);
    }

    #[test]
    fn sign_flip_halves_and_holds() {
        let mut st = RpropState::new(1, RpropConfig::default());
        let mut w = [0.0];
        st.step(&mut w, &[1.0]);
        let before = w[0];
        st.step(&mut w, &[-1.0]);
        assert_eq!(w[0], before);
        assert_eq!(st.deltas[0], 0.035);
        assert_eq!(st.prev_sign[0], 0);
        // next step moves by the halved delta
        st.step(&mut w, &[-1.0]);
        assert_eq!(w[0], before + 0.035);
    }

    #[test]
    fn deltas_stay_in_bounds() {
        let cfg = RpropConfig::default();
        let mut st = RpropState::new(1, cfg);
        let mut w = [0.0];
        for _ in 0..200 {
            st.step(&mut w, &[1.0]);
        }
        assert_eq!(st.deltas[0], cfg.delta_max);
        for k in 0..200 {
            st.step(&mut w, &[if k % 2 == 0 { 1.0 } else { -1.0 }]);
            assert!(st.deltas[0] >= cfg.delta_min && st.deltas[0] <= cfg.delta_max);
        }
    }
}
