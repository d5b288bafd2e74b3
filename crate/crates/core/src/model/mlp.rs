//! One-hidden-layer perceptron: logistic hidden units, linear output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Inputs and scalar targets for supervised training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Parameters are stored flat as `[W1 (hidden x inputs, row-major), b1, w2, b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    inputs: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Mlp {
            inputs,
            hidden,
            params: vec![0.0; Self::param_count(inputs, hidden)],
        }
    }

    /// Uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per layer.
    pub fn random(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(inputs, hidden);
        let b1 = 1.0 / (inputs as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        let first = hidden * inputs + hidden;
        for (k, p) in net.params.iter_mut().enumerate() {
            let bound = if k < first { b1 } else { b2 };
            *p = rng.random_range(-bound..=bound);
        }
        net
    }

    pub fn from_parts(inputs: usize, hidden: usize, w1: &[f64], b1: &[f64], w2: &[f64], b2: f64) -> Result<Self> {
        if w1.len() != inputs * hidden || b1.len() != hidden || w2.len() != hidden {
            return Err(Error::invalid(format!(
                "layer sizes do not match a {inputs}-{hidden}-1 network"
            )));
        }
        let mut params = Vec::with_capacity(Self::param_count(inputs, hidden));
        params.extend_from_slice(w1);
        params.extend_from_slice(b1);
        params.extend_from_slice(w2);
        params.push(b2);
        Ok(Mlp { inputs, hidden, params })
    }

    pub fn param_count(inputs: usize, hidden: usize) -> usize {
        hidden * inputs + 2 * hidden + 1
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.inputs, self.hidden, 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn w1(&self) -> &[f64] {
        &self.params[..self.hidden * self.inputs]
    }

    pub fn b1(&self) -> &[f64] {
        let o = self.hidden * self.inputs;
        &self.params[o..o + self.hidden]
    }

    pub fn w2(&self) -> &[f64] {
        let o = self.hidden * self.inputs + self.hidden;
        &self.params[o..o + self.hidden]
    }

    pub fn b2(&self) -> f64 {
        *self.params.last().expect("nonempty")
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs {
            return Err(Error::invalid(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.inputs
            )));
        }
        Ok(())
    }

    fn hidden_activations(&self, x: &[f64], out: &mut [f64]) {
        let (w1, b1) = (self.w1(), self.b1());
        for (k, h) in out.iter_mut().enumerate() {
            let row = &w1[k * self.inputs..(k + 1) * self.inputs];
            let a = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b1[k];
            *h = sigmoid(a);
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut h = vec![0.0; self.hidden];
        self.hidden_activations(x, &mut h);
        Ok(self.w2().iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + self.b2())
    }

    pub fn mse(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::invalid("empty dataset"));
        }
        let mut acc = 0.0;
        for (x, t) in data.inputs.iter().zip(&data.targets) {
            let e = self.forward(x)? - t;
            acc += e * e;
        }
        Ok(acc / data.len() as f64)
    }

    /// Exact gradient of `(1/n) sum (y - t)^2` in the flat parameter layout.
    pub fn gradient(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::invalid("gradient of an empty batch"));
        }
        let (ni, nh) = (self.inputs, self.hidden);
        let o_b1 = nh * ni;
        let o_w2 = o_b1 + nh;
        let o_b2 = o_w2 + nh;
        let mut grad = vec![0.0; self.params.len()];
        let mut h = vec![0.0; nh];
        let scale = 2.0 / data.len() as f64;
        let w2 = self.w2().to_vec();

        for (x, t) in data.inputs.iter().zip(&data.targets) {
            self.check_input(x)?;
            self.hidden_activations(x, &mut h);
            let y = w2.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + self.b2();
            let delta = scale * (y - t);
            grad[o_b2] += delta;
            for k in 0..nh {
                grad[o_w2 + k] += delta * h[k];
                let dk = delta * w2[k] * h[k] * (1.0 - h[k]);
                grad[o_b1 + k] += dk;
                let row = &mut grad[k * ni..(k + 1) * ni];
                for (g, v) in row.iter_mut().zip(x) {
                    *g += dk * v;
                }
            }
        }
        Ok(grad)
    }
}
