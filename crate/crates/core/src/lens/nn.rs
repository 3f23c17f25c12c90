//! Dense layers with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully connected layer `y = W x + b`; weights are stored row-major with
/// one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseRepr", into = "DenseRepr")]
pub struct Dense {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DenseRepr {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl TryFrom<DenseRepr> for Dense {
    type Error = Error;

    fn try_from(repr: DenseRepr) -> Result<Self> {
        let outputs = repr.w.len();
        let inputs = repr.w.first().map_or(0, Vec::len);
        if outputs == 0 || inputs == 0 {
            return Err(Error::parse(None, "layer has an empty weight matrix"));
        }
        if repr.w.iter().any(|row| row.len() != inputs) {
            return Err(Error::parse(None, "layer weight rows have unequal lengths"));
        }
        if repr.b.len() != outputs {
            return Err(Error::DimensionMismatch { expected: outputs, found: repr.b.len() });
        }
        Ok(Dense { inputs, outputs, weights: repr.w.concat(), bias: repr.b })
    }
}

impl From<Dense> for DenseRepr {
    fn from(d: Dense) -> Self {
        DenseRepr { w: d.weights.chunks(d.inputs).map(<[f64]>::to_vec).collect(), b: d.bias }
    }
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
        Dense { inputs, outputs, weights, bias: vec![0.0; outputs] }
    }

    pub fn from_parts(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        Dense::try_from(DenseRepr { w: weights, b: bias })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weight(&self, out: usize, input: usize) -> f64 {
        self.weights[out * self.inputs + input]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weights
            .chunks(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// Accumulates parameter gradients into `grad` and returns dL/dx.
    pub fn backward(&self, x: &[f64], grad_out: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut grad_in = vec![0.0; self.inputs];
        self.accumulate(x, grad_out, grad);
        for (row, &g) in self.weights.chunks(self.inputs).zip(grad_out) {
            if g == 0.0 {
                continue;
            }
            for (gi, w) in grad_in.iter_mut().zip(row) {
                *gi += g * w;
            }
        }
        grad_in
    }

    /// Parameter gradients only, for layers whose input needs no gradient.
    pub fn accumulate(&self, x: &[f64], grad_out: &[f64], grad: &mut Dense) {
        for ((grow, gb), &g) in grad.weights.chunks_mut(self.inputs).zip(&mut grad.bias).zip(grad_out) {
            if g == 0.0 {
                continue;
            }
            *gb += g;
            for (gw, v) in grow.iter_mut().zip(x) {
                *gw += g * v;
            }
        }
    }

    pub fn zeros_like(&self) -> Dense {
        Dense::zeros(self.inputs, self.outputs)
    }

    /// Weights then bias, as two mutable slices.
    pub fn params_mut(&mut self) -> [&mut [f64]; 2] {
        [&mut self.weights, &mut self.bias]
    }

    pub fn params(&self) -> [&[f64]; 2] {
        [&self.weights, &self.bias]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Adam optimizer state for one parameter slice.
#[derive(Debug, Clone)]
pub(crate) struct AdamSlot {
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamSlot {
    pub(crate) fn new(len: usize) -> Self {
        AdamSlot { m: vec![0.0; len], v: vec![0.0; len] }
    }

    /// One update at step `t` (1-based).
    pub(crate) fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, t: i32, cfg: AdamConfig) {
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_matches_hand_product() {
        let layer = Dense::from_parts(vec![vec![1.0, 2.0], vec![-1.0, 0.5]], vec![0.5, 0.0]).unwrap();
        assert_eq!(layer.forward(&[3.0, 4.0]), vec![11.5, -1.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let layer = Dense::glorot(3, 2, &mut rng);
        let x = [0.3, -1.2, 0.7];
        let upstream = [0.4, -0.9];
        let loss = |l: &Dense, x: &[f64]| l.forward(x).iter().zip(&upstream).map(|(y, u)| y * u).sum::<f64>();
        let mut grad = layer.zeros_like();
        let gx = layer.backward(&x, &upstream, &mut grad);
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            let fd = (loss(&layer, &xp) - loss(&layer, &xm)) / 2e-6;
            assert!((fd - gx[i]).abs() < 1e-8);
        }
        assert_eq!(grad.bias(), &upstream);
        assert!((grad.weight(1, 2) - upstream[1] * x[2]).abs() < 1e-15);
    }

    #[test]
    fn json_shape_is_nested_rows() {
        let layer = Dense::from_parts(vec![vec![1.0, 2.0]], vec![3.0]).unwrap();
        let json = serde_json::to_string(&layer).unwrap();
        assert_eq!(json, r#"{"w":[[1.0,2.0]],"b":[3.0]}"#);
        let back: Dense = serde_json::from_str(&json).unwrap();
        assert_eq!(back, layer);
        assert!(serde_json::from_str::<Dense>(r#"{"w":[[1.0],[2.0,3.0]],"b":[0,0]}"#).is_err());
    }

    #[test]
    fn adam_moves_against_gradient() {
        let mut slot = AdamSlot::new(2);
        let mut p = [1.0, -1.0];
        slot.step(&mut p, &[0.5, -0.5], 0.1, 1, AdamConfig::default());
        // first bias-corrected step has magnitude ~lr
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
    }
}
