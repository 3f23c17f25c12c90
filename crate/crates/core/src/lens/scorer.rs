use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{Activation, Dense};
use super::representation::BLOCKS;
use crate::error::{Error, Result};

/// Feedforward network mapping a representation to one real score. Every
/// layer but the last is followed by the activation (and dropout while
/// training); the last layer is linear with a single output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorer {
    pub layers: Vec<Dense>,
    pub activation: Activation,
    #[serde(default)]
    pub dropout: f64,
}

/// Intermediate values kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct ScorerTrace {
    /// inputs[i] is the input of layer i; the last entry is unused.
    inputs: Vec<Vec<f64>>,
    /// Post-activation outputs before dropout, one per hidden layer.
    activated: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers, one per hidden layer.
    masks: Vec<Vec<f64>>,
}

impl Scorer {
    /// Two hidden tanh layers of width `2 * dim` over a `6 * dim` input.
    pub fn new<R: Rng>(dim: usize, dropout: f64, rng: &mut R) -> Self {
        let hidden = 2 * dim;
        let layers = vec![
            Dense::glorot(BLOCKS * dim, hidden, rng),
            Dense::glorot(hidden, hidden, rng),
            Dense::glorot(hidden, 1, rng),
        ];
        Scorer { layers, activation: Activation::Tanh, dropout }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let first = self.layers.first().ok_or_else(|| Error::parse(None, "scorer has no layers"))?;
        if first.inputs() != BLOCKS * dim {
            return Err(Error::DimensionMismatch { expected: BLOCKS * dim, found: first.inputs() });
        }
        for pair in self.layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::DimensionMismatch { expected: pair[0].outputs(), found: pair[1].inputs() });
            }
        }
        let last = self.layers.last().unwrap().outputs();
        if last != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: last });
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Inference: dropout disabled.
    pub fn forward(&self, input: &[f64]) -> f64 {
        let last = self.layers.len() - 1;
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer.forward(&x);
            if i < last {
                x.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        x[0]
    }

    /// Training forward pass. With `rng` present, hidden units are dropped
    /// with probability `self.dropout` and survivors rescaled.
    pub(crate) fn forward_traced<R: Rng>(&self, input: &[f64], mut rng: Option<&mut R>) -> (f64, ScorerTrace) {
        let last = self.layers.len() - 1;
        let mut trace = ScorerTrace { inputs: Vec::with_capacity(self.layers.len()), activated: vec![], masks: vec![] };
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward(&x);
            trace.inputs.push(x);
            if i < last {
                y.iter_mut().for_each(|v| *v = self.activation.apply(*v));
                let mask: Vec<f64> = match rng.as_deref_mut() {
                    Some(rng) if self.dropout > 0.0 => {
                        let keep = 1.0 - self.dropout;
                        (0..y.len()).map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect()
                    }
                    _ => vec![1.0; y.len()],
                };
                trace.activated.push(y.clone());
                y.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                trace.masks.push(mask);
            }
            x = y;
        }
        (x[0], trace)
    }

    /// Accumulates parameter gradients for upstream gradient `dz` and returns dL/dinput.
    pub(crate) fn backward(&self, trace: &ScorerTrace, dz: f64, grads: &mut [Dense]) -> Vec<f64> {
        let mut upstream = vec![dz];
        for i in (0..self.layers.len()).rev() {
            if i < self.layers.len() - 1 {
                let act = &trace.activated[i];
                let mask = &trace.masks[i];
                for ((g, &a), &m) in upstream.iter_mut().zip(act).zip(mask) {
                    *g *= m * self.activation.derivative_from_output(a);
                }
            }
            upstream = self.layers[i].backward(&trace.inputs[i], &upstream, &mut grads[i]);
        }
        upstream
    }

    pub fn zero_grads(&self) -> Vec<Dense> {
        self.layers.iter().map(Dense::zeros_like).collect()
    }
}
