//! Mini-batch training of [`LensModel`] on the reference-adaptive loss.
//!
//! Gradients are computed by hand: scorer backpropagation, then through the
//! representation blocks into the encoded vectors, then into the feature-hash
//! projection. Top-k selection is treated as constant within a step, so only
//! the selected reference scores receive gradient.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{Encoder, EncoderConfig};
use super::loss::{top_k_indices, LossConfig};
use super::model::{LensModel, TrainingMeta};
use super::nn::{AdamConfig, AdamSlot, Dense};
use super::representation::{backprop_representation, build_representation};
use crate::dataset::SimplificationInstance;
use crate::error::{Error, Result};

/// One output with its normalized human rating (z-score units).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub instance: SimplificationInstance,
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub encoder: EncoderConfig,
    pub k: LossConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub encoder_lr: f64,
    pub scorer_lr: f64,
    pub dropout: f64,
    /// Epochs at the start during which the encoder projection is not updated.
    pub freeze_encoder_epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            encoder: EncoderConfig::default(),
            k: LossConfig::TopK(3),
            epochs: 20,
            batch_size: 8,
            encoder_lr: 3e-5,
            scorer_lr: 1e-5,
            dropout: 0.15,
            freeze_encoder_epochs: 1,
            seed: 42,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch size must be positive".into()));
        }
        if !(self.encoder_lr >= 0.0 && self.scorer_lr > 0.0) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Checkpoint with the lowest validation loss.
    pub model: LensModel,
    pub initial_val_loss: f64,
    pub history: Vec<EpochRecord>,
}

/// Gradients mirroring the trainable parameters of a model.
#[derive(Debug, Clone)]
pub struct ModelGradients {
    pub encoder: Option<Dense>,
    pub scorer: Vec<Dense>,
}

impl ModelGradients {
    fn zeros(model: &LensModel) -> Self {
        let encoder = match &model.encoder {
            Encoder::FeatureHash(e) => Some(e.projection().zeros_like()),
            Encoder::External(_) => None,
        };
        ModelGradients { encoder, scorer: model.scorer.zero_grads() }
    }

    /// Same order as [`LensModel::parameters_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        if let Some(e) = &self.encoder {
            out.extend(e.params());
        }
        for layer in &self.scorer {
            out.extend(layer.params());
        }
        out
    }
}

/// Raw features (feature-hash) or final vectors (external) per distinct text.
struct FeatureCache {
    entries: HashMap<String, Vec<f64>>,
}

impl FeatureCache {
    fn build<'a>(encoder: &Encoder, texts: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut entries = HashMap::new();
        for text in texts {
            if entries.contains_key(text) {
                continue;
            }
            let v = match encoder {
                Encoder::FeatureHash(e) => e.features(text),
                Encoder::External(e) => e.lookup(text)?.to_vec(),
            };
            entries.insert(text.to_string(), v);
        }
        Ok(FeatureCache { entries })
    }

    fn for_examples(encoder: &Encoder, examples: &[&[TrainingExample]]) -> Result<Self> {
        let texts = examples.iter().flat_map(|set| set.iter()).flat_map(|ex| {
            let inst = &ex.instance;
            [inst.original.as_str(), inst.output.as_str()].into_iter().chain(inst.references.iter().map(String::as_str))
        });
        FeatureCache::build(encoder, texts)
    }

    fn raw(&self, text: &str) -> &[f64] {
        &self.entries[text]
    }
}

fn encode_cached(encoder: &Encoder, cache: &FeatureCache, text: &str) -> Vec<f64> {
    match encoder {
        Encoder::FeatureHash(e) => e.project(cache.raw(text)),
        Encoder::External(_) => cache.raw(text).to_vec(),
    }
}

struct Step<'a> {
    model: &'a LensModel,
    cache: &'a FeatureCache,
    k: LossConfig,
    /// Multiplies each example's loss contribution (1/batch for a batch mean).
    scale: f64,
    train_encoder: bool,
}

/// Forward and backward pass for one example. Returns the unscaled example
/// loss.
fn example_step<R: Rng>(
    step: &Step<'_>,
    example: &TrainingExample,
    mut rng: Option<&mut R>,
    grads: &mut ModelGradients,
) -> Result<f64> {
    let Step { model, cache, k, scale, train_encoder } = *step;
    let inst = &example.instance;
    let k = k.resolve(inst.references.len())?;
    let enc = &model.encoder;
    let c = encode_cached(enc, cache, &inst.original);
    let s = encode_cached(enc, cache, &inst.output);
    let refs: Vec<Vec<f64>> = inst.references.iter().map(|r| encode_cached(enc, cache, r)).collect();

    let mut scores = Vec::with_capacity(refs.len());
    let mut traces = Vec::with_capacity(refs.len());
    for r in &refs {
        let h = build_representation(&c, &s, r)?;
        let (z, trace) = model.scorer.forward_traced(h.values(), rng.as_deref_mut());
        scores.push(z);
        traces.push(trace);
    }
    let selected = top_k_indices(&scores, k);
    let loss = selected.iter().map(|&i| (example.h - scores[i]).powi(2)).sum::<f64>() / k as f64;

    let d = model.dim();
    let mut dc = vec![0.0; d];
    let mut ds = vec![0.0; d];
    let mut dr = vec![vec![0.0; d]; refs.len()];
    for &i in &selected {
        let dz = scale * 2.0 * (scores[i] - example.h) / k as f64;
        let dh = model.scorer.backward(&traces[i], dz, &mut grads.scorer);
        if train_encoder {
            backprop_representation(&c, &s, &refs[i], &dh, &mut dc, &mut ds, &mut dr[i]);
        }
    }
    if train_encoder {
        if let (Encoder::FeatureHash(e), Some(g)) = (enc, grads.encoder.as_mut()) {
            e.projection().accumulate(cache.raw(&inst.original), &dc, g);
            e.projection().accumulate(cache.raw(&inst.output), &ds, g);
            for &i in &selected {
                e.projection().accumulate(cache.raw(&inst.references[i]), &dr[i], g);
            }
        }
    }
    Ok(loss)
}

/// Batch-mean adaptive loss and its exact gradient, dropout disabled.
pub fn loss_and_gradients(
    model: &LensModel,
    batch: &[TrainingExample],
    k: LossConfig,
) -> Result<(f64, ModelGradients)> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let cache = FeatureCache::for_examples(&model.encoder, &[batch])?;
    let mut grads = ModelGradients::zeros(model);
    let scale = 1.0 / batch.len() as f64;
    let step = Step { model, cache: &cache, k, scale, train_encoder: true };
    let mut total = 0.0;
    for ex in batch {
        total += example_step::<ChaCha8Rng>(&step, ex, None, &mut grads)?;
    }
    Ok((total * scale, grads))
}

/// Batch-mean adaptive loss under inference scoring.
pub fn evaluate_loss(model: &LensModel, examples: &[TrainingExample], k: LossConfig) -> Result<f64> {
    let cache = FeatureCache::for_examples(&model.encoder, &[examples])?;
    mean_loss(model, &cache, examples, k)
}

fn mean_loss(model: &LensModel, cache: &FeatureCache, examples: &[TrainingExample], k: LossConfig) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::InvalidConfig("no examples to evaluate".into()));
    }
    let mut total = 0.0;
    for ex in examples {
        let inst = &ex.instance;
        let c = encode_cached(&model.encoder, cache, &inst.original);
        let s = encode_cached(&model.encoder, cache, &inst.output);
        let scores = inst
            .references
            .iter()
            .map(|r| {
                let r = encode_cached(&model.encoder, cache, r);
                Ok(model.scorer.forward(build_representation(&c, &s, &r)?.values()))
            })
            .collect::<Result<Vec<_>>>()?;
        total += super::loss::adaptive_loss(&scores, ex.h, k)?;
    }
    Ok(total / examples.len() as f64)
}

struct Optimizer {
    encoder: Option<(Vec<AdamSlot>, i32)>,
    scorer: (Vec<AdamSlot>, i32),
}

impl Optimizer {
    fn new(model: &LensModel) -> Self {
        let slots = |layer: &Dense| layer.params().iter().map(|p| AdamSlot::new(p.len())).collect::<Vec<_>>();
        let encoder = match &model.encoder {
            Encoder::FeatureHash(e) => Some((slots(e.projection()), 0)),
            Encoder::External(_) => None,
        };
        let scorer = (model.scorer.layers.iter().flat_map(slots).collect(), 0);
        Optimizer { encoder, scorer }
    }

    fn step(&mut self, model: &mut LensModel, grads: &ModelGradients, cfg: &TrainConfig, train_encoder: bool) {
        let (slots, t) = &mut self.scorer;
        *t += 1;
        let params = model.scorer.layers.iter_mut().flat_map(|l| l.params_mut());
        let grad_slices = grads.scorer.iter().flat_map(|l| l.params());
        for ((p, g), slot) in params.zip(grad_slices).zip(slots.iter_mut()) {
            slot.step(p, g, cfg.scorer_lr, *t, cfg.adam);
        }
        if !train_encoder {
            return;
        }
        if let (Some((slots, t)), Encoder::FeatureHash(e), Some(g)) =
            (&mut self.encoder, &mut model.encoder, grads.encoder.as_ref())
        {
            *t += 1;
            for ((p, g), slot) in e.projection.params_mut().into_iter().zip(g.params()).zip(slots.iter_mut()) {
                slot.step(p, g, cfg.encoder_lr, *t, cfg.adam);
            }
        }
    }
}

pub fn train(train_set: &[TrainingExample], val_set: &[TrainingExample], config: &TrainConfig) -> Result<LensModel> {
    train_with_history(train_set, val_set, config).map(|o| o.model)
}

/// Trains from a seeded initialisation and returns the best-validation checkpoint.
pub fn train_with_history(
    train_set: &[TrainingExample],
    val_set: &[TrainingExample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidConfig("training and validation sets must be non-empty".into()));
    }
    for ex in train_set.iter().chain(val_set) {
        config.k.resolve(ex.instance.references.len()).map_err(|e| match e {
            Error::TopKOutOfRange { .. } | Error::MissingReferences => Error::record(
                &ex.instance.id,
                "references",
                format!("{} references cannot satisfy k = {}", ex.instance.references.len(), config.k),
            ),
            other => other,
        })?;
    }

    let mut model = LensModel::new(&config.encoder, config.dropout, config.seed)?;
    model.meta.k = config.k;
    let cache = FeatureCache::for_examples(&model.encoder, &[train_set, val_set])?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut optimizer = Optimizer::new(&model);

    let initial_val_loss = mean_loss(&model, &cache, val_set, config.k)?;
    let mut best: Option<(f64, usize, LensModel)> = None;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let train_encoder = model.encoder.is_trainable() && epoch > config.freeze_encoder_epochs;
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut grads = ModelGradients::zeros(&model);
            let scale = 1.0 / chunk.len() as f64;
            let step = Step { model: &model, cache: &cache, k: config.k, scale, train_encoder };
            let mut batch_loss = 0.0;
            for &i in chunk {
                batch_loss += example_step(&step, &train_set[i], Some(&mut rng), &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, batch: b + 1 });
            }
            epoch_loss += batch_loss;
            optimizer.step(&mut model, &grads, config, train_encoder);
        }
        let val_loss = mean_loss(&model, &cache, val_set, config.k)?;
        if !val_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, batch: order.len().div_ceil(config.batch_size) });
        }
        history.push(EpochRecord { epoch, train_loss: epoch_loss / train_set.len() as f64, val_loss });
        if best.as_ref().is_none_or(|(loss, _, _)| val_loss < *loss) {
            best = Some((val_loss, epoch, model.clone()));
        }
    }

    let (best_loss, best_epoch, mut model) = best.expect("at least one epoch");
    model.meta = TrainingMeta {
        k: config.k,
        seed: config.seed,
        epochs: config.epochs,
        best_val_loss: Some(best_loss),
        best_epoch: Some(best_epoch),
    };
    Ok(TrainOutcome { model, initial_val_loss, history })
}
