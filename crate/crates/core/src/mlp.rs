//! Dense ReLU network with a softmax head, trained by backpropagation and Adam.
//!
//! Mini-batch gradients are computed over fixed 64-sample chunks and summed in
//! chunk order, so training is bit-for-bit reproducible for a given seed
//! regardless of how many threads evaluate the chunks.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::analysis::{correctness_rule, IntactnessTruth};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::par::{map_chunks, Execution};
use crate::structure::{class_table, ClassTable};

pub const INPUT_DIM: usize = FeatureVector::LEN;
pub const MODEL_FORMAT_ID: &str = "entstruct-model/1";
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const DEFAULT_BATCH_SIZE: usize = 256;
const GRAD_CHUNK: usize = 64;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Gradients below this square to a subnormal and are treated as zero.
const TINY_GRAD: f64 = 1e-150;

/// One labelled input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: [f64; INPUT_DIM],
    pub label: usize,
}

impl Sample {
    pub fn new(features: FeatureVector, label: usize) -> Self {
        Self {
            x: features.to_array(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs x inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// `out[o] = b[o] + Σ_i W[o][i] x[i]`.
    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, dst) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *dst = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: String,
    pub selected_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
    /// Qubit count whose class table the output layer indexes.
    n: Option<usize>,
    pub meta: TrainingMeta,
}

impl MlpModel {
    /// He-normal weights (variance `2 / fan_in`) and zero biases.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("finite std");
                Layer {
                    inputs,
                    outputs,
                    weights: (0..inputs * outputs).map(|_| normal.sample(&mut rng)).collect(),
                    bias: vec![0.0; outputs],
                }
            })
            .collect();
        Ok(Self {
            layers,
            n: None,
            meta: TrainingMeta {
                seed,
                ..TrainingMeta::default()
            },
        })
    }

    /// All-zero parameters; every input maps to the uniform distribution.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        let mut m = Self::init(layer_dims, 0)?;
        for l in &mut m.layers {
            l.weights.fill(0.0);
        }
        Ok(m)
    }

    /// Ties the output layer to the class table of `n`.
    pub fn for_qubits(mut self, n: usize) -> Result<Self> {
        let classes = class_table(n)?.len();
        if self.output_dim() != classes {
            return Err(Error::Compatibility(format!(
                "model has {} outputs, n = {n} has {classes} classes",
                self.output_dim()
            )));
        }
        self.n = Some(n);
        Ok(self)
    }

    pub fn qubits(&self) -> Option<usize> {
        self.n
    }

    pub fn class_table(&self) -> Result<ClassTable> {
        let n = self
            .n
            .ok_or_else(|| Error::Compatibility("model is not tied to a qubit count".into()))?;
        class_table(n)
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].inputs];
        dims.extend(self.layers.iter().map(|l| l.outputs));
        dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.outputs];
            layer.affine(&cur, &mut next);
            if i != last {
                relu_in_place(&mut next);
            }
            cur = next;
        }
        cur
    }

    /// Class probabilities for a raw input vector.
    pub fn forward_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.layers[0].inputs {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} inputs, got {}",
                self.layers[0].inputs,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericIntegrity(format!("non-finite input {x:?}")));
        }
        let mut out = self.logits(x);
        softmax_in_place(&mut out);
        Ok(out)
    }

    pub fn forward(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        self.forward_raw(&x.to_array())
    }

    /// Argmax class index (lowest index on ties).
    pub fn predict(&self, x: &FeatureVector) -> Result<usize> {
        self.forward(x).map(|p| argmax(&p))
    }

    fn predict_unchecked(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// JSON header line, then per layer a `layer <i> weights <out>x<in>` line
    /// followed by one comma-separated row per output unit, and a
    /// `layer <i> bias <out>` line followed by the bias row.
    pub fn to_text(&self) -> Result<String> {
        let n = self
            .n
            .ok_or_else(|| Error::Compatibility("only models tied to a qubit count can be saved".into()))?;
        let dims = self.layer_dims();
        let mut activations = vec!["relu".to_string(); self.layers.len() - 1];
        activations.push("softmax".into());
        let header = ModelHeader {
            format: MODEL_FORMAT_ID.into(),
            layer_dims: dims,
            activations,
            n,
            class_table_sha256: class_table(n)?.digest(),
            training: self.meta.clone(),
        };
        let mut out = serde_json::to_string(&header).map_err(|e| Error::parse(1, e.to_string()))?;
        out.push('\n');
        let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        for (i, l) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "layer {i} weights {}x{}", l.outputs, l.inputs);
            for row in l.weights.chunks(l.inputs) {
                let _ = writeln!(out, "{}", join(row));
            }
            let _ = writeln!(out, "layer {i} bias {}", l.outputs);
            let _ = writeln!(out, "{}", join(&l.bias));
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "empty model file"))?;
        let header: ModelHeader =
            serde_json::from_str(first).map_err(|e| Error::parse(1, format!("bad header: {e}")))?;
        if header.format != MODEL_FORMAT_ID {
            return Err(Error::Compatibility(format!(
                "unknown model format {:?}",
                header.format
            )));
        }
        validate_dims(&header.layer_dims)?;
        let table = class_table(header.n)?;
        if table.digest() != header.class_table_sha256 {
            return Err(Error::Compatibility(format!(
                "class table hash does not match n = {} table of this build",
                header.n
            )));
        }
        let mut next = |expect: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of file, wanted {expect}")))
        };
        let mut layers = Vec::new();
        for (i, w) in header.layer_dims.windows(2).enumerate() {
            let (inputs, outputs) = (w[0], w[1]);
            let (ln, tag) = next("weights tag")?;
            if tag.trim() != format!("layer {i} weights {outputs}x{inputs}") {
                return Err(Error::parse(ln, format!("expected weights tag for layer {i}")));
            }
            let mut weights = Vec::with_capacity(inputs * outputs);
            for _ in 0..outputs {
                let (ln, row) = next("weight row")?;
                weights.extend(parse_row(row, inputs, ln)?);
            }
            let (ln, tag) = next("bias tag")?;
            if tag.trim() != format!("layer {i} bias {outputs}") {
                return Err(Error::parse(ln, format!("expected bias tag for layer {i}")));
            }
            let (ln, row) = next("bias row")?;
            let bias = parse_row(row, outputs, ln)?;
            layers.push(Layer {
                inputs,
                outputs,
                weights,
                bias,
            });
        }
        let model = Self {
            layers,
            n: None,
            meta: header.training,
        };
        model.for_qubits(header.n)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    format: String,
    layer_dims: Vec<usize>,
    activations: Vec<String>,
    n: usize,
    class_table_sha256: String,
    training: TrainingMeta,
}

fn parse_row(row: &str, len: usize, line: usize) -> Result<Vec<f64>> {
    let vals = row
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(line, format!("bad number {v:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != len {
        return Err(Error::parse(
            line,
            format!("expected {len} values, found {}", vals.len()),
        ));
    }
    Ok(vals)
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Parameter(format!(
            "layer dims need at least input and output, all positive: {dims:?}"
        )));
    }
    Ok(())
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Per-layer parameter gradients, same layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    fn scale(&mut self, k: f64) {
        self.weights
            .iter_mut()
            .chain(self.bias.iter_mut())
            .flatten()
            .for_each(|x| *x *= k);
    }

    /// Flattened in layer order, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend(w);
            out.extend(b);
        }
        out
    }
}

/// Summed cross-entropy, correct-prediction count and unnormalised gradients
/// for one chunk.
fn chunk_backprop(model: &MlpModel, chunk: &[Sample]) -> (f64, usize, Gradients) {
    let batch = chunk.len();
    let layers = &model.layers;
    let last = layers.len() - 1;

    // acts[l] holds the (batch x dim) input of layer l; the final entry holds probabilities.
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
    acts.push(chunk.iter().flat_map(|s| s.x).collect());
    for (li, layer) in layers.iter().enumerate() {
        let input = &acts[li];
        let mut out = vec![0.0; batch * layer.outputs];
        for b in 0..batch {
            let x = &input[b * layer.inputs..(b + 1) * layer.inputs];
            let y = &mut out[b * layer.outputs..(b + 1) * layer.outputs];
            layer.affine(x, y);
            if li != last {
                relu_in_place(y);
            }
        }
        acts.push(out);
    }

    let classes = model.output_dim();
    let mut loss = 0.0;
    let mut correct = 0;
    let mut delta = acts.pop().expect("output activations");
    for (b, s) in chunk.iter().enumerate() {
        let row = &mut delta[b * classes..(b + 1) * classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        loss += log_sum - row[s.label];
        if argmax(row) == s.label {
            correct += 1;
        }
        for z in row.iter_mut() {
            let p = (*z - log_sum).exp();
            *z = if p < f64::MIN_POSITIVE { 0.0 } else { p };
        }
        row[s.label] -= 1.0;
    }

    let mut grads = Gradients::zeros_like(model);
    for li in (0..layers.len()).rev() {
        let layer = &layers[li];
        let input = &acts[li];
        let (gw, gb) = (&mut grads.weights[li], &mut grads.bias[li]);
        for b in 0..batch {
            let x = &input[b * layer.inputs..(b + 1) * layer.inputs];
            let d = &delta[b * layer.outputs..(b + 1) * layer.outputs];
            for (o, &dv) in d.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                gb[o] += dv;
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(x).for_each(|(g, &xv)| *g += dv * xv);
            }
        }
        if li == 0 {
            break;
        }
        let mut prev = vec![0.0; batch * layer.inputs];
        for b in 0..batch {
            let d = &delta[b * layer.outputs..(b + 1) * layer.outputs];
            let p = &mut prev[b * layer.inputs..(b + 1) * layer.inputs];
            for (o, &dv) in d.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                p.iter_mut().zip(row).for_each(|(g, &w)| *g += dv * w);
            }
            // ReLU mask from this layer's (post-activation) input.
            let a = &input[b * layer.inputs..(b + 1) * layer.inputs];
            p.iter_mut().zip(a).for_each(|(g, &av)| {
                if av <= 0.0 {
                    *g = 0.0
                }
            });
        }
        delta = prev;
    }
    (loss, correct, grads)
}

struct BatchResult {
    objective: f64,
    cross_entropy: f64,
    correct: usize,
    grads: Gradients,
}

fn batch_gradients(model: &MlpModel, batch: &[Sample], weight_decay: f64, exec: Execution) -> BatchResult {
    let parts = map_chunks(exec, batch, GRAD_CHUNK, |c| chunk_backprop(model, c));
    let mut iter = parts.into_iter();
    let (mut loss, mut correct, mut grads) = iter.next().expect("non-empty batch");
    for (l, c, g) in iter {
        loss += l;
        correct += c;
        grads.add_assign(&g);
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    let cross_entropy = loss * inv;
    let mut objective = cross_entropy;
    if weight_decay > 0.0 {
        let mut sq = 0.0;
        for (g, l) in grads.weights.iter_mut().zip(&model.layers) {
            for (gv, &w) in g.iter_mut().zip(&l.weights) {
                *gv += weight_decay * w;
                sq += w * w;
            }
        }
        objective += 0.5 * weight_decay * sq;
    }
    BatchResult {
        objective,
        cross_entropy,
        correct,
        grads,
    }
}

/// Mean cross-entropy plus `weight_decay/2 · Σ‖W‖²` (biases excluded), and
/// its gradient by backpropagation.
pub fn loss_and_gradients(model: &MlpModel, batch: &[Sample], weight_decay: f64) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Parameter("empty batch".into()));
    }
    let classes = model.output_dim();
    if let Some(s) = batch.iter().find(|s| s.label >= classes) {
        return Err(Error::Parameter(format!(
            "label {} with {classes} outputs",
            s.label
        )));
    }
    let r = batch_gradients(model, batch, weight_decay, Execution::Sequential);
    Ok((r.objective, r.grads))
}

/// Fraction of samples whose argmax equals the label.
pub fn evaluate(model: &MlpModel, samples: &[Sample]) -> Result<f64> {
    evaluate_with(model, samples, Execution::Parallel)
}

pub fn evaluate_with(model: &MlpModel, samples: &[Sample], exec: Execution) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("cannot evaluate on an empty record set".into()));
    }
    let hits: usize = map_chunks(exec, samples, 1024, |c| {
        c.iter()
            .filter(|s| model.predict_unchecked(&s.x) == s.label)
            .count()
    })
    .into_iter()
    .sum();
    Ok(hits as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    Final,
    BestValidation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionSet {
    /// The dataset's own validation split.
    RandomValidation,
    /// Noised-GHZ points from [`crate::analysis::build_sweep_validation`].
    SweepValidation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub selection: Selection,
    pub selection_set: SelectionSet,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            weight_decay: 0.0,
            seed: 0,
            selection: Selection::Final,
            selection_set: SelectionSet::RandomValidation,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Parameter("epochs and batch size must be positive".into()));
        }
        if self.weight_decay.is_nan()
            || self.weight_decay < 0.0
            || self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
        {
            return Err(Error::Parameter(
                "weight decay must be >= 0 and learning rate > 0".into(),
            ));
        }
        Ok(())
    }
}

/// How validation accuracy is scored.
#[derive(Debug, Clone, PartialEq)]
pub enum Scoring {
    ExactClass,
    /// Intactness-only scoring under [`correctness_rule`], for state families
    /// whose exact class is only partly known.
    Intactness(ClassTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub samples: Vec<Sample>,
    pub scoring: Scoring,
}

impl Validation {
    pub fn exact(samples: Vec<Sample>) -> Self {
        Self {
            samples,
            scoring: Scoring::ExactClass,
        }
    }

    /// `(mean cross-entropy, accuracy)` under this set's scoring.
    pub fn score(&self, model: &MlpModel) -> (f64, f64) {
        if self.samples.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let parts = map_chunks(Execution::Parallel, &self.samples, 512, |c| {
            let mut loss = 0.0;
            let mut hits = 0usize;
            for s in c {
                let mut p = model.logits(&s.x);
                let pred = argmax(&p);
                softmax_in_place(&mut p);
                loss -= p[s.label].max(f64::MIN_POSITIVE).ln();
                let ok = match &self.scoring {
                    Scoring::ExactClass => pred == s.label,
                    Scoring::Intactness(table) => {
                        let (truth_m, _) = table.pair(s.label).expect("label in table");
                        let (pred_m, _) = table.pair(pred).expect("prediction in table");
                        correctness_rule(table.n(), pred_m, IntactnessTruth::Exact(truth_m))
                    }
                };
                hits += ok as usize;
            }
            (loss, hits)
        });
        let (loss, hits) = parts
            .into_iter()
            .fold((0.0, 0), |(l, h), (pl, ph)| (l + pl, h + ph));
        let len = self.samples.len() as f64;
        (loss / len, hits as f64 / len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub history: Vec<EpochStats>,
}

/// History as `epoch,train_loss,train_acc,val_loss,val_acc` CSV.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for h in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            h.epoch, h.train_loss, h.train_acc, h.val_loss, h.val_acc
        );
    }
    out
}

/// Mini-batch Adam for `cfg.epochs` epochs. Training loss and accuracy are
/// running means over the epoch's batches (cross-entropy only); validation is
/// scored after every epoch.
pub fn train(
    model: MlpModel,
    data: &[Sample],
    validation: &Validation,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(model, data, validation, cfg, Execution::Parallel)
}

pub fn train_with(
    mut model: MlpModel,
    data: &[Sample],
    validation: &Validation,
    cfg: &TrainConfig,
    exec: Execution,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Parameter("no training samples".into()));
    }
    let classes = model.output_dim();
    if let Some(s) = data
        .iter()
        .chain(&validation.samples)
        .find(|s| s.label >= classes)
    {
        return Err(Error::Compatibility(format!(
            "label {} does not fit a model with {classes} outputs",
            s.label
        )));
    }
    if cfg.selection == Selection::BestValidation && validation.samples.is_empty() {
        return Err(Error::Parameter(
            "best-validation selection needs validation samples".into(),
        ));
    }

    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, MlpModel)> = None;
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| data[i]));
            let r = batch_gradients(&model, &batch, cfg.weight_decay, exec);
            if !r.objective.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    loss: r.objective,
                });
            }
            loss_sum += r.cross_entropy * batch.len() as f64;
            correct += r.correct;
            adam.step(&mut model, &r.grads, cfg.learning_rate);
        }
        let (val_loss, val_acc) = validation.score(&model);
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / data.len() as f64,
            train_acc: correct as f64 / data.len() as f64,
            val_loss,
            val_acc,
        });
        if cfg.selection == Selection::BestValidation
            && best.as_ref().is_none_or(|(acc, _, _)| val_acc > *acc)
        {
            best = Some((val_acc, epoch, model.clone()));
        }
    }

    let (mut model, selected) = match best {
        Some((_, epoch, snapshot)) => (snapshot, Some(epoch)),
        None => (model, None),
    };
    model.meta = TrainingMeta {
        epochs_run: cfg.epochs,
        seed: cfg.seed,
        weight_decay: cfg.weight_decay,
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        optimizer: format!("adam(beta1={ADAM_BETA1},beta2={ADAM_BETA2},eps={ADAM_EPS})"),
        selected_epoch: selected,
    };
    Ok(TrainOutcome { model, history })
}

struct Adam {
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    fn new(model: &MlpModel) -> Self {
        Self {
            step: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &Gradients, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                let g = if g[i].abs() < TINY_GRAD { 0.0 } else { g[i] };
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                // Keep moments out of the subnormal range; arithmetic there is
                // orders of magnitude slower.
                if m[i].abs() < f64::MIN_POSITIVE {
                    m[i] = 0.0;
                }
                if v[i] < f64::MIN_POSITIVE {
                    v[i] = 0.0;
                }
            }
        };
        for (li, layer) in model.layers.iter_mut().enumerate() {
            update(
                &mut layer.weights,
                &grads.weights[li],
                &mut self.m.weights[li],
                &mut self.v.weights[li],
            );
            update(
                &mut layer.bias,
                &grads.bias[li],
                &mut self.m.bias[li],
                &mut self.v.bias[li],
            );
        }
    }
}

/// Default epoch count: 500 at `n = 4`, rising by 62 per qubit (996 at `n = 12`).
pub fn default_epochs(n: usize) -> usize {
    500 + 62 * n.saturating_sub(4)
}

fn check_supported(n: usize) -> Result<()> {
    if !(4..=12).contains(&n) {
        return Err(Error::Parameter(format!(
            "model presets cover 4 <= n <= 12, got {n}"
        )));
    }
    Ok(())
}

/// Random-state classifier: `clamp(n-2, 2, 6)` hidden layers of width
/// `min(2^(n+1), 512)`, no weight decay, final-epoch model.
pub fn build_base_config(n: usize) -> Result<(Vec<usize>, TrainConfig)> {
    check_supported(n)?;
    let depth = (n - 2).clamp(2, 6);
    let width = (1usize << (n + 1)).min(512);
    let mut dims = vec![INPUT_DIM];
    dims.extend(std::iter::repeat_n(width, depth));
    dims.push(class_table(n)?.len());
    Ok((
        dims,
        TrainConfig {
            epochs: default_epochs(n),
            ..TrainConfig::default()
        },
    ))
}

/// GHZ-model: one hidden layer of `2^(n+1)` units, weight decay `0.1^(n-1)`,
/// best epoch chosen on noised-GHZ validation points.
pub fn build_ghz_config(n: usize) -> Result<(Vec<usize>, TrainConfig)> {
    check_supported(n)?;
    let dims = vec![INPUT_DIM, 1usize << (n + 1), class_table(n)?.len()];
    Ok((
        dims,
        TrainConfig {
            epochs: default_epochs(n),
            weight_decay: 0.1f64.powi(n as i32 - 1),
            selection: Selection::BestValidation,
            selection_set: SelectionSet::SweepValidation,
            ..TrainConfig::default()
        },
    ))
}
