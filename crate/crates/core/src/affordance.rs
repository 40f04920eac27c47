//! Multi-label affordance classifier: one ReLU hidden layer, five sigmoid
//! outputs, trained with mean binary cross-entropy by mini-batch gradient
//! descent.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::connectivity::{f1_score, ratio};
use crate::error::{Error, Result};
use crate::semantics::Affordance;

pub const NUM_LABELS: usize = 5;
pub const DEFAULT_HIDDEN: usize = 128;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const PROB_EPSILON: f64 = 1e-7;

/// Bits ordered as [`Affordance::ALL`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MultiHotTarget(pub [bool; NUM_LABELS]);

impl MultiHotTarget {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a Affordance>) -> Self {
        let mut bits = [false; NUM_LABELS];
        for a in labels {
            bits[a.index()] = true;
        }
        Self(bits)
    }

    pub fn labels(&self) -> BTreeSet<Affordance> {
        Affordance::ALL
            .iter()
            .filter(|a| self.0[a.index()])
            .copied()
            .collect()
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    fn value(&self, i: usize) -> f64 {
        if self.0[i] {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffordanceModel {
    input_dim: usize,
    hidden: usize,
    /// hidden x input, row-major
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// NUM_LABELS x hidden, row-major
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Intermediate values of one forward pass.
struct Trace {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    probs: [f64; NUM_LABELS],
}

impl AffordanceModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w1: vec![0.0; hidden * input_dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; NUM_LABELS * hidden],
            b2: vec![0.0; NUM_LABELS],
        }
    }

    /// He-normal weights and zero biases, drawn from a generator seeded with `seed`.
    pub fn initialize(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(input_dim, hidden);
        let n1 = Normal::new(0.0, (2.0 / input_dim as f64).sqrt()).expect("finite std");
        let n2 = Normal::new(0.0, (2.0 / hidden as f64).sqrt()).expect("finite std");
        m.w1.iter_mut().for_each(|w| *w = n1.sample(&mut rng));
        m.w2.iter_mut().for_each(|w| *w = n2.sample(&mut rng));
        m
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Argument(format!(
                "input has dimension {}, model expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut pre = vec![0.0; self.hidden];
        for (j, p) in pre.iter_mut().enumerate() {
            let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
            *p = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let mut probs = [0.0; NUM_LABELS];
        for (k, p) in probs.iter_mut().enumerate() {
            let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            let z = self.b2[k] + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
            *p = sigmoid(z);
        }
        Trace { pre, hidden, probs }
    }

    pub fn forward(&self, x: &[f64]) -> Result<[f64; NUM_LABELS]> {
        self.check_input(x)?;
        Ok(self.trace(x).probs)
    }

    pub fn is_finite(&self) -> bool {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Mean over labels of -[t ln p + (1-t) ln(1-p)], with p clamped to [eps, 1-eps].
pub fn bce_loss(probs: &[f64; NUM_LABELS], target: &MultiHotTarget) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let p = p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
            let t = target.value(i);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / NUM_LABELS as f64
}

#[derive(Clone, Debug)]
pub struct Example {
    pub x: Vec<f64>,
    pub target: MultiHotTarget,
}

/// Gradients with the same layout as [`AffordanceModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros_like(m: &AffordanceModel) -> Self {
        Self {
            w1: vec![0.0; m.w1.len()],
            b1: vec![0.0; m.b1.len()],
            w2: vec![0.0; m.w2.len()],
            b2: vec![0.0; m.b2.len()],
        }
    }
}

/// Mean BCE over `batch` and its gradient with respect to every parameter.
pub fn loss_and_gradients(model: &AffordanceModel, batch: &[&Example]) -> Result<(f64, Gradients)> {
    let mut g = Gradients::zeros_like(model);
    if batch.is_empty() {
        return Ok((0.0, g));
    }
    let (din, dh) = (model.input_dim, model.hidden);
    let scale = 1.0 / (batch.len() * NUM_LABELS) as f64;
    let mut loss = 0.0;
    for ex in batch {
        model.check_input(&ex.x)?;
        let t = model.trace(&ex.x);
        loss += bce_loss(&t.probs, &ex.target);
        let mut dh_acc = vec![0.0; dh];
        for k in 0..NUM_LABELS {
            // d(mean BCE)/d(logit) = (p - t) / labels, then averaged over the batch.
            let delta = (t.probs[k] - ex.target.value(k)) * scale;
            g.b2[k] += delta;
            for j in 0..dh {
                g.w2[k * dh + j] += delta * t.hidden[j];
                dh_acc[j] += delta * model.w2[k * dh + j];
            }
        }
        for j in 0..dh {
            if t.pre[j] <= 0.0 {
                continue;
            }
            let d = dh_acc[j];
            g.b1[j] += d;
            for i in 0..din {
                g.w1[j * din + i] += d * ex.x[i];
            }
        }
    }
    Ok((loss / batch.len() as f64, g))
}

pub fn mean_loss(model: &AffordanceModel, data: &[&Example]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ex in data {
        total += bce_loss(&model.forward(&ex.x)?, &ex.target);
    }
    Ok(total / data.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub val_fraction: f64,
    /// 0 disables momentum.
    pub momentum: f64,
    pub hidden_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 100,
            batch_size: 32,
            seed: 0,
            val_fraction: 0.15,
            momentum: 0.0,
            hidden_size: DEFAULT_HIDDEN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub train: f64,
    pub val: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: AffordanceModel,
    pub history: Vec<EpochLoss>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

pub fn train(data: &[Example], config: &TrainConfig) -> Result<TrainOutcome> {
    let first = data
        .first()
        .ok_or_else(|| Error::Argument("training set is empty".into()))?;
    let dim = first.x.len();
    if dim == 0 {
        return Err(Error::Argument("training vectors are empty".into()));
    }
    for (i, ex) in data.iter().enumerate() {
        if ex.x.len() != dim {
            return Err(Error::Dimension(format!(
                "example {i} has dimension {}, expected {dim}",
                ex.x.len()
            )));
        }
        if !ex.target.any() {
            return Err(Error::Argument(format!("example {i} has no affordance label")));
        }
    }
    if config.batch_size == 0 || config.hidden_size == 0 {
        return Err(Error::Argument("batch_size and hidden_size must be positive".into()));
    }
    if !(0.0..1.0).contains(&config.val_fraction) {
        return Err(Error::Argument(format!(
            "val_fraction {} outside [0, 1)",
            config.val_fraction
        )));
    }

    let mut model = AffordanceModel::initialize(dim, config.hidden_size, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed_5eed_5eed);

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((data.len() as f64 * config.val_fraction).floor() as usize).min(data.len() - 1);
    let val_indices: Vec<usize> = order[..n_val].to_vec();
    let mut train_indices: Vec<usize> = order[n_val..].to_vec();
    let val: Vec<&Example> = val_indices.iter().map(|&i| &data[i]).collect();

    let mut velocity = Gradients::zeros_like(&model);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        train_indices.shuffle(&mut rng);
        for chunk in train_indices.chunks(config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &data[i]).collect();
            let (_, g) = loss_and_gradients(&model, &batch)?;
            let step = |p: &mut [f64], v: &mut [f64], g: &[f64]| {
                for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *v = config.momentum * *v + g;
                    *p -= config.lr * *v;
                }
            };
            step(&mut model.w1, &mut velocity.w1, &g.w1);
            step(&mut model.b1, &mut velocity.b1, &g.b1);
            step(&mut model.w2, &mut velocity.w2, &g.w2);
            step(&mut model.b2, &mut velocity.b2, &g.b2);
        }
        let train_set: Vec<&Example> = train_indices.iter().map(|&i| &data[i]).collect();
        let train_loss = mean_loss(&model, &train_set)?;
        if !train_loss.is_finite() || !model.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite loss at epoch {epoch} (lr {})",
                config.lr
            )));
        }
        let val_loss = if val.is_empty() {
            None
        } else {
            Some(mean_loss(&model, &val)?)
        };
        history.push(EpochLoss {
            train: train_loss,
            val: val_loss,
        });
    }
    Ok(TrainOutcome {
        model,
        history,
        train_indices,
        val_indices,
    })
}

/// Labels whose probability reaches `threshold` (inclusive). May be empty.
pub fn labels_above(probs: &[f64; NUM_LABELS], threshold: f64) -> BTreeSet<Affordance> {
    Affordance::ALL
        .iter()
        .filter(|a| probs[a.index()] >= threshold)
        .copied()
        .collect()
}

pub fn predict(model: &AffordanceModel, x: &[f64], threshold: f64) -> Result<BTreeSet<Affordance>> {
    Ok(labels_above(&model.forward(x)?, threshold))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub per_label: BTreeMap<Affordance, LabelScore>,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

/// Per-label and pooled scores for predicted vs. true label sets.
pub fn score_label_sets(predicted: &[BTreeSet<Affordance>], truth: &[BTreeSet<Affordance>]) -> Result<LabelMetrics> {
    if predicted.len() != truth.len() {
        return Err(Error::Argument(format!(
            "{} predictions for {} targets",
            predicted.len(),
            truth.len()
        )));
    }
    let mut per_label = BTreeMap::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for a in Affordance::ALL {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (p, t) in predicted.iter().zip(truth) {
            match (p.contains(&a), t.contains(&a)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        per_label.insert(
            a,
            LabelScore {
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: tp + fn_,
            },
        );
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
    }
    let micro_precision = ratio(tp_all, tp_all + fp_all);
    let micro_recall = ratio(tp_all, tp_all + fn_all);
    let macro_f1 = per_label.values().map(|s: &LabelScore| s.f1).sum::<f64>() / NUM_LABELS as f64;
    Ok(LabelMetrics {
        per_label,
        micro_precision,
        micro_recall,
        micro_f1: f1_score(micro_precision, micro_recall),
        macro_f1,
    })
}

pub fn evaluate(model: &AffordanceModel, test: &[Example], threshold: f64) -> Result<LabelMetrics> {
    let predicted = test
        .iter()
        .map(|ex| predict(model, &ex.x, threshold))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<_> = test.iter().map(|ex| ex.target.labels()).collect();
    score_label_sets(&predicted, &truth)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

/// On-disk model layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub dims: ModelDims,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub label_order: Vec<Affordance>,
}

impl From<&AffordanceModel> for ModelFile {
    fn from(m: &AffordanceModel) -> Self {
        ModelFile {
            dims: ModelDims {
                input: m.input_dim,
                hidden: m.hidden,
                output: NUM_LABELS,
            },
            w1: m.w1.chunks(m.input_dim).map(<[f64]>::to_vec).collect(),
            b1: m.b1.clone(),
            w2: m.w2.chunks(m.hidden).map(<[f64]>::to_vec).collect(),
            b2: m.b2.clone(),
            label_order: Affordance::ALL.to_vec(),
        }
    }
}

impl TryFrom<ModelFile> for AffordanceModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let ModelDims { input, hidden, output } = f.dims;
        let shape_ok = output == NUM_LABELS
            && f.label_order == Affordance::ALL
            && f.w1.len() == hidden
            && f.w1.iter().all(|r| r.len() == input)
            && f.b1.len() == hidden
            && f.w2.len() == NUM_LABELS
            && f.w2.iter().all(|r| r.len() == hidden)
            && f.b2.len() == NUM_LABELS;
        if !shape_ok {
            return Err(Error::Dimension("model parameter shapes are inconsistent".into()));
        }
        let m = AffordanceModel {
            input_dim: input,
            hidden,
            w1: f.w1.concat(),
            b1: f.b1,
            w2: f.w2.concat(),
            b2: f.b2,
        };
        if !m.is_finite() {
            return Err(Error::Argument("model has non-finite parameters".into()));
        }
        Ok(m)
    }
}

impl AffordanceModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(&ModelFile::from(self))
            .map_err(|e| Error::json("serializing model", e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        file.try_into()
    }
}

/// One line of an affordance dataset JSONL file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DataLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub vector: Vec<f64>,
    #[serde(default)]
    pub labels: Vec<Affordance>,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DataLine>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e))?,
        );
    }
    Ok(out)
}

impl From<&DataLine> for Example {
    fn from(d: &DataLine) -> Self {
        Example {
            x: d.vector.clone(),
            target: MultiHotTarget::from_labels(&d.labels),
        }
    }
}
