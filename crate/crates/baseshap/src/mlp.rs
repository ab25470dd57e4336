//! Minimal feed-forward network backend: forward pass, seeded training
//! with softmax cross-entropy, and input gradients for the value-function
//! targets used by the game layer.

use crate::error::{Error, Result};
use crate::rng::derive_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative in terms of pre-activation z and activation a.
    /// ReLU subgradient at 0 is 0.
    fn partial(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major weight matrix, out_dim x in_dim.
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub act: Activation,
}

impl Layer {
    fn out_dim(&self) -> usize {
        self.b.len()
    }

    fn in_dim(&self) -> usize {
        self.w.first().map_or(0, |r| r.len())
    }
}

/// Feed-forward network. `hidden_tap` names the layer whose activation is
/// the "hidden feature" h (the second-last layer by construction).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub hidden_tap: usize,
}

/// Scalar target for input gradients.
#[derive(Debug, Clone)]
pub enum GradTarget {
    /// Raw logit at a class index.
    Logit(usize),
    /// Softmax probability of a class.
    Prob(usize),
    /// log(p / (1 - p)) of a class probability.
    LogOdds(usize),
    /// L1 distance of the hidden feature from a reference feature vector.
    FeatureL1Vs(Vec<f64>),
}

const LOGODDS_EPS: f64 = 1e-12;

struct Trace {
    /// Pre-activations per layer.
    zs: Vec<Vec<f64>>,
    /// Activations per layer (activations[0] is the input).
    acts: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Config(
                "an MLP needs at least 2 layers so the hidden tap exists".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Dimension {
                    expected: pair[0].out_dim(),
                    got: pair[1].in_dim(),
                });
            }
        }
        let hidden_tap = layers.len() - 2;
        Ok(Self { layers, hidden_tap })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: MlpModel = serde_json::from_str(&text)?;
        if model.layers.len() < 2 || model.hidden_tap != model.layers.len() - 2 {
            return Err(Error::Config("malformed weights file".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    fn trace(&self, input: &[f64]) -> Result<Trace> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut acts = vec![input.to_vec()];
        let mut zs = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let prev = acts.last().unwrap();
            let z: Vec<f64> = layer
                .w
                .iter()
                .zip(&layer.b)
                .map(|(row, &bias)| {
                    row.iter().zip(prev).map(|(&w, &a)| w * a).sum::<f64>() + bias
                })
                .collect();
            let a = z.iter().map(|&zi| layer.act.apply(zi)).collect();
            zs.push(z);
            acts.push(a);
        }
        Ok(Trace { zs, acts })
    }

    /// Runs the network: returns (logits, hidden feature h).
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let trace = self.trace(input)?;
        let logits = trace.acts.last().unwrap().clone();
        let h = trace.acts[self.hidden_tap + 1].clone();
        Ok((logits, h))
    }

    pub fn softmax(logits: &[f64]) -> Vec<f64> {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.iter().map(|&e| e / sum).collect()
    }

    /// Backpropagates `cot` (cotangent on layer `from`'s activation) down
    /// to the input.
    fn backprop_input(&self, trace: &Trace, from: usize, cot: &[f64]) -> Vec<f64> {
        let mut cot = cot.to_vec();
        for l in (0..=from).rev() {
            let layer = &self.layers[l];
            let dz: Vec<f64> = cot
                .iter()
                .zip(&trace.zs[l])
                .zip(&trace.acts[l + 1])
                .map(|((&c, &z), &a)| c * layer.act.partial(z, a))
                .collect();
            let mut prev = vec![0.0; layer.in_dim()];
            for (row, &d) in layer.w.iter().zip(&dz) {
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            cot = prev;
        }
        cot
    }

    /// Scalar target value and its gradient w.r.t. the input vector.
    pub fn value_and_input_gradient(
        &self,
        input: &[f64],
        target: GradTarget,
    ) -> Result<(f64, Vec<f64>)> {
        let trace = self.trace(input)?;
        let logits = trace.acts.last().unwrap();
        let last = self.layers.len() - 1;
        match target {
            GradTarget::Logit(k) => {
                if k >= logits.len() {
                    return Err(Error::Argument(format!("logit index {k} out of range")));
                }
                let mut cot = vec![0.0; logits.len()];
                cot[k] = 1.0;
                Ok((logits[k], self.backprop_input(&trace, last, &cot)))
            }
            GradTarget::Prob(k) => {
                if k >= logits.len() {
                    return Err(Error::Argument(format!("class index {k} out of range")));
                }
                let p = Self::softmax(logits);
                let cot: Vec<f64> = p
                    .iter()
                    .enumerate()
                    .map(|(j, &pj)| p[k] * ((j == k) as usize as f64 - pj))
                    .collect();
                Ok((p[k], self.backprop_input(&trace, last, &cot)))
            }
            GradTarget::LogOdds(k) => {
                if k >= logits.len() {
                    return Err(Error::Argument(format!("class index {k} out of range")));
                }
                let p = Self::softmax(logits);
                let pk = p[k].clamp(LOGODDS_EPS, 1.0 - LOGODDS_EPS);
                let value = (pk / (1.0 - pk)).ln();
                // d logodds / dz_j = (1[j=k] - p_j) / (1 - p_k).
                let cot: Vec<f64> = p
                    .iter()
                    .enumerate()
                    .map(|(j, &pj)| ((j == k) as usize as f64 - pj) / (1.0 - pk))
                    .collect();
                Ok((value, self.backprop_input(&trace, last, &cot)))
            }
            GradTarget::FeatureL1Vs(reference) => {
                let h = &trace.acts[self.hidden_tap + 1];
                if reference.len() != h.len() {
                    return Err(Error::Dimension {
                        expected: h.len(),
                        got: reference.len(),
                    });
                }
                let value: f64 = h.iter().zip(&reference).map(|(&a, &r)| (a - r).abs()).sum();
                let cot: Vec<f64> = h
                    .iter()
                    .zip(&reference)
                    .map(|(&a, &r)| {
                        if a > r {
                            1.0
                        } else if a < r {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Ok((value, self.backprop_input(&trace, self.hidden_tap, &cot)))
            }
        }
    }

    /// ||h(in1) - h(in2)||_1 with gradients w.r.t. both inputs.
    pub fn feature_l1_diff(&self, in1: &[f64], in2: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let t1 = self.trace(in1)?;
        let t2 = self.trace(in2)?;
        let h1 = &t1.acts[self.hidden_tap + 1];
        let h2 = &t2.acts[self.hidden_tap + 1];
        let value: f64 = h1.iter().zip(h2).map(|(&a, &b)| (a - b).abs()).sum();
        let sign: Vec<f64> = h1
            .iter()
            .zip(h2)
            .map(|(&a, &b)| {
                if a > b {
                    1.0
                } else if a < b {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect();
        let neg: Vec<f64> = sign.iter().map(|&s| -s).collect();
        let g1 = self.backprop_input(&t1, self.hidden_tap, &sign);
        let g2 = self.backprop_input(&t2, self.hidden_tap, &neg);
        Ok((value, g1, g2))
    }

    /// Fresh model with seeded fan-in-scaled uniform weights. `arch` lists
    /// hidden widths; hidden layers use ReLU, the output layer is linear.
    pub fn init(input_dim: usize, arch: &[usize], classes: usize, seed: u64) -> Result<Self> {
        if arch.is_empty() {
            return Err(Error::Config("at least one hidden layer required".into()));
        }
        let mut rng = derive_rng(seed, &[0x1417]);
        let mut dims = vec![input_dim];
        dims.extend_from_slice(arch);
        dims.push(classes);
        let mut layers = Vec::new();
        for (li, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let scale = (1.0 / fan_in as f64).sqrt();
            let w = (0..fan_out)
                .map(|_| (0..fan_in).map(|_| rng.gen_range(-scale..scale)).collect())
                .collect();
            let act = if li + 1 == dims.len() - 1 {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(Layer {
                w,
                b: vec![0.0; fan_out],
                act,
            });
        }
        MlpModel::new(layers)
    }

    /// Mini-batch gradient descent on softmax cross-entropy. Deterministic
    /// under the seed. Returns the model and the per-epoch loss trace.
    pub fn train(
        dataset: &Dataset,
        arch: &[usize],
        epochs: usize,
        lr: f64,
        seed: u64,
    ) -> Result<(Self, Vec<f64>)> {
        if dataset.rows.is_empty() {
            return Err(Error::Argument("empty dataset".into()));
        }
        let classes = dataset.rows.iter().map(|r| r.1).max().unwrap() + 1;
        let n_features = dataset.rows[0].0.len();
        let mut model = Self::init(n_features, arch, classes, seed)?;
        let mut trace = Vec::with_capacity(epochs);
        let batch_size = 32.min(dataset.rows.len());
        for epoch in 0..epochs {
            let mut order: Vec<usize> = (0..dataset.rows.len()).collect();
            let mut rng = derive_rng(seed, &[0x7261, epoch as u64]);
            // Fisher-Yates with the derived stream.
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let mut epoch_loss = 0.0;
            for batch in order.chunks(batch_size) {
                epoch_loss += model.sgd_step(dataset, batch, lr)?;
            }
            epoch_loss /= dataset.rows.len() as f64;
            if !epoch_loss.is_finite() {
                return Err(Error::Training { epoch });
            }
            trace.push(epoch_loss);
        }
        Ok((model, trace))
    }

    /// One gradient step over a batch; returns the summed batch loss.
    fn sgd_step(&mut self, dataset: &Dataset, batch: &[usize], lr: f64) -> Result<f64> {
        let mut grads_w: Vec<Vec<Vec<f64>>> = self
            .layers
            .iter()
            .map(|l| vec![vec![0.0; l.in_dim()]; l.out_dim()])
            .collect();
        let mut grads_b: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.out_dim()]).collect();
        let mut loss = 0.0;
        for &idx in batch {
            let (x, label) = &dataset.rows[idx];
            let trace = self.trace(x)?;
            let logits = trace.acts.last().unwrap();
            let p = Self::softmax(logits);
            loss -= p[*label].max(1e-300).ln();
            // dL/dz_out = p - onehot(label).
            let mut cot: Vec<f64> = p.clone();
            cot[*label] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let dz: Vec<f64> = cot
                    .iter()
                    .zip(&trace.zs[l])
                    .zip(&trace.acts[l + 1])
                    .map(|((&c, &z), &a)| c * layer.act.partial(z, a))
                    .collect();
                for (o, &d) in dz.iter().enumerate() {
                    grads_b[l][o] += d;
                    for (i, &a) in trace.acts[l].iter().enumerate() {
                        grads_w[l][o][i] += d * a;
                    }
                }
                let mut prev = vec![0.0; layer.in_dim()];
                for (row, &d) in layer.w.iter().zip(&dz) {
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                cot = prev;
            }
        }
        let scale = lr / batch.len() as f64;
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (o, row) in layer.w.iter_mut().enumerate() {
                for (i, w) in row.iter_mut().enumerate() {
                    *w -= scale * grads_w[l][o][i];
                }
            }
            for (o, b) in layer.b.iter_mut().enumerate() {
                *b -= scale * grads_b[l][o];
            }
        }
        Ok(loss)
    }
}

/// Labeled tabular data with cached per-feature means.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Vec<(Vec<f64>, usize)>,
    pub feature_means: Vec<f64>,
}

impl Dataset {
    pub fn new(rows: Vec<(Vec<f64>, usize)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Argument("empty dataset".into()));
        }
        let n = rows[0].0.len();
        for (x, _) in &rows {
            if x.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: x.len(),
                });
            }
        }
        let mut means = vec![0.0; n];
        for (x, _) in &rows {
            for (m, &v) in means.iter_mut().zip(x) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= rows.len() as f64;
        }
        Ok(Self {
            rows,
            feature_means: means,
        })
    }

    /// CSV with a header row; the last column is the integer class label.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 2 {
                return Err(Error::Config(format!("line {}: too few columns", lineno + 1)));
            }
            let label: usize = fields[fields.len() - 1].trim().parse().map_err(|_| {
                Error::Config(format!("line {}: bad label {:?}", lineno + 1, fields.last()))
            })?;
            let features = fields[..fields.len() - 1]
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("line {}: bad number {f:?}", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push((features, label));
        }
        Self::new(rows)
    }
}
