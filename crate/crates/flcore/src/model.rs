//! Fully connected ReLU networks with a softmax cross-entropy head.
//!
//! Parameters are one flat vector. Each layer stores its weights input-major
//! (`w[i * fan_out + o]`) followed by its biases, so a forward pass over a
//! sparse input only touches the rows of non-zero features.

use crate::error::{FlError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelArch {
    widths: Vec<usize>,
}

/// Offsets of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub biases: usize,
}

impl ModelArch {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(FlError::InvalidArch);
        }
        Ok(Self { widths })
    }

    /// 784-32-10, the MNIST default.
    pub fn mnist_default() -> Self {
        Self { widths: vec![784, 32, 10] }
    }

    /// 20-16-2, the synthetic-task default.
    pub fn synthetic_default() -> Self {
        Self { widths: vec![20, 16, 2] }
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// `Σ (fan_in + 1) · fan_out` over layers.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    pub(crate) fn layers(&self) -> Vec<LayerShape> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let shape = LayerShape {
                    fan_in: w[0],
                    fan_out: w[1],
                    weights: offset,
                    biases: offset + w[0] * w[1],
                };
                offset += (w[0] + 1) * w[1];
                shape
            })
            .collect()
    }

    /// Whether parameter `index` is a bias entry.
    pub fn is_bias(&self, index: usize) -> bool {
        self.layers()
            .iter()
            .any(|l| index >= l.biases && index < l.biases + l.fan_out)
    }
}

impl std::fmt::Display for ModelArch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: ModelArch,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn new(arch: ModelArch, values: Vec<f64>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(FlError::ParamCount {
                expected: arch.param_count(),
                got: values.len(),
            });
        }
        Ok(Self { arch, values })
    }

    pub fn zeros(arch: ModelArch) -> Self {
        let n = arch.param_count();
        Self { arch, values: vec![0.0; n] }
    }

    pub fn arch(&self) -> &ModelArch {
        &self.arch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `layers u32 LE ‖ widths u32 LE ‖ count u64 LE ‖ f64 LE values`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.arch.widths.len() + 8 + 8 * self.values.len());
        out.extend_from_slice(&(self.arch.widths.len() as u32).to_le_bytes());
        for w in &self.arch.widths {
            out.extend_from_slice(&(*w as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(FlError::Encoding("model bytes truncated"));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        let layers = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        if layers > 64 {
            return Err(FlError::Encoding("too many layers"));
        }
        let widths = (0..layers)
            .map(|_| Ok(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize))
            .collect::<Result<Vec<_>>>()?;
        let expected = widths
            .windows(2)
            .try_fold(0usize, |acc, w| w[0].checked_add(1)?.checked_mul(w[1])?.checked_add(acc))
            .ok_or(FlError::Encoding("architecture too large"))?;
        let arch = ModelArch::new(widths).map_err(|_| FlError::Encoding("invalid architecture"))?;
        let count = u64::from_le_bytes(take(8)?.try_into().unwrap());
        if count != expected as u64 {
            return Err(FlError::Encoding("parameter count does not match architecture"));
        }
        let body = take((count as usize).checked_mul(8).ok_or(FlError::Encoding("model too large"))?)?;
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if !cur.is_empty() {
            return Err(FlError::Encoding("trailing bytes after model"));
        }
        Ok(Self { arch, values })
    }
}

/// Weights uniform in `±1/√fan_in`, biases zero.
pub fn init_global_model(arch: &ModelArch, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::zeros(arch.clone());
    for layer in arch.layers() {
        let limit = 1.0 / (layer.fan_in as f64).sqrt();
        for w in &mut params.values[layer.weights..layer.biases] {
            *w = rng.gen_range(-limit..limit);
        }
    }
    params
}

/// Scratch buffers for one forward/backward pass.
pub(crate) struct Workspace {
    /// Post-activation outputs per layer (index 0 is the input copy).
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    nonzero: Vec<usize>,
}

impl Workspace {
    pub fn new(arch: &ModelArch) -> Self {
        Self {
            acts: arch.widths.iter().map(|&w| vec![0.0; w]).collect(),
            deltas: arch.widths.iter().map(|&w| vec![0.0; w]).collect(),
            nonzero: Vec::with_capacity(arch.input_width()),
        }
    }

    /// Softmax probabilities of the last forward pass.
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

fn dense_forward(params: &[f64], layer: &LayerShape, input: &[f64], active: Option<&[usize]>, out: &mut [f64]) {
    out.copy_from_slice(&params[layer.biases..layer.biases + layer.fan_out]);
    let mut row = |i: usize| {
        let x = input[i];
        let w = &params[layer.weights + i * layer.fan_out..layer.weights + (i + 1) * layer.fan_out];
        for (o, wo) in out.iter_mut().zip(w) {
            *o += x * wo;
        }
    };
    match active {
        Some(idx) => idx.iter().for_each(|&i| row(i)),
        None => (0..layer.fan_in).filter(|&i| input[i] != 0.0).for_each(row),
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Runs the network on one sample, leaving softmax probabilities in the
/// workspace output.
pub(crate) fn forward(params: &[f64], arch: &ModelArch, x: &[f64], ws: &mut Workspace) {
    let layers = arch.layers();
    ws.acts[0].copy_from_slice(x);
    ws.nonzero.clear();
    ws.nonzero.extend(x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i));
    for (l, layer) in layers.iter().enumerate() {
        let (before, after) = ws.acts.split_at_mut(l + 1);
        let input = &before[l];
        let out = &mut after[0];
        let active = (l == 0).then_some(ws.nonzero.as_slice());
        dense_forward(params, layer, input, active, out);
        if l + 1 < layers.len() {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        } else {
            softmax_in_place(out);
        }
    }
}

/// Forward plus backward for one sample; accumulates `∂loss/∂params` into
/// `grad` and returns the cross-entropy loss.
pub(crate) fn accumulate_gradient(
    params: &[f64],
    arch: &ModelArch,
    x: &[f64],
    label: usize,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    forward(params, arch, x, ws);
    let layers = arch.layers();
    let last = layers.len();
    let p = ws.acts[last][label].max(f64::MIN_POSITIVE);
    let loss = -p.ln();

    ws.deltas[last].copy_from_slice(&ws.acts[last]);
    ws.deltas[last][label] -= 1.0;

    for l in (0..last).rev() {
        let layer = &layers[l];
        let (d_before, d_after) = ws.deltas.split_at_mut(l + 1);
        let delta = &d_after[0];
        let input = &ws.acts[l];
        for (g, d) in grad[layer.biases..layer.biases + layer.fan_out].iter_mut().zip(delta.iter()) {
            *g += d;
        }
        let mut row = |i: usize| {
            let xi = input[i];
            let g = &mut grad[layer.weights + i * layer.fan_out..layer.weights + (i + 1) * layer.fan_out];
            for (gi, d) in g.iter_mut().zip(delta.iter()) {
                *gi += xi * d;
            }
        };
        if l == 0 {
            ws.nonzero.iter().for_each(|&i| row(i));
        } else {
            (0..layer.fan_in).filter(|&i| input[i] != 0.0).for_each(&mut row);
            // propagate through the ReLU of the previous layer
            let prev = &mut d_before[l];
            for (i, pd) in prev.iter_mut().enumerate() {
                if input[i] <= 0.0 {
                    *pd = 0.0;
                    continue;
                }
                let w = &params[layer.weights + i * layer.fan_out..layer.weights + (i + 1) * layer.fan_out];
                *pd = w.iter().zip(delta.iter()).map(|(a, b)| a * b).sum();
            }
        }
    }
    loss
}

/// Cross-entropy loss of a single sample.
pub fn sample_loss(params: &ModelParams, x: &[f64], label: usize) -> f64 {
    let mut ws = Workspace::new(params.arch());
    forward(params.values(), params.arch(), x, &mut ws);
    -ws.output()[label].max(f64::MIN_POSITIVE).ln()
}

/// Analytic gradient of the single-sample loss.
pub fn sample_gradient(params: &ModelParams, x: &[f64], label: usize) -> Vec<f64> {
    let mut ws = Workspace::new(params.arch());
    let mut grad = vec![0.0; params.len()];
    accumulate_gradient(params.values(), params.arch(), x, label, &mut ws, &mut grad);
    grad
}

/// Index of the largest output; ties go to the lowest class index.
pub fn predict(params: &ModelParams, x: &[f64]) -> usize {
    let mut ws = Workspace::new(params.arch());
    predict_with(params, x, &mut ws)
}

pub(crate) fn predict_with(params: &ModelParams, x: &[f64], ws: &mut Workspace) -> usize {
    forward(params.values(), params.arch(), x, ws);
    argmax(ws.output())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
