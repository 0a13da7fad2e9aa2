//! Layered stochastic binary network with separate top-down (generative)
//! and bottom-up (recognition) connections.
//!
//! Layers are stored bottom-up: index 0 is the data layer, the last index is
//! the top layer. Every activity is `-1` or `+1`, and a unit is `+1` with
//! probability `σ(a)` where `a = Σ_k w_kn s_k + b_n` over the previous layer.
//!
//! ```text
//! log Q(α|d)  = Σ_{m>0} Σ_n log σ(s_n · a_n^rec)
//! log P(α,d)  = Σ_{m≥0} Σ_n log σ(s_n · a_n^gen)
//! F           = E_Q[log Q(α|d) − log P(α,d)]
//! ```
//!
//! The top layer's generative activation is its `top_bias` alone, i.e. a
//! single weight from a constant `+1` unit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HmError, Result};
use crate::pattern::Pattern;

/// A single ±1 activity.
pub type Spin = i8;

/// Ordered layer sizes, data layer first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct NetworkShape {
    layer_sizes: Vec<usize>,
}

impl NetworkShape {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(HmError::Shape(format!(
                "need at least 2 layers, got {}",
                layer_sizes.len()
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(HmError::Shape(format!("empty layer in {layer_sizes:?}")));
        }
        Ok(Self { layer_sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn size(&self, layer: usize) -> usize {
        self.layer_sizes[layer]
    }

    pub fn data_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn top(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn hidden_units(&self) -> usize {
        self.layer_sizes[1..].iter().sum()
    }

    pub fn total_units(&self) -> usize {
        self.layer_sizes.iter().sum()
    }
}

impl Default for NetworkShape {
    fn default() -> Self {
        Self {
            layer_sizes: vec![10, 8, 5, 3],
        }
    }
}

impl TryFrom<Vec<usize>> for NetworkShape {
    type Error = HmError;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<NetworkShape> for Vec<usize> {
    fn from(shape: NetworkShape) -> Self {
        shape.layer_sizes
    }
}

/// Dense row-major matrix. Rows index the source layer, columns the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(HmError::Shape(format!(
                "{rows}x{cols} matrix given {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Column `c`: the incoming weights of target unit `c`.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    fn is_consistent(&self) -> bool {
        self.data.len() == self.rows * self.cols
    }
}

/// Top-down parameters.
///
/// `weights[m]` connects layer `m + 1` (rows) to layer `m` (columns) and
/// `biases[m]` belongs to layer `m`, for `m` in `0..top`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeParams {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub top_bias: Vec<f64>,
}

/// Bottom-up parameters.
///
/// `weights[m]` connects layer `m` (rows) to layer `m + 1` (columns) and
/// `biases[m]` belongs to layer `m + 1`, for `m` in `0..top`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionParams {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl GenerativeParams {
    pub fn zeros(shape: &NetworkShape) -> Self {
        let s = shape.sizes();
        Self {
            weights: (0..shape.top())
                .map(|m| Matrix::zeros(s[m + 1], s[m]))
                .collect(),
            biases: (0..shape.top()).map(|m| vec![0.0; s[m]]).collect(),
            top_bias: vec![0.0; s[shape.top()]],
        }
    }

    /// Weights and layer biases uniform in `[-scale, scale]`; top bias zero.
    pub fn random<R: Rng + ?Sized>(shape: &NetworkShape, scale: f64, rng: &mut R) -> Self {
        let s = shape.sizes();
        let mut draw = || rng.gen_range(-scale..=scale);
        let weights = (0..shape.top())
            .map(|m| Matrix::from_fn(s[m + 1], s[m], |_, _| draw()))
            .collect();
        let biases = (0..shape.top())
            .map(|m| (0..s[m]).map(|_| draw()).collect())
            .collect();
        Self {
            weights,
            biases,
            top_bias: vec![0.0; s[shape.top()]],
        }
    }

    pub fn shape(&self) -> Result<NetworkShape> {
        let mut sizes: Vec<usize> = self.biases.iter().map(Vec::len).collect();
        sizes.push(self.top_bias.len());
        NetworkShape::new(sizes)
    }

    /// Checks dimensions against `shape` and that every entry is finite.
    pub fn validate(&self, shape: &NetworkShape) -> Result<()> {
        let s = shape.sizes();
        let top = shape.top();
        if self.weights.len() != top || self.biases.len() != top {
            return Err(HmError::Shape(format!(
                "generative params have {} weight / {} bias layers, shape needs {top}",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for m in 0..top {
            let w = &self.weights[m];
            if !w.is_consistent() || w.rows != s[m + 1] || w.cols != s[m] {
                return Err(HmError::Shape(format!(
                    "generative weights[{m}] is {}x{}, expected {}x{}",
                    w.rows,
                    w.cols,
                    s[m + 1],
                    s[m]
                )));
            }
            if self.biases[m].len() != s[m] {
                return Err(HmError::Shape(format!(
                    "generative biases[{m}] has length {}, expected {}",
                    self.biases[m].len(),
                    s[m]
                )));
            }
        }
        if self.top_bias.len() != s[top] {
            return Err(HmError::Shape(format!(
                "top bias has length {}, expected {}",
                self.top_bias.len(),
                s[top]
            )));
        }
        if !self.all_finite() {
            return Err(HmError::Shape(
                "generative params contain non-finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.weights
            .iter()
            .all(|w| w.data.iter().all(|x| x.is_finite()))
            && self.biases.iter().flatten().all(|x| x.is_finite())
            && self.top_bias.iter().all(|x| x.is_finite())
    }
}

impl RecognitionParams {
    pub fn zeros(shape: &NetworkShape) -> Self {
        let s = shape.sizes();
        Self {
            weights: (0..shape.top())
                .map(|m| Matrix::zeros(s[m], s[m + 1]))
                .collect(),
            biases: (0..shape.top()).map(|m| vec![0.0; s[m + 1]]).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(shape: &NetworkShape, scale: f64, rng: &mut R) -> Self {
        let s = shape.sizes();
        let mut draw = || rng.gen_range(-scale..=scale);
        let weights = (0..shape.top())
            .map(|m| Matrix::from_fn(s[m], s[m + 1], |_, _| draw()))
            .collect();
        let biases = (0..shape.top())
            .map(|m| (0..s[m + 1]).map(|_| draw()).collect())
            .collect();
        Self { weights, biases }
    }

    pub fn validate(&self, shape: &NetworkShape) -> Result<()> {
        let s = shape.sizes();
        let top = shape.top();
        if self.weights.len() != top || self.biases.len() != top {
            return Err(HmError::Shape(format!(
                "recognition params have {} weight / {} bias layers, shape needs {top}",
                self.weights.len(),
                self.biases.len()
            )));
        }
        for m in 0..top {
            let w = &self.weights[m];
            if !w.is_consistent() || w.rows != s[m] || w.cols != s[m + 1] {
                return Err(HmError::Shape(format!(
                    "recognition weights[{m}] is {}x{}, expected {}x{}",
                    w.rows,
                    w.cols,
                    s[m],
                    s[m + 1]
                )));
            }
            if self.biases[m].len() != s[m + 1] {
                return Err(HmError::Shape(format!(
                    "recognition biases[{m}] has length {}, expected {}",
                    self.biases[m].len(),
                    s[m + 1]
                )));
            }
        }
        if !self.all_finite() {
            return Err(HmError::Shape(
                "recognition params contain non-finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.weights
            .iter()
            .all(|w| w.data.iter().all(|x| x.is_finite()))
            && self.biases.iter().flatten().all(|x| x.is_finite())
    }
}

/// One joint assignment of ±1 activities to every unit, data layer first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompleteState {
    pub layers: Vec<Vec<Spin>>,
}

impl CompleteState {
    pub fn new(layers: Vec<Vec<Spin>>) -> Result<Self> {
        if layers.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(HmError::Shape("activities must be -1 or +1".into()));
        }
        Ok(Self { layers })
    }

    pub fn data(&self) -> &[Spin] {
        &self.layers[0]
    }

    pub fn pattern(&self) -> Pattern {
        Pattern::from_signs(&self.layers[0])
    }

    pub fn matches(&self, shape: &NetworkShape) -> bool {
        self.layers.len() == shape.num_layers()
            && self
                .layers
                .iter()
                .zip(shape.sizes())
                .all(|(l, &n)| l.len() == n)
    }

    /// Enumerates every ±1 assignment of a layer of `n` units.
    pub fn all_layer_states(n: usize) -> impl Iterator<Item = Vec<Spin>> {
        (0..1u64 << n).map(move |code| {
            (0..n)
                .map(|i| if code >> i & 1 == 1 { 1 } else { -1 })
                .collect()
        })
    }
}

/// `Σ_k w_k · s_k + bias`.
pub fn activation(weights_column: &[f64], prev_activities: &[Spin], bias: f64) -> Result<f64> {
    if weights_column.len() != prev_activities.len() {
        return Err(HmError::Shape(format!(
            "{} weights against {} activities",
            weights_column.len(),
            prev_activities.len()
        )));
    }
    Ok(weights_column
        .iter()
        .zip(prev_activities)
        .fold(bias, |acc, (w, &s)| acc + w * f64::from(s)))
}

/// Logistic sigmoid, evaluated without overflow for large `|a|`.
pub fn unit_probability(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// `log σ(a)`, i.e. `-softplus(-a)`.
pub fn log_sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        -(-a).exp().ln_1p()
    } else {
        a - a.exp().ln_1p()
    }
}

/// Log-probability of activity `s` for a unit with activation `a`:
/// `(1+s)/2 · log σ(a) + (1−s)/2 · log(1−σ(a)) = log σ(s·a)`.
pub fn log_bernoulli(s: Spin, a: f64) -> f64 {
    log_sigmoid(f64::from(s) * a)
}

fn sample_spin<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Spin {
    if rng.gen::<f64>() < p {
        1
    } else {
        -1
    }
}

// Activations of layer `m` (m < top) given the realized layer above.
fn generative_activations(gen: &GenerativeParams, m: usize, above: &[Spin]) -> Vec<f64> {
    let w = &gen.weights[m];
    (0..w.cols)
        .map(|n| {
            above
                .iter()
                .enumerate()
                .fold(gen.biases[m][n], |acc, (k, &s)| {
                    acc + w.get(k, n) * f64::from(s)
                })
        })
        .collect()
}

// Activations of layer `m + 1` given the realized layer `m` below.
fn recognition_activations(rec: &RecognitionParams, m: usize, below: &[Spin]) -> Vec<f64> {
    let w = &rec.weights[m];
    (0..w.cols)
        .map(|n| {
            below
                .iter()
                .enumerate()
                .fold(rec.biases[m][n], |acc, (k, &s)| {
                    acc + w.get(k, n) * f64::from(s)
                })
        })
        .collect()
}

/// Generative activations of every layer with the state's activities as
/// parents. The top layer's activations are its biases.
pub fn generative_activations_all(gen: &GenerativeParams, state: &CompleteState) -> Vec<Vec<f64>> {
    let top = gen.weights.len();
    let mut out: Vec<Vec<f64>> = (0..top)
        .map(|m| generative_activations(gen, m, &state.layers[m + 1]))
        .collect();
    out.push(gen.top_bias.clone());
    out
}

/// Recognition activations of layers `1..=top` (index 0 of the result is
/// layer 1) with the state's activities as inputs.
pub fn recognition_activations_all(
    rec: &RecognitionParams,
    state: &CompleteState,
) -> Vec<Vec<f64>> {
    (0..rec.weights.len())
        .map(|m| recognition_activations(rec, m, &state.layers[m]))
        .collect()
}

/// Samples hidden causes bottom-up from `Q(α|d)` with the data clamped.
pub fn recognition_pass<R: Rng + ?Sized>(
    rec: &RecognitionParams,
    data: &Pattern,
    rng: &mut R,
) -> Result<CompleteState> {
    let input_len = rec.weights.first().map_or(0, Matrix::rows);
    if data.len() != input_len {
        return Err(HmError::Shape(format!(
            "pattern of length {} on a data layer of {input_len}",
            data.len()
        )));
    }
    let mut layers = Vec::with_capacity(rec.weights.len() + 1);
    layers.push(data.sign_form());
    for m in 0..rec.weights.len() {
        let next = recognition_activations(rec, m, &layers[m])
            .into_iter()
            .map(|a| sample_spin(unit_probability(a), rng))
            .collect();
        layers.push(next);
    }
    Ok(CompleteState { layers })
}

/// Samples a full dream top-down from `P(α, d)`.
pub fn generative_pass<R: Rng + ?Sized>(gen: &GenerativeParams, rng: &mut R) -> CompleteState {
    let top = gen.weights.len();
    let mut layers: Vec<Vec<Spin>> = vec![Vec::new(); top + 1];
    layers[top] = gen
        .top_bias
        .iter()
        .map(|&b| sample_spin(unit_probability(b), rng))
        .collect();
    for m in (0..top).rev() {
        layers[m] = generative_activations(gen, m, &layers[m + 1])
            .into_iter()
            .map(|a| sample_spin(unit_probability(a), rng))
            .collect();
    }
    CompleteState { layers }
}

/// Generative probabilities `p_n^m` for every unit, with parents clamped to
/// the given state. No sampling.
pub fn clamped_generative_probabilities(
    gen: &GenerativeParams,
    state: &CompleteState,
) -> Vec<Vec<f64>> {
    generative_activations_all(gen, state)
        .into_iter()
        .map(|layer| layer.into_iter().map(unit_probability).collect())
        .collect()
}

/// Recognition probabilities `q_n^m` for layers `1..=top` (result index 0 is
/// layer 1), with inputs clamped to the given state.
pub fn clamped_recognition_probabilities(
    rec: &RecognitionParams,
    state: &CompleteState,
) -> Vec<Vec<f64>> {
    recognition_activations_all(rec, state)
        .into_iter()
        .map(|layer| layer.into_iter().map(unit_probability).collect())
        .collect()
}

/// `log Q(α|d)` of the state's hidden layers.
pub fn log_recognition_density(rec: &RecognitionParams, state: &CompleteState) -> f64 {
    recognition_activations_all(rec, state)
        .iter()
        .zip(&state.layers[1..])
        .flat_map(|(acts, spins)| acts.iter().zip(spins))
        .map(|(&a, &s)| log_bernoulli(s, a))
        .sum()
}

/// Per-layer generative log-probabilities `Σ_n log p(s_n^m | s^{m+1})`,
/// data layer first.
pub fn generative_layer_log_probs(gen: &GenerativeParams, state: &CompleteState) -> Vec<f64> {
    generative_activations_all(gen, state)
        .iter()
        .zip(&state.layers)
        .map(|(acts, spins)| {
            acts.iter()
                .zip(spins)
                .map(|(&a, &s)| log_bernoulli(s, a))
                .sum()
        })
        .collect()
}

/// `log P(α, d)` of the whole state.
pub fn log_generative_density(gen: &GenerativeParams, state: &CompleteState) -> f64 {
    generative_layer_log_probs(gen, state).iter().sum()
}

/// Monte-Carlo mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Welford's running mean and variance; identical samples give an
    /// exactly zero standard error.
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        let n = samples.len() as f64;
        let std_error = if samples.len() > 1 {
            (m2 / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error }
    }
}

/// Per-sample free energy `log Q(α|d) − log P(α, d)`.
pub fn sample_free_energy(
    gen: &GenerativeParams,
    rec: &RecognitionParams,
    state: &CompleteState,
) -> f64 {
    log_recognition_density(rec, state) - log_generative_density(gen, state)
}

/// Estimates `F = E_Q[log Q(α|d) − log P(α,d)]` for one data pattern from
/// `n_samples` recognition samples.
pub fn estimate_free_energy<R: Rng + ?Sized>(
    gen: &GenerativeParams,
    rec: &RecognitionParams,
    data: &Pattern,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(HmError::Config("n_samples must be at least 1".into()));
    }
    let samples = (0..n_samples)
        .map(|_| recognition_pass(rec, data, rng).map(|s| sample_free_energy(gen, rec, &s)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&samples))
}
