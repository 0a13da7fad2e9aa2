//! Wake-sleep training with local delta rules.
//!
//! Wake: clamp data, sample hidden causes bottom-up, and move the generative
//! parameters toward reproducing the sampled state. Sleep: dream top-down
//! and move the recognition parameters toward inverting the dream. Both use
//! the same per-connection rule `param -= rate · delta`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HmError, Result};
use crate::metrics::generation_accuracy;
use crate::network::{
    estimate_free_energy, generative_pass, recognition_pass, unit_probability, CompleteState,
    GenerativeParams, NetworkShape, RecognitionParams, Spin,
};
use crate::pattern::Pattern;
use crate::rng::{stream, streams, HmRng};

/// Which form of the local delta rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[non_exhaustive]
pub enum UpdateRule {
    /// `-s_parent · (s_target − p)`, mixing a ±1 target with a probability.
    PaperLiteral,
    /// `-s_parent · ((1+s_target)/2 − p)`, the derivative of `−log σ(s·a)`.
    #[default]
    ExactGradient,
}

/// Step size and rule for one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Learning {
    pub rate: f64,
    pub rule: UpdateRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub shape: NetworkShape,
    pub learning_rate: f64,
    pub stage1_iterations: u64,
    pub eval_samples: usize,
    pub seed: u64,
    pub update_rule: UpdateRule,
    /// Iterations between trace records; 0 records only the endpoints.
    pub trace_interval: u64,
    /// Recognition samples per well-formed pattern for the traced free energy.
    pub fe_samples: usize,
    /// Half-width of the uniform initialization interval.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            shape: NetworkShape::default(),
            learning_rate: 0.05,
            stage1_iterations: 60_000,
            eval_samples: 10_000,
            seed: 0,
            update_rule: UpdateRule::ExactGradient,
            trace_interval: 6_000,
            fe_samples: 20,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(HmError::Config(format!(
                "learning_rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        if self.eval_samples == 0 || self.fe_samples == 0 {
            return Err(HmError::Config(
                "eval_samples and fe_samples must be ≥ 1".into(),
            ));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(HmError::Config(format!(
                "bad init_scale {}",
                self.init_scale
            )));
        }
        Ok(())
    }

    pub fn learning(&self) -> Learning {
        Learning {
            rate: self.learning_rate,
            rule: self.update_rule,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub weight: f64,
    pub bias: f64,
}

/// Derivative of the per-unit objective with respect to one incoming weight
/// (from `s_parent`) and the unit's bias.
pub fn generative_delta(s_parent: Spin, s_target: Spin, p_target: f64, rule: UpdateRule) -> Delta {
    let target = match rule {
        UpdateRule::PaperLiteral => f64::from(s_target),
        UpdateRule::ExactGradient => (1.0 + f64::from(s_target)) / 2.0,
    };
    let bias = -(target - p_target);
    Delta {
        weight: f64::from(s_parent) * bias,
        bias,
    }
}

// Applies one delta-rule step to a layer: `weights` rows are parents,
// columns are targets.
fn update_layer(
    weights: &mut crate::network::Matrix,
    biases: &mut [f64],
    parents: &[Spin],
    targets: &[Spin],
    learning: Learning,
) {
    for (n, (&s, bias)) in targets.iter().zip(biases.iter_mut()).enumerate() {
        let a = parents.iter().enumerate().fold(*bias, |acc, (k, &sk)| {
            acc + weights.get(k, n) * f64::from(sk)
        });
        let p = unit_probability(a);
        let db = generative_delta(1, s, p, learning.rule).bias;
        *bias -= learning.rate * db;
        for (k, &sk) in parents.iter().enumerate() {
            *weights.get_mut(k, n) -= learning.rate * f64::from(sk) * db;
        }
    }
}

/// Applies the generative delta rule to every generative parameter for a
/// fully specified state.
pub fn apply_generative_update(
    gen: &mut GenerativeParams,
    state: &CompleteState,
    learning: Learning,
) {
    let top = gen.weights.len();
    for m in 0..top {
        update_layer(
            &mut gen.weights[m],
            &mut gen.biases[m],
            &state.layers[m + 1],
            &state.layers[m],
            learning,
        );
    }
    for (b, &s) in gen.top_bias.iter_mut().zip(&state.layers[top]) {
        let db = generative_delta(1, s, unit_probability(*b), learning.rule).bias;
        *b -= learning.rate * db;
    }
}

/// Applies the recognition delta rule with the state's activities as targets.
pub fn apply_recognition_update(
    rec: &mut RecognitionParams,
    state: &CompleteState,
    learning: Learning,
) {
    for m in 0..rec.weights.len() {
        update_layer(
            &mut rec.weights[m],
            &mut rec.biases[m],
            &state.layers[m],
            &state.layers[m + 1],
            learning,
        );
    }
}

/// Wake phase: sample hidden causes for `data`, then update the generative
/// parameters. Returns the sampled state.
pub fn wake_step<R: Rng + ?Sized>(
    gen: &mut GenerativeParams,
    rec: &RecognitionParams,
    data: &Pattern,
    learning: Learning,
    rng: &mut R,
) -> Result<CompleteState> {
    let state = recognition_pass(rec, data, rng)?;
    apply_generative_update(gen, &state, learning);
    Ok(state)
}

/// Sleep phase: dream, then update the recognition parameters toward the
/// dream. Returns the dream.
pub fn sleep_step<R: Rng + ?Sized>(
    gen: &GenerativeParams,
    rec: &mut RecognitionParams,
    learning: Learning,
    rng: &mut R,
) -> CompleteState {
    let dream = generative_pass(gen, rng);
    apply_recognition_update(rec, &dream, learning);
    dream
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: u64,
    /// Mean free-energy estimate over the well-formed set.
    pub free_energy: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainTrace {
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self
            .records
            .last()
            .is_none_or(|r| r.iteration < record.iteration));
        self.records.push(record);
    }
}

/// Result of a stage-I run, including the training stream so a run can be
/// resumed or checkpointed.
#[derive(Debug, Clone)]
pub struct Stage1Run {
    pub gen: GenerativeParams,
    pub rec: RecognitionParams,
    pub trace: TrainTrace,
    pub rng: HmRng,
}

/// Initial parameters for `cfg`, drawn from the run seed.
pub fn initialize(cfg: &TrainConfig) -> (GenerativeParams, RecognitionParams) {
    let mut rng = stream(cfg.seed, streams::INIT);
    let gen = GenerativeParams::random(&cfg.shape, cfg.init_scale, &mut rng);
    let rec = RecognitionParams::random(&cfg.shape, cfg.init_scale, &mut rng);
    (gen, rec)
}

/// Mean free energy over `data`, `samples` recognition draws per pattern.
pub fn mean_free_energy<R: Rng + ?Sized>(
    gen: &GenerativeParams,
    rec: &RecognitionParams,
    data: &[Pattern],
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut total = 0.0;
    for p in data {
        total += estimate_free_energy(gen, rec, p, samples, rng)?.mean;
    }
    Ok(total / data.len() as f64)
}

fn trace_record(
    iteration: u64,
    gen: &GenerativeParams,
    rec: &RecognitionParams,
    wellformed: &[Pattern],
    cfg: &TrainConfig,
    rng: &mut HmRng,
) -> Result<TraceRecord> {
    let free_energy = mean_free_energy(gen, rec, wellformed, cfg.fe_samples, rng)?;
    let accuracy = generation_accuracy(gen, cfg.eval_samples, rng)?.accuracy;
    Ok(TraceRecord {
        iteration,
        free_energy,
        accuracy,
    })
}

/// Stage I: data drawn uniformly from the well-formed set, one wake step
/// followed by one unconstrained sleep step per iteration.
pub fn train_stage1(cfg: &TrainConfig, wellformed: &[Pattern]) -> Result<Stage1Run> {
    cfg.validate()?;
    if wellformed.is_empty() {
        return Err(HmError::Config("training set is empty".into()));
    }
    if let Some(p) = wellformed.iter().find(|p| p.len() != cfg.shape.data_size()) {
        return Err(HmError::Shape(format!(
            "pattern {p} does not fit a data layer of {}",
            cfg.shape.data_size()
        )));
    }
    let (mut gen, mut rec) = initialize(cfg);
    let mut rng = stream(cfg.seed, streams::STAGE1);
    let mut eval_rng = stream(cfg.seed, streams::STAGE1_EVAL);
    let learning = cfg.learning();
    let mut trace = TrainTrace::default();
    trace.push(trace_record(0, &gen, &rec, wellformed, cfg, &mut eval_rng)?);

    for it in 1..=cfg.stage1_iterations {
        let data = &wellformed[rng.gen_range(0..wellformed.len())];
        wake_step(&mut gen, &rec, data, learning, &mut rng)?;
        sleep_step(&gen, &mut rec, learning, &mut rng);
        let scheduled = cfg.trace_interval > 0 && it % cfg.trace_interval == 0;
        if scheduled || it == cfg.stage1_iterations {
            trace.push(trace_record(
                it,
                &gen,
                &rec,
                wellformed,
                cfg,
                &mut eval_rng,
            )?);
        }
    }
    Ok(Stage1Run {
        gen,
        rec,
        trace,
        rng,
    })
}
