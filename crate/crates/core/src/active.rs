//! Stage II fine-tuning by active inference.
//!
//! Dreams are filtered by the grammar: only well-formed dreams train the
//! recognition weights, and each accepted dream adds one count to the
//! salience distribution from which wake-phase inputs are drawn. Frequently
//! generated patterns therefore become frequently sampled inputs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HmError, Result};
use crate::grammar::WellFormedTable;
use crate::metrics::{generation_accuracy, kl_from_uniform};
use crate::network::{generative_pass, GenerativeParams, RecognitionParams};
use crate::pattern::Pattern;
use crate::train::{apply_recognition_update, wake_step, Learning, UpdateRule};

/// Count-based evidence distribution over the well-formed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalienceDistribution {
    patterns: Vec<Pattern>,
    counts: Vec<u64>,
    total: u64,
}

impl SalienceDistribution {
    /// Weight 1 on every pattern.
    pub fn uniform(wellformed: &[Pattern]) -> Result<Self> {
        Self::from_counts(wellformed.to_vec(), vec![1; wellformed.len()])
    }

    /// Builds a distribution from explicit counts. Patterns must be strictly
    /// increasing and every count at least 1.
    pub fn from_counts(patterns: Vec<Pattern>, counts: Vec<u64>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(HmError::Config("salience support is empty".into()));
        }
        if patterns.len() != counts.len() {
            return Err(HmError::Shape(format!(
                "{} patterns with {} counts",
                patterns.len(),
                counts.len()
            )));
        }
        if let Some(w) = patterns.windows(2).find(|w| w[0] >= w[1]) {
            return Err(HmError::Config(format!(
                "salience patterns not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            return Err(HmError::Config(format!(
                "zero salience count for {}",
                patterns[i]
            )));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| HmError::Config("salience total overflows".into()))?;
        Ok(Self {
            patterns,
            counts,
            total,
        })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pattern, u64)> {
        self.patterns.iter().zip(self.counts.iter().copied())
    }

    pub fn count(&self, p: &Pattern) -> Option<u64> {
        self.patterns.binary_search(p).ok().map(|i| self.counts[i])
    }

    pub fn probability(&self, p: &Pattern) -> f64 {
        self.count(p).map_or(0.0, |c| c as f64 / self.total as f64)
    }

    /// Adds `k` to the weight of `p`, which must be in the support.
    pub fn add_count(&mut self, p: &Pattern, k: u64) -> Result<()> {
        let i = self
            .patterns
            .binary_search(p)
            .map_err(|_| HmError::NotWellFormed(p.to_string()))?;
        self.counts[i] += k;
        self.total += k;
        Ok(())
    }

    /// One more observation of a generated, well-formed pattern.
    pub fn update(&mut self, generated: &Pattern) -> Result<()> {
        self.add_count(generated, 1)
    }

    /// Draws a pattern with probability `count / total`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Pattern {
        let mut u = rng.gen_range(0..self.total);
        for (p, &c) in self.patterns.iter().zip(&self.counts) {
            if u < c {
                return p;
            }
            u -= c;
        }
        unreachable!("total equals the sum of counts")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage2Config {
    pub rounds: u64,
    pub wake_steps_per_round: u64,
    pub sleep_attempts_per_round: u64,
    pub max_dream_retries: u64,
    /// Fine-tuning rate for the recognition (sleep) updates.
    pub fine_tune_rate: f64,
    /// Generative (wake) rate; defaults to `fine_tune_rate`.
    pub wake_rate: Option<f64>,
    /// Wake rate reached at the last round, interpolated geometrically from
    /// the initial wake rate. `None` keeps the wake rate constant.
    pub wake_rate_final: Option<f64>,
    pub update_rule: UpdateRule,
    /// Dreams drawn for the per-round accuracy estimate.
    pub eval_samples: usize,
    /// Rounds between accuracy estimates; 0 evaluates only the last round.
    pub eval_interval: u64,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Self {
            rounds: 200,
            wake_steps_per_round: 1_000,
            sleep_attempts_per_round: 1_000,
            max_dream_retries: 100,
            fine_tune_rate: 0.05,
            wake_rate: Some(1.0),
            wake_rate_final: Some(0.01),
            update_rule: UpdateRule::ExactGradient,
            eval_samples: 10_000,
            eval_interval: 1,
        }
    }
}

impl Stage2Config {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            Some(self.fine_tune_rate),
            self.wake_rate,
            self.wake_rate_final,
        ];
        if rates
            .iter()
            .flatten()
            .any(|r| !(r.is_finite() && *r >= 0.0))
        {
            return Err(HmError::Config(
                "stage-II rates must be finite and non-negative".into(),
            ));
        }
        if self.max_dream_retries == 0 {
            return Err(HmError::Config("max_dream_retries must be ≥ 1".into()));
        }
        if self.eval_samples == 0 {
            return Err(HmError::Config("eval_samples must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn sleep_learning(&self) -> Learning {
        Learning {
            rate: self.fine_tune_rate,
            rule: self.update_rule,
        }
    }

    /// Wake step size and rule for `round` (1-based).
    pub fn wake_learning(&self, round: u64) -> Learning {
        let start = self.wake_rate.unwrap_or(self.fine_tune_rate);
        let rate = match self.wake_rate_final {
            Some(end) if self.rounds > 1 && start > 0.0 && end > 0.0 => {
                let t = (round.clamp(1, self.rounds) - 1) as f64 / (self.rounds - 1) as f64;
                start * (end / start).powf(t)
            }
            Some(end) if self.rounds <= 1 => end,
            _ => start,
        };
        Learning {
            rate,
            rule: self.update_rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SleepOutcome {
    Accepted(Pattern),
    Exhausted,
}

/// Dreams until one is well-formed (at most `max_dream_retries` times). An
/// accepted dream trains the recognition weights and gains salience; if
/// none is accepted nothing changes.
pub fn filtered_sleep_step<R: Rng + ?Sized>(
    gen: &GenerativeParams,
    rec: &mut RecognitionParams,
    dist: &mut SalienceDistribution,
    cfg: &Stage2Config,
    table: &WellFormedTable,
    rng: &mut R,
) -> Result<SleepOutcome> {
    for _ in 0..cfg.max_dream_retries {
        let dream = generative_pass(gen, rng);
        if table.contains_signs(dream.data()) {
            let pattern = dream.pattern();
            dist.update(&pattern)?;
            apply_recognition_update(rec, &dream, cfg.sleep_learning());
            return Ok(SleepOutcome::Accepted(pattern));
        }
    }
    Ok(SleepOutcome::Exhausted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u64,
    pub accepted: u64,
    pub exhausted: u64,
    pub accuracy: Option<f64>,
    pub distinct_valid: Option<usize>,
    pub kl_from_uniform: f64,
}

/// Mutable state of a stage-II run.
#[derive(Debug, Clone)]
pub struct Stage2State {
    pub gen: GenerativeParams,
    pub rec: RecognitionParams,
    pub salience: SalienceDistribution,
}

/// One round: wake steps on salience-sampled inputs, then filtered sleep
/// attempts. Accuracy is estimated with `eval_rng` when `evaluate` is set.
pub fn stage2_round<R: Rng + ?Sized, E: Rng + ?Sized>(
    state: &mut Stage2State,
    cfg: &Stage2Config,
    table: &WellFormedTable,
    round: u64,
    evaluate: bool,
    rng: &mut R,
    eval_rng: &mut E,
) -> Result<RoundReport> {
    let wake = cfg.wake_learning(round);
    for _ in 0..cfg.wake_steps_per_round {
        let data = state.salience.sample(rng).clone();
        wake_step(&mut state.gen, &state.rec, &data, wake, rng)?;
    }
    let mut accepted = 0;
    let mut exhausted = 0;
    for _ in 0..cfg.sleep_attempts_per_round {
        match filtered_sleep_step(
            &state.gen,
            &mut state.rec,
            &mut state.salience,
            cfg,
            table,
            rng,
        )? {
            SleepOutcome::Accepted(_) => accepted += 1,
            SleepOutcome::Exhausted => exhausted += 1,
        }
    }
    let (accuracy, distinct_valid) = if evaluate {
        let stats = generation_accuracy(&state.gen, cfg.eval_samples, eval_rng)?;
        (Some(stats.accuracy), Some(stats.distinct_valid))
    } else {
        (None, None)
    };
    Ok(RoundReport {
        round,
        accepted,
        exhausted,
        accuracy,
        distinct_valid,
        kl_from_uniform: kl_from_uniform(&state.salience),
    })
}

#[derive(Debug, Clone)]
pub struct Stage2Run {
    pub state: Stage2State,
    pub trace: Vec<RoundReport>,
}

/// Fine-tunes stage-I parameters for `cfg.rounds` rounds starting from a
/// uniform salience over `wellformed`.
pub fn train_stage2<R: Rng + ?Sized, E: Rng + ?Sized>(
    gen: GenerativeParams,
    rec: RecognitionParams,
    wellformed: &[Pattern],
    cfg: &Stage2Config,
    rng: &mut R,
    eval_rng: &mut E,
) -> Result<Stage2Run> {
    cfg.validate()?;
    let table = WellFormedTable::new();
    if let Some(p) = wellformed.iter().find(|p| !table.contains(p)) {
        return Err(HmError::NotWellFormed(p.to_string()));
    }
    let mut state = Stage2State {
        gen,
        rec,
        salience: SalienceDistribution::uniform(wellformed)?,
    };
    let mut trace = Vec::with_capacity(cfg.rounds as usize);
    for round in 1..=cfg.rounds {
        let scheduled = cfg.eval_interval > 0 && round % cfg.eval_interval == 0;
        let report = stage2_round(
            &mut state,
            cfg,
            &table,
            round,
            scheduled || round == cfg.rounds,
            rng,
            eval_rng,
        )?;
        trace.push(report);
    }
    Ok(Stage2Run { state, trace })
}
