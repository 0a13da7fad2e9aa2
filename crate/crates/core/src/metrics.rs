//! Evaluation: generation accuracy, dream diversity, free-energy
//! decomposition and divergence of the salience distribution.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::active::SalienceDistribution;
use crate::error::{HmError, Result};
use crate::grammar::WellFormedTable;
use crate::network::{
    generative_layer_log_probs, generative_pass, log_recognition_density, recognition_pass,
    GenerativeParams, RecognitionParams,
};
use crate::pattern::Pattern;

/// Summary of a batch of unconstrained dreams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStats {
    pub accuracy: f64,
    pub n_samples: usize,
    pub valid: usize,
    pub distinct_valid: usize,
    /// Shannon entropy (nats) of the dream-pattern histogram, valid or not.
    pub dream_entropy: f64,
}

impl AccuracyStats {
    /// Computes the statistics from a raw dream log.
    pub fn from_dreams(dreams: &[Pattern], table: &WellFormedTable) -> Self {
        // Ordered so the entropy sum is reproducible across runs.
        let mut counts: BTreeMap<&Pattern, usize> = BTreeMap::new();
        for d in dreams {
            *counts.entry(d).or_default() += 1;
        }
        let n = dreams.len();
        let valid = dreams.iter().filter(|d| table.contains(d)).count();
        let distinct_valid = counts.keys().filter(|d| table.contains(d)).count();
        let dream_entropy = entropy(counts.values().copied(), n);
        Self {
            accuracy: valid as f64 / n as f64,
            n_samples: n,
            valid,
            distinct_valid,
            dream_entropy,
        }
    }
}

fn entropy(counts: impl Iterator<Item = usize>, n: usize) -> f64 {
    let n = n as f64;
    let h: f64 = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let q = c as f64 / n;
            -q * q.ln()
        })
        .sum();
    // A point mass gives -1·ln 1 = -0.0.
    h.max(0.0)
}

/// Draws `n` dreams and returns them as data-layer patterns.
pub fn dream_patterns<R: Rng + ?Sized>(
    gen: &GenerativeParams,
    n: usize,
    rng: &mut R,
) -> Vec<Pattern> {
    (0..n)
        .map(|_| generative_pass(gen, rng).pattern())
        .collect()
}

/// Fraction of `n` unconstrained dreams whose data layer is well-formed.
pub fn generation_accuracy<R: Rng + ?Sized>(
    gen: &GenerativeParams,
    n: usize,
    rng: &mut R,
) -> Result<AccuracyStats> {
    if n == 0 {
        return Err(HmError::Config("need at least one dream".into()));
    }
    let dreams = dream_patterns(gen, n, rng);
    Ok(AccuracyStats::from_dreams(&dreams, &WellFormedTable::new()))
}

/// Complexity and accuracy terms of the free energy for one data pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeDecomposition {
    /// `mean[log Q(α|d) − log P(α)]`
    pub complexity: f64,
    /// `mean[log P(d|α)]`
    pub accuracy_term: f64,
}

impl FeDecomposition {
    pub fn free_energy(&self) -> f64 {
        self.complexity - self.accuracy_term
    }
}

/// Splits the free-energy estimate into complexity minus accuracy over
/// `n_samples` recognition draws for `data`.
pub fn fe_decomposition<R: Rng + ?Sized>(
    gen: &GenerativeParams,
    rec: &RecognitionParams,
    data: &Pattern,
    n_samples: usize,
    rng: &mut R,
) -> Result<FeDecomposition> {
    if n_samples == 0 {
        return Err(HmError::Config("n_samples must be at least 1".into()));
    }
    let mut complexity = 0.0;
    let mut accuracy_term = 0.0;
    for _ in 0..n_samples {
        let state = recognition_pass(rec, data, rng)?;
        let layers = generative_layer_log_probs(gen, &state);
        let log_prior: f64 = layers[1..].iter().sum();
        complexity += log_recognition_density(rec, &state) - log_prior;
        accuracy_term += layers[0];
    }
    let n = n_samples as f64;
    Ok(FeDecomposition {
        complexity: complexity / n,
        accuracy_term: accuracy_term / n,
    })
}

/// `KL(salience ‖ uniform over its support)`.
pub fn kl_from_uniform(dist: &SalienceDistribution) -> f64 {
    let total = dist.total() as f64;
    let support = dist.len() as f64;
    dist.iter()
        .map(|(_, w)| {
            let q = w as f64 / total;
            q * (q * support).ln()
        })
        .sum()
}

/// Full evaluation of a parameter snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n_samples: usize,
    pub distinct_valid: usize,
    pub dream_entropy: f64,
    pub coverage: f64,
    pub fe_mean: f64,
    pub fe_stderr: f64,
    pub kl_salience_uniform: f64,
}

/// Evaluates `n` dreams and the free energy averaged over the well-formed
/// set (`fe_samples` recognition draws per pattern).
pub fn evaluate<R: Rng + ?Sized>(
    gen: &GenerativeParams,
    rec: &RecognitionParams,
    wellformed: &[Pattern],
    salience: Option<&SalienceDistribution>,
    n: usize,
    fe_samples: usize,
    rng: &mut R,
) -> Result<EvalReport> {
    if wellformed.is_empty() {
        return Err(HmError::Config("empty well-formed set".into()));
    }
    let stats = generation_accuracy(gen, n, rng)?;
    let mut per_pattern = Vec::with_capacity(wellformed.len());
    for p in wellformed {
        per_pattern.push(crate::network::estimate_free_energy(
            gen, rec, p, fe_samples, rng,
        )?);
    }
    // Stratified mean over patterns; variances of the per-pattern means add.
    let k = per_pattern.len() as f64;
    let fe_mean = per_pattern.iter().map(|e| e.mean).sum::<f64>() / k;
    let fe_stderr = per_pattern
        .iter()
        .map(|e| e.std_error.powi(2))
        .sum::<f64>()
        .sqrt()
        / k;
    Ok(EvalReport {
        accuracy: stats.accuracy,
        n_samples: stats.n_samples,
        distinct_valid: stats.distinct_valid,
        dream_entropy: stats.dream_entropy,
        coverage: stats.distinct_valid as f64 / wellformed.len() as f64,
        fe_mean,
        fe_stderr,
        kl_salience_uniform: salience.map_or(0.0, kl_from_uniform),
    })
}
