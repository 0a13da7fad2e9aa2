//! Oracles written independently of the library internals: finite
//! differences of the log densities, a direct grammar checker and a
//! chi-square goodness-of-fit test.

use hmfep::network::{
    log_generative_density, log_recognition_density, CompleteState, GenerativeParams, NetworkShape,
    RecognitionParams,
};
use hmfep::rng::stream;
use hmfep::train::{apply_generative_update, apply_recognition_update, Learning, UpdateRule};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-6;

pub fn random_state<R: Rng>(shape: &NetworkShape, rng: &mut R) -> CompleteState {
    let layers = shape
        .sizes()
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                .collect()
        })
        .collect();
    CompleteState::new(layers).unwrap()
}

fn gen_param_count(gen: &GenerativeParams) -> usize {
    gen.weights
        .iter()
        .map(|w| w.as_slice().len())
        .sum::<usize>()
        + gen.biases.iter().map(Vec::len).sum::<usize>()
        + gen.top_bias.len()
}

fn gen_param(gen: &mut GenerativeParams, mut idx: usize) -> &mut f64 {
    for m in 0..gen.weights.len() {
        let (r, c) = (gen.weights[m].rows(), gen.weights[m].cols());
        if idx < r * c {
            return gen.weights[m].get_mut(idx / c, idx % c);
        }
        idx -= r * c;
        if idx < gen.biases[m].len() {
            return &mut gen.biases[m][idx];
        }
        idx -= gen.biases[m].len();
    }
    &mut gen.top_bias[idx]
}

fn rec_param_count(rec: &RecognitionParams) -> usize {
    rec.weights
        .iter()
        .map(|w| w.as_slice().len())
        .sum::<usize>()
        + rec.biases.iter().map(Vec::len).sum::<usize>()
}

fn rec_param(rec: &mut RecognitionParams, mut idx: usize) -> &mut f64 {
    for m in 0..rec.weights.len() {
        let (r, c) = (rec.weights[m].rows(), rec.weights[m].cols());
        if idx < r * c {
            return rec.weights[m].get_mut(idx / c, idx % c);
        }
        idx -= r * c;
        if idx < rec.biases[m].len() {
            return &mut rec.biases[m][idx];
        }
        idx -= rec.biases[m].len();
    }
    panic!("parameter index out of range")
}

fn close(delta: f64, fd: f64) -> bool {
    (delta - fd).abs() <= REL_TOL * fd.abs().max(1e-3)
}

/// Checks every generative and recognition parameter of one random
/// configuration against a centered finite difference of the negative log
/// density; returns the number of mismatches.
pub fn gradient_mismatches(seed: u64, rule: UpdateRule) -> usize {
    let step = Learning { rate: 1.0, rule };
    let shape = NetworkShape::default();
    let mut rng = stream(seed, 0);
    let gen = GenerativeParams::random(&shape, 2.0, &mut rng);
    let rec = RecognitionParams::random(&shape, 2.0, &mut rng);
    let state = random_state(&shape, &mut rng);
    let mut bad = 0;

    let mut stepped = gen.clone();
    apply_generative_update(&mut stepped, &state, step);
    for i in 0..gen_param_count(&gen) {
        let mut g = gen.clone();
        let base = *gen_param(&mut g, i);
        let delta = base - *gen_param(&mut stepped, i);
        *gen_param(&mut g, i) = base + H;
        let up = -log_generative_density(&g, &state);
        *gen_param(&mut g, i) = base - H;
        let down = -log_generative_density(&g, &state);
        if !close(delta, (up - down) / (2.0 * H)) {
            bad += 1;
        }
    }

    let mut stepped = rec.clone();
    apply_recognition_update(&mut stepped, &state, step);
    for i in 0..rec_param_count(&rec) {
        let mut r = rec.clone();
        let base = *rec_param(&mut r, i);
        let delta = base - *rec_param(&mut stepped, i);
        *rec_param(&mut r, i) = base + H;
        let up = -log_recognition_density(&r, &state);
        *rec_param(&mut r, i) = base - H;
        let down = -log_recognition_density(&r, &state);
        if !close(delta, (up - down) / (2.0 * H)) {
            bad += 1;
        }
    }
    bad
}

/// Well-formedness written directly against the rule text, independently of
/// the grammar module.
pub fn grammar_oracle(bits: &[u8]) -> bool {
    let s: String = bits
        .iter()
        .map(|b| if *b == 1 { '1' } else { '0' })
        .collect();
    s.starts_with('1')
        && !s.contains("00100")
        && !s.starts_with("100")
        && !s.ends_with("001")
        && !s.contains("0000")
}

/// Upper-tail p-value of Pearson's statistic against equal expected counts.
pub fn chi_square_p(counts: &[u64], expected: f64) -> f64 {
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
}
