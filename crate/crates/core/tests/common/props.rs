//! Property suites shared by the `properties` and `acceptance` targets.
//!
//! Each suite runs a deterministic proptest runner for [`CASES`] cases and
//! returns the failing input, if any, as a message.

use hmfep::checkpoint::{Checkpoint, SalienceRecord, Stage, FORMAT_VERSION};
use hmfep::grammar::enumerate_wellformed;
use hmfep::metrics::{fe_decomposition, kl_from_uniform};
use hmfep::network::{
    estimate_free_energy, log_generative_density, log_recognition_density, log_sigmoid,
    unit_probability, CompleteState, GenerativeParams, NetworkShape, RecognitionParams, Spin,
};
use hmfep::pattern::{Pattern, PATTERN_LEN};
use hmfep::rng::stream;
use hmfep::train::{generative_delta, TrainConfig, TrainTrace, UpdateRule};
use hmfep::{SalienceDistribution, Stage2Config};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub const CASES: u32 = 1_000;

fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

fn spin() -> impl Strategy<Value = Spin> {
    prop_oneof![Just(1 as Spin), Just(-1 as Spin)]
}

fn pattern() -> impl Strategy<Value = Pattern> {
    (0u32..1024).prop_map(|i| Pattern::from_index(i, PATTERN_LEN))
}

fn shape() -> impl Strategy<Value = NetworkShape> {
    prop::collection::vec(1usize..6, 2..5).prop_map(|s| NetworkShape::new(s).unwrap())
}

fn state_for(shape: &NetworkShape, bits: &[bool]) -> CompleteState {
    let mut it = bits.iter().cycle();
    let layers = shape
        .sizes()
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| if *it.next().unwrap() { 1 } else { -1 })
                .collect()
        })
        .collect();
    CompleteState::new(layers).unwrap()
}

/// The literal rule equals the gradient rule for an active target and
/// differs by exactly one parent spin (weights) or one (bias) otherwise.
pub fn delta_two_case_identity() -> Result<(), String> {
    run((spin(), spin(), 1e-9f64..1.0 - 1e-9), |(sp, st, p)| {
        let lit = generative_delta(sp, st, p, UpdateRule::PaperLiteral);
        let ex = generative_delta(sp, st, p, UpdateRule::ExactGradient);
        if st == 1 {
            prop_assert_eq!(lit, ex);
        } else {
            prop_assert!((lit.bias - (ex.bias + 1.0)).abs() < 1e-15);
            prop_assert!((lit.weight - (ex.weight + f64::from(sp))).abs() < 1e-15);
        }
        prop_assert_eq!(ex.weight, f64::from(sp) * ex.bias);
        Ok(())
    })
}

/// Counts start at one, grow by one per update, and always sum to the total.
pub fn salience_counting_invariants() -> Result<(), String> {
    let wf = enumerate_wellformed();
    let w = wf.len();
    run(prop::collection::vec(0..w, 0..300), move |updates| {
        let mut dist = SalienceDistribution::uniform(&wf).unwrap();
        let mut expected = vec![1u64; w];
        for &i in &updates {
            dist.update(&wf[i]).unwrap();
            expected[i] += 1;
        }
        prop_assert_eq!(dist.counts(), expected.as_slice());
        prop_assert_eq!(dist.total(), (w + updates.len()) as u64);
        prop_assert_eq!(dist.counts().iter().sum::<u64>(), dist.total());
        let mass: f64 = wf.iter().map(|p| dist.probability(p)).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        Ok(())
    })?;
    run(pattern(), |p| {
        let wf = enumerate_wellformed();
        let mut dist = SalienceDistribution::uniform(&wf).unwrap();
        let outcome = dist.update(&p);
        prop_assert_eq!(outcome.is_ok(), wf.contains(&p));
        prop_assert_eq!(dist.total(), wf.len() as u64 + u64::from(outcome.is_ok()));
        Ok(())
    })
}

/// Complexity minus accuracy reproduces the free-energy estimate drawn
/// from the same stream.
pub fn fe_decomposition_identity() -> Result<(), String> {
    run(
        (any::<u64>(), 0.0f64..4.0, pattern(), 1usize..8),
        |(seed, scale, data, n)| {
            let shape = NetworkShape::default();
            let gen = GenerativeParams::random(&shape, scale, &mut stream(seed, 0));
            let rec = RecognitionParams::random(&shape, scale, &mut stream(seed, 1));
            let fe = fe_decomposition(&gen, &rec, &data, n, &mut stream(seed, 2)).unwrap();
            let est = estimate_free_energy(&gen, &rec, &data, n, &mut stream(seed, 2)).unwrap();
            let tol = 1e-12 * (1.0 + est.mean.abs());
            prop_assert!(
                (fe.free_energy() - est.mean).abs() <= tol,
                "{} vs {}",
                fe.free_energy(),
                est.mean
            );
            prop_assert!(fe.accuracy_term <= 0.0);
            Ok(())
        },
    )
}

/// KL from uniform is non-negative and vanishes exactly for equal counts.
pub fn kl_non_negativity() -> Result<(), String> {
    let wf = enumerate_wellformed();
    let w = wf.len();
    run(prop::collection::vec(1u64..50, w), move |counts| {
        let dist = SalienceDistribution::from_counts(wf.clone(), counts.clone()).unwrap();
        let kl = kl_from_uniform(&dist);
        prop_assert!(kl >= -1e-12, "kl = {}", kl);
        prop_assert!(kl <= (w as f64).ln() + 1e-12);
        if counts.iter().all(|&c| c == counts[0]) {
            prop_assert!(kl.abs() < 1e-12);
        } else {
            prop_assert!(kl > 0.0);
        }
        Ok(())
    })?;
    let wf = enumerate_wellformed();
    run(1u64..1_000_000, move |c| {
        let dist = SalienceDistribution::from_counts(wf.clone(), vec![c; wf.len()]).unwrap();
        prop_assert!(kl_from_uniform(&dist).abs() < 1e-12);
        Ok(())
    })
}

/// `σ(a) + σ(−a) = 1` and `log σ(a) − log σ(−a) = a`.
pub fn sigmoid_symmetry() -> Result<(), String> {
    run(-700.0f64..700.0, |a| {
        prop_assert!((unit_probability(a) + unit_probability(-a) - 1.0).abs() < 1e-15);
        prop_assert!((log_sigmoid(a) - log_sigmoid(-a) - a).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert!(log_sigmoid(a) <= 0.0 && log_sigmoid(a).is_finite());
        Ok(())
    })
}

/// With all parameters zero every unit is a fair coin.
pub fn zero_parameter_closed_form() -> Result<(), String> {
    run(
        (shape(), prop::collection::vec(any::<bool>(), 1..32)),
        |(shape, bits)| {
            let state = state_for(&shape, &bits);
            let ln2 = std::f64::consts::LN_2;
            let log_p = log_generative_density(&GenerativeParams::zeros(&shape), &state);
            let log_q = log_recognition_density(&RecognitionParams::zeros(&shape), &state);
            prop_assert!((log_p + shape.total_units() as f64 * ln2).abs() < 1e-12);
            prop_assert!((log_q + shape.hidden_units() as f64 * ln2).abs() < 1e-12);
            Ok(())
        },
    )
}

/// Serialization is a pure function of the checkpoint, and loading a saved
/// checkpoint reproduces it byte for byte.
pub fn checkpoint_serialization_determinism() -> Result<(), String> {
    let wf = enumerate_wellformed();
    run(
        (
            any::<u64>(),
            0.0f64..10.0,
            prop::option::of(prop::collection::vec(0usize..256, 0..50)),
        ),
        move |(seed, scale, updates)| {
            let cfg = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let shape = cfg.shape.clone();
            let salience = updates.as_ref().map(|u| {
                let mut d = SalienceDistribution::uniform(&wf).unwrap();
                u.iter().for_each(|&i| d.update(&wf[i]).unwrap());
                SalienceRecord::from(&d)
            });
            let stage2 = salience.is_some();
            let ckpt = Checkpoint {
                format_version: FORMAT_VERSION,
                shape: shape.clone(),
                stage: if stage2 { Stage::Stage2 } else { Stage::Stage1 },
                iteration: seed % 1000,
                round: 0,
                seed,
                rng_state: stream(seed, 7),
                generative: GenerativeParams::random(&shape, scale, &mut stream(seed, 0)),
                recognition: RecognitionParams::random(&shape, scale, &mut stream(seed, 1)),
                salience,
                stage1_config: cfg,
                stage2_config: stage2.then(Stage2Config::default),
                stage1_trace: TrainTrace::default(),
                stage2_trace: Vec::new(),
            };
            let a = ckpt.to_json().unwrap();
            prop_assert_eq!(&a, &ckpt.clone().to_json().unwrap());
            let back = Checkpoint::from_json(&a).unwrap();
            prop_assert_eq!(&back, &ckpt);
            prop_assert_eq!(back.to_json().unwrap(), a);
            Ok(())
        },
    )
}

pub type Suite = fn() -> Result<(), String>;

/// Every suite, by name.
pub fn all_suites() -> Vec<(&'static str, Suite)> {
    vec![
        ("delta-rule two-case identity", delta_two_case_identity),
        ("salience counting invariants", salience_counting_invariants),
        (
            "free-energy decomposition identity",
            fe_decomposition_identity,
        ),
        ("KL non-negativity", kl_non_negativity),
        ("sigmoid symmetry", sigmoid_symmetry),
        ("zero-parameter closed form", zero_parameter_closed_form),
        (
            "checkpoint serialization determinism",
            checkpoint_serialization_determinism,
        ),
    ]
}
