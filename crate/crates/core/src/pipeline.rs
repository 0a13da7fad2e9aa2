//! End-to-end runs that produce checkpoints, reports and exports. The CLI is
//! a thin layer over these functions.

use crate::active::{train_stage2, SalienceDistribution, Stage2Config};
use crate::checkpoint::{distribution_csv, Checkpoint, SalienceRecord, Stage, FORMAT_VERSION};
use crate::error::{HmError, Result};
use crate::grammar::enumerate_wellformed;
use crate::metrics::{evaluate, EvalReport};
use crate::rng::{stream, streams};
use crate::train::{train_stage1, TrainConfig};

/// Runs stage I from scratch.
pub fn stage1_checkpoint(cfg: &TrainConfig) -> Result<Checkpoint> {
    let wellformed = enumerate_wellformed();
    let run = train_stage1(cfg, &wellformed)?;
    Ok(Checkpoint {
        format_version: FORMAT_VERSION,
        shape: cfg.shape.clone(),
        stage: Stage::Stage1,
        iteration: cfg.stage1_iterations,
        round: 0,
        seed: cfg.seed,
        rng_state: run.rng,
        generative: run.gen,
        recognition: run.rec,
        salience: None,
        stage1_config: cfg.clone(),
        stage2_config: None,
        stage1_trace: run.trace,
        stage2_trace: Vec::new(),
    })
}

/// Fine-tunes a stage-I checkpoint. `seed` overrides the checkpoint's seed.
pub fn stage2_checkpoint(
    stage1: &Checkpoint,
    cfg: &Stage2Config,
    seed: Option<u64>,
) -> Result<Checkpoint> {
    if stage1.stage != Stage::Stage1 {
        return Err(HmError::Checkpoint(format!(
            "stage II needs a stage1 checkpoint, got {:?}",
            stage1.stage
        )));
    }
    if stage1.shape.data_size() != crate::pattern::PATTERN_LEN {
        return Err(HmError::Shape(format!(
            "stage II needs a data layer of {}, checkpoint has {}",
            crate::pattern::PATTERN_LEN,
            stage1.shape.data_size()
        )));
    }
    let seed = seed.unwrap_or(stage1.seed);
    let wellformed = enumerate_wellformed();
    let mut rng = stream(seed, streams::STAGE2);
    let mut eval_rng = stream(seed, streams::STAGE2_EVAL);
    let run = train_stage2(
        stage1.generative.clone(),
        stage1.recognition.clone(),
        &wellformed,
        cfg,
        &mut rng,
        &mut eval_rng,
    )?;
    Ok(Checkpoint {
        stage: Stage::Stage2,
        round: cfg.rounds,
        seed,
        rng_state: rng,
        generative: run.state.gen,
        recognition: run.state.rec,
        salience: Some(SalienceRecord::from(&run.state.salience)),
        stage2_config: Some(cfg.clone()),
        stage2_trace: run.trace,
        ..stage1.clone()
    })
}

/// Evaluates a checkpoint with `n` dreams. `seed` overrides the
/// checkpoint's seed for the evaluation stream.
pub fn eval_report(
    ckpt: &Checkpoint,
    n: usize,
    fe_samples: usize,
    seed: Option<u64>,
) -> Result<EvalReport> {
    let wellformed = enumerate_wellformed();
    let salience = ckpt.salience_distribution()?;
    let mut rng = stream(seed.unwrap_or(ckpt.seed), streams::EVAL);
    evaluate(
        &ckpt.generative,
        &ckpt.recognition,
        &wellformed,
        salience.as_ref(),
        n,
        fe_samples,
        &mut rng,
    )
}

/// The checkpoint's salience distribution as CSV; a checkpoint without one
/// exports the uniform initial distribution.
pub fn export_distribution(ckpt: &Checkpoint) -> Result<String> {
    let dist = match ckpt.salience_distribution()? {
        Some(d) => d,
        None => SalienceDistribution::uniform(&enumerate_wellformed())?,
    };
    Ok(distribution_csv(&dist))
}
