//! JSON checkpoints, reports and exports.
//!
//! Reals are written by `serde_json` as the shortest decimal that round-trips
//! to the same `f64`, so save → load → save is byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::active::{RoundReport, SalienceDistribution, Stage2Config};
use crate::error::{HmError, Result};
use crate::grammar::enumerate_wellformed;
use crate::network::{GenerativeParams, NetworkShape, RecognitionParams};
use crate::pattern::Pattern;
use crate::rng::HmRng;
use crate::train::{TrainConfig, TrainTrace};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    Stage1,
    Stage2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SalienceRecord {
    pub patterns: Vec<Pattern>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl From<&SalienceDistribution> for SalienceRecord {
    fn from(d: &SalienceDistribution) -> Self {
        Self {
            patterns: d.patterns().to_vec(),
            counts: d.counts().to_vec(),
            total: d.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub shape: NetworkShape,
    pub stage: Stage,
    pub iteration: u64,
    pub round: u64,
    pub seed: u64,
    /// Training stream positioned after the last step.
    pub rng_state: HmRng,
    pub generative: GenerativeParams,
    pub recognition: RecognitionParams,
    pub salience: Option<SalienceRecord>,
    pub stage1_config: TrainConfig,
    pub stage2_config: Option<Stage2Config>,
    pub stage1_trace: TrainTrace,
    pub stage2_trace: Vec<RoundReport>,
}

impl Checkpoint {
    /// Checks every structural invariant, reporting the first failure.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HmError::Checkpoint(msg));
        if self.format_version != FORMAT_VERSION {
            return fail(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.shape != self.stage1_config.shape {
            return fail("shape differs from stage1_config.shape".into());
        }
        self.generative
            .validate(&self.shape)
            .map_err(|e| HmError::Checkpoint(format!("generative: {e}")))?;
        self.recognition
            .validate(&self.shape)
            .map_err(|e| HmError::Checkpoint(format!("recognition: {e}")))?;
        match (self.stage, &self.salience, &self.stage2_config) {
            (Stage::Stage2, Some(_), Some(_)) => {}
            (Stage::Stage2, None, _) => return fail("stage2 checkpoint without salience".into()),
            (Stage::Stage2, _, None) => {
                return fail("stage2 checkpoint without stage2_config".into())
            }
            (_, Some(_), _) => return fail("salience present before stage2".into()),
            _ => {}
        }
        if let Some(s) = &self.salience {
            self.salience_distribution_from(s)?;
        }
        if self
            .stage1_trace
            .records
            .windows(2)
            .any(|w| w[0].iteration >= w[1].iteration)
        {
            return fail("stage1_trace iterations not strictly increasing".into());
        }
        Ok(())
    }

    fn salience_distribution_from(&self, s: &SalienceRecord) -> Result<SalienceDistribution> {
        if s.patterns.iter().any(|p| p.len() != self.shape.data_size()) {
            return Err(HmError::Checkpoint(
                "salience pattern length differs from data layer".into(),
            ));
        }
        if s.patterns != enumerate_wellformed() {
            return Err(HmError::Checkpoint(
                "salience support is not the well-formed set".into(),
            ));
        }
        let dist = SalienceDistribution::from_counts(s.patterns.clone(), s.counts.clone())
            .map_err(|e| HmError::Checkpoint(format!("salience: {e}")))?;
        if dist.total() != s.total {
            return Err(HmError::Checkpoint(format!(
                "salience total {} does not equal the sum of counts {}",
                s.total,
                dist.total()
            )));
        }
        Ok(dist)
    }

    pub fn salience_distribution(&self) -> Result<Option<SalienceDistribution>> {
        self.salience
            .as_ref()
            .map(|s| self.salience_distribution_from(s))
            .transpose()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Self = serde_json::from_str(text)
            .map_err(|e| HmError::Checkpoint(format!("malformed JSON: {e}")))?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// One word per line, in the order given.
pub fn grammar_listing(patterns: &[Pattern]) -> String {
    patterns.iter().map(|p| format!("{p}\n")).collect()
}

/// CSV of `pattern,count,probability` in lexicographic pattern order.
pub fn distribution_csv(dist: &SalienceDistribution) -> String {
    let total = dist.total() as f64;
    let mut out = String::from("pattern,count,probability\n");
    for (p, c) in dist.iter() {
        out.push_str(&format!("{p},{c},{}\n", c as f64 / total));
    }
    out
}
