//! Well-formedness rules for rhythmic binary words (1 = attack, 0 = rest).
//!
//! - R1: the word starts with an attack.
//! - R2: no isolated attack `00100` anywhere, no `100` prefix, no `001` suffix.
//! - R3: no extended break `0000`.

use serde::{Deserialize, Serialize};

use crate::error::{HmError, Result};
use crate::pattern::{Pattern, PATTERN_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleId {
    R1Start,
    R2IsolatedMid,
    R2IsolatedStart,
    R2IsolatedEnd,
    R3Break,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleViolation {
    pub rule: RuleId,
    /// Index where the offending window begins.
    pub position: usize,
}

const ISOLATED: [u8; 5] = [0, 0, 1, 0, 0];
const ISOLATED_START: [u8; 3] = [1, 0, 0];
const ISOLATED_END: [u8; 3] = [0, 0, 1];
const BREAK: [u8; 4] = [0, 0, 0, 0];

fn check_len(p: &Pattern) -> Result<()> {
    if p.len() != PATTERN_LEN {
        return Err(HmError::Shape(format!(
            "pattern {p} has length {}, expected {PATTERN_LEN}",
            p.len()
        )));
    }
    Ok(())
}

/// All rule violations of `p`, ordered by window position.
pub fn violations(p: &Pattern) -> Result<Vec<RuleViolation>> {
    check_len(p)?;
    let bits = p.bits();
    let mut out = Vec::new();
    if bits[0] != 1 {
        out.push(RuleViolation {
            rule: RuleId::R1Start,
            position: 0,
        });
    }
    if bits.starts_with(&ISOLATED_START) {
        out.push(RuleViolation {
            rule: RuleId::R2IsolatedStart,
            position: 0,
        });
    }
    for (i, w) in bits.windows(ISOLATED.len()).enumerate() {
        if w == ISOLATED {
            out.push(RuleViolation {
                rule: RuleId::R2IsolatedMid,
                position: i,
            });
        }
    }
    for (i, w) in bits.windows(BREAK.len()).enumerate() {
        if w == BREAK {
            out.push(RuleViolation {
                rule: RuleId::R3Break,
                position: i,
            });
        }
    }
    if bits.ends_with(&ISOLATED_END) {
        out.push(RuleViolation {
            rule: RuleId::R2IsolatedEnd,
            position: bits.len() - ISOLATED_END.len(),
        });
    }
    // Stable: equal positions keep rule order above.
    out.sort_by_key(|v| v.position);
    Ok(out)
}

pub fn is_well_formed(p: &Pattern) -> Result<bool> {
    check_len(p)?;
    let bits = p.bits();
    let contains = |needle: &[u8]| bits.windows(needle.len()).any(|w| w == needle);
    Ok(bits[0] == 1
        && !bits.starts_with(&ISOLATED_START)
        && !bits.ends_with(&ISOLATED_END)
        && !contains(&ISOLATED)
        && !contains(&BREAK))
}

/// Every well-formed word, in lexicographic order.
pub fn enumerate_wellformed() -> Vec<Pattern> {
    (0..1u32 << PATTERN_LEN)
        .map(|i| Pattern::from_index(i, PATTERN_LEN))
        .filter(|p| is_well_formed(p).unwrap_or(false))
        .collect()
}

/// Membership lookup over all `2^PATTERN_LEN` words.
#[derive(Debug, Clone)]
pub struct WellFormedTable {
    valid: Vec<bool>,
}

impl WellFormedTable {
    pub fn new() -> Self {
        let valid = (0..1u32 << PATTERN_LEN)
            .map(|i| is_well_formed(&Pattern::from_index(i, PATTERN_LEN)).unwrap_or(false))
            .collect();
        Self { valid }
    }

    pub fn contains(&self, p: &Pattern) -> bool {
        p.len() == PATTERN_LEN && self.valid[p.index() as usize]
    }

    pub fn contains_signs(&self, signs: &[i8]) -> bool {
        signs.len() == PATTERN_LEN
            && self.valid[signs
                .iter()
                .fold(0usize, |acc, &s| (acc << 1) | usize::from(s > 0))]
    }
}

impl Default for WellFormedTable {
    fn default() -> Self {
        Self::new()
    }
}
