use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HmError, Result};

/// Length of the rhythmic words used throughout the experiment.
pub const PATTERN_LEN: usize = 10;

/// A binary word on the data layer.
///
/// Displayed over `{0,1}`; the network sees the sign form where `0 -> -1`
/// and `1 -> +1`. Ordering is lexicographic on the bit string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    bits: Vec<u8>,
}

impl Pattern {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(HmError::PatternParse(format!("bit value {b}")));
        }
        Ok(Self { bits })
    }

    pub fn from_signs(signs: &[i8]) -> Self {
        Self {
            bits: signs.iter().map(|&s| u8::from(s > 0)).collect(),
        }
    }

    /// The `len`-bit word whose most significant bit is position 0.
    pub fn from_index(index: u32, len: usize) -> Self {
        let bits = (0..len)
            .map(|i| ((index >> (len - 1 - i)) & 1) as u8)
            .collect();
        Self { bits }
    }

    pub fn index(&self) -> u32 {
        self.bits
            .iter()
            .fold(0, |acc, &b| (acc << 1) | u32::from(b))
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn sign_form(&self) -> Vec<i8> {
        self.bits
            .iter()
            .map(|&b| if b == 1 { 1 } else { -1 })
            .collect()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = HmError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(HmError::PatternParse(s.to_string())),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { bits })
    }
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
