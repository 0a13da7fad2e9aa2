//! Helpers shared between integration-test targets. Not every target uses
//! every helper.
#![allow(dead_code)]

pub mod oracle;
pub mod props;
