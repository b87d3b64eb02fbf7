#![allow(dead_code)]

pub mod criteria;
pub mod gen;
pub mod oracle;

use std::path::PathBuf;

use neolex_core::config::{HarnessConfig, ResolvedConfig};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn smoke_config() -> ResolvedConfig {
    HarnessConfig::load(Some(&fixture("smoke.toml"))).expect("smoke config loads")
}
