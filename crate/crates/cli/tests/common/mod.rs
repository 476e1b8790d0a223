#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

/// Fixture name and the command that reads it.
pub const GOLDEN: &[(&str, &str)] = &[
    ("laplace", "symbol"),
    ("full", "symbol"),
    ("so2", "symbol"),
    ("killing", "complete"),
    ("uxx_uxy", "complete"),
    ("uxx_uyy", "complete"),
    ("constants", "complete"),
    ("oneform", "mv"),
    ("oneform_plane", "mv"),
    ("metric", "mv"),
    ("zero_rule", "mv"),
    ("darboux", "flag"),
    ("contact3", "flag"),
    ("integrable_pair", "flag"),
];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.forge"))
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"))
}

pub fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(args)
        .output()
        .expect("forge runs")
}

pub fn json_report(name: &str, command: &str, seed: &str) -> Output {
    let path = fixture(name);
    forge(&[command, path.to_str().unwrap(), "--json", "--seed", seed])
}
