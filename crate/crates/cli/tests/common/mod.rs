#![allow(dead_code)]

use nvsqueeze_cli::{run, Command, Context};
use std::path::PathBuf;

/// Every shipped recipe and the subcommand it feeds.
pub const RECIPES: &[(&str, Command)] = &[
    ("eight_spin", Command::Simulate),
    ("verify_1a", Command::VerifySequence),
    ("verify_2a", Command::VerifySequence),
    ("gap", Command::Gap),
    ("project_check", Command::ProjectCheck),
    ("squeeze", Command::Squeeze),
    ("sensitivity", Command::Sensitivity),
    ("sweep_f023", Command::Sweep),
    ("sweep_f090", Command::Sweep),
];

pub fn recipes_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../recipes")
}

pub fn run_recipe(name: &str, cmd: Command) -> String {
    let ctx = Context::load(&recipes_dir().join(format!("{name}.toml")), None, None).unwrap();
    let out = run(cmd, &ctx).unwrap();
    assert!(out.violation.is_none(), "{name}: {:?}", out.violation);
    out.text
}

pub fn run_recipe_threads(name: &str, cmd: Command, threads: usize) -> String {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_recipe(name, cmd))
}
