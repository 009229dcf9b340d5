use std::path::PathBuf;

use fairdiv::experiment::{run_experiment, ExperimentConfig};
use fairdiv::MechanismKind;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::read(path).unwrap()
}

#[test]
fn shipped_configs_match_presets() {
    assert_eq!(config("desk.toml"), ExperimentConfig::desk_scale(20_240_601));
    assert_eq!(config("full.toml"), ExperimentConfig::full_scale(20_240_601));
}

/// Hours of CPU time; run with `cargo test --release -- --ignored full_scale`.
#[test]
#[ignore]
fn full_scale_anchors() {
    let rows = run_experiment(&config("full.toml")).unwrap();
    assert_eq!(rows.len(), 30);
    let envy = rows
        .iter()
        .find(|r| r.mechanism == MechanismKind::Envy && r.m == 100)
        .unwrap();
    assert!((envy.mean_utilitarian_ratio - 0.7).abs() <= 0.05, "{}", envy.mean_utilitarian_ratio);
    assert!((envy.mean_egalitarian_ratio - 0.95).abs() <= 0.05, "{}", envy.mean_egalitarian_ratio);
}
