//! End-to-end library tests: simulator round trips, reference-scenario
//! properties and model-file reproducibility.

use std::path::PathBuf;

use icsdetect::dataset::{stratified_split, SplitPlan};
use icsdetect::ensemble::{predict, train_pipeline, train_single, PipelineConfig};
use icsdetect::ingest::{parse_delimited, to_dataset, ParseOptions};
use icsdetect::model_io;
use icsdetect::simulator::{generate_dataset, AttackScenario};

fn scenario_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/simics-a.toml")
}

fn load_simics_a() -> AttackScenario {
    let text = std::fs::read_to_string(scenario_path()).expect("scenario file committed to repo");
    AttackScenario::from_toml(&text).expect("scenario parses")
}

fn small_config() -> PipelineConfig {
    PipelineConfig {
        branches: 2,
        sae_hidden: vec![8, 4],
        dnn_hidden: vec![8, 4],
        epochs: 8,
        batch_size: 32,
        ..Default::default()
    }
}

#[test]
fn simics_a_has_five_percent_attacks() {
    let scenario = load_simics_a();
    assert_eq!(scenario.seed, 42);
    assert_eq!(scenario.horizon, 20000);
    let ds = generate_dataset(&scenario, scenario.horizon, scenario.seed).unwrap();
    assert_eq!(ds.n_samples(), 20000);
    let ratio = ds.attack_count() as f64 / ds.n_samples() as f64;
    assert!((ratio - 0.05).abs() <= 0.005, "imbalance ratio {ratio}");
}

#[test]
fn simulator_export_round_trips_bit_exact() {
    let scenario = load_simics_a();
    let ds = generate_dataset(&scenario, 500, 7).unwrap();
    let text = ds.export_delimited(',');
    let table = parse_delimited(&text, ',', None, &ParseOptions::default()).unwrap();
    let back = to_dataset(&table).unwrap();
    assert_eq!(back.features().data(), ds.features().data(), "matrix must round trip");
    assert_eq!(back.labels(), ds.labels());
    assert_eq!(back.feature_names(), ds.feature_names());
}

#[test]
fn generation_is_deterministic_across_calls() {
    let scenario = load_simics_a();
    let a = generate_dataset(&scenario, 2000, scenario.seed).unwrap();
    let b = generate_dataset(&scenario, 2000, scenario.seed).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trained_models_serialize_identically_across_runs() {
    let scenario = load_simics_a();
    let data = generate_dataset(&scenario, 3000, 11).unwrap();
    let config = small_config();
    let a = train_pipeline(
        &stratified_split(&data, &SplitPlan::default(), 0).unwrap().0,
        &config,
    )
    .unwrap();
    let b = train_pipeline(
        &stratified_split(&data, &SplitPlan::default(), 0).unwrap().0,
        &config,
    )
    .unwrap();
    let bytes_a = model_io::ensemble_to_bytes(&a);
    let bytes_b = model_io::ensemble_to_bytes(&b);
    assert_eq!(bytes_a, bytes_b, "same config + seed must produce identical model files");
}

#[test]
fn saved_model_round_trips_and_predicts_identically() {
    let scenario = load_simics_a();
    let data = generate_dataset(&scenario, 3000, 13).unwrap();
    let plan = SplitPlan { repetitions: 1, ..Default::default() };
    let run = train_single(&data, &plan, 0, &small_config()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    model_io::save_ensemble(&path, &run.model).unwrap();
    let loaded = model_io::load_ensemble(&path).unwrap();
    assert_eq!(loaded, run.model);

    let (test_labels_a, probs_a) = predict(&run.model, &data).unwrap();
    let (test_labels_b, probs_b) = predict(&loaded, &data).unwrap();
    assert_eq!(test_labels_a, test_labels_b);
    assert_eq!(probs_a, probs_b);
}

#[test]
fn provenance_links_model_to_its_inputs() {
    let scenario = load_simics_a();
    let data = generate_dataset(&scenario, 3000, 17).unwrap();
    let plan = SplitPlan { repetitions: 2, ..Default::default() };
    let run = train_single(&data, &plan, 1, &small_config()).unwrap();
    let p = &run.model.provenance;
    assert_eq!(p.source_fingerprint, icsdetect::provenance::dataset_fingerprint(&data));
    let split = p.split.expect("split provenance recorded");
    assert_eq!(split.repetition, 1);
    assert_eq!(split.seed, plan.seed);
    assert!(!p.config_hash.is_empty());
}
