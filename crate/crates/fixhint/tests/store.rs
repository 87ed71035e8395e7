use std::fs;
use std::path::Path;

use fixhint::io::{ingest_gitlog, ingest_reports};
use fixhint::linker::{default_patterns, extract_links};
use fixhint::store::{bundle_to_json, load_bundle, save_bundle};
use fixhint::Error;
use fixhint_core::bundle::{train_bundle, ModelBundle, TrainConfig};
use fixhint_core::topics::LdaConfig;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn trained() -> ModelBundle {
    let reports = ingest_reports(&fixture("reports.jsonl")).unwrap();
    let cfg = TrainConfig {
        lda: LdaConfig { num_topics: 3, alpha: 0.1, beta: 0.01, iterations: 100, seed: 0 },
        ..Default::default()
    };
    let mut b = train_bundle(&reports, cfg, 42).unwrap();
    let commits = ingest_gitlog(&fixture("history.gitlog")).unwrap();
    b.set_links(extract_links(&commits, &default_patterns()).unwrap(), &commits);
    b.summarize();
    b
}

#[test]
fn save_then_load_is_equal() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    let mut b = trained();
    b.features[0].theta[0] = 0.1 + 0.2;
    b.topic_model.phi[0][0] = 1.0 / 3.0;
    b.topic_model.alpha = 5e-324;
    save_bundle(&b, &p).unwrap();
    let back = load_bundle(&p).unwrap();
    assert_eq!(back, b);
    assert_eq!(bundle_to_json(&back), fs::read_to_string(&p).unwrap());
}

#[test]
fn version_mismatch_names_both_versions() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    let mut json: serde_json::Value = serde_json::from_str(&bundle_to_json(&trained())).unwrap();
    json["schema_version"] = 99.into();
    fs::write(&p, json.to_string()).unwrap();
    let e = load_bundle(&p).unwrap_err();
    assert!(matches!(e, Error::Version { found: 99, expected: 1, .. }));
    let msg = e.to_string();
    assert!(msg.contains("99") && msg.contains('1'), "{msg}");
}

#[test]
fn truncated_file_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    let text = bundle_to_json(&trained());
    fs::write(&p, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_bundle(&p).unwrap_err(), Error::Corrupt { .. }));
    fs::write(&p, "").unwrap();
    assert!(matches!(load_bundle(&p).unwrap_err(), Error::Corrupt { .. }));
}

#[test]
fn top_level_key_is_schema_version() {
    let v: serde_json::Value = serde_json::from_str(&bundle_to_json(&trained())).unwrap();
    assert_eq!(v["schema_version"], 1);
}
