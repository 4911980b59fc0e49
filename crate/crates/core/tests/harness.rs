mod common;

use std::fs;

use repairforge::engines::{RepairConfig, RepairStatus};
use repairforge::harness::{
    discover_bundles, load_bundle, parse_manifest, parse_records, run_experiment, run_job,
    write_experiment, BundleError, ExperimentPlan,
};
use repairforge::lang::EngineKind;

use common::{copy_bundle, corpus_bundle, corpus_dir, fixture_bundle, fixture_dir, with_big_stack};

#[test]
fn corpus_loads_in_name_order() {
    let dirs = discover_bundles(&corpus_dir()).unwrap();
    let names: Vec<String> = dirs
        .iter()
        .map(|d| d.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names.len(), 13);
    for dir in &dirs {
        let b = load_bundle(dir).unwrap();
        assert_eq!(b.id, dir.file_name().unwrap().to_string_lossy());
        assert!(b.reference_patch.is_some(), "{}", b.id);
    }
}

#[test]
fn unknown_failing_test_is_a_manifest_error() {
    let dir = copy_bundle(&corpus_dir().join("M8A"));
    let path = dir.path().join("manifest.json");
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("test_draw_length", "test_missing");
    fs::write(&path, text).unwrap();
    assert!(
        matches!(load_bundle(dir.path()), Err(BundleError::Manifest(m)) if m.contains("test_missing"))
    );
}

#[test]
fn declared_failing_test_that_passes_is_rejected() {
    match load_bundle(&fixture_dir("passing")) {
        Err(BundleError::Validation { expected, observed }) => {
            assert_eq!(expected, vec!["test_one".to_string()]);
            assert!(observed.is_empty());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn nondet_in_program_sources_is_rejected() {
    let dir = copy_bundle(&corpus_dir().join("DIV0A"));
    fs::write(
        dir.path().join("src/extra.mini"),
        "fn coin() { return nondet(); }\n",
    )
    .unwrap();
    assert!(
        matches!(load_bundle(dir.path()), Err(BundleError::Invalid(m)) if m.contains("nondet"))
    );
}

#[test]
fn syntax_errors_name_the_file() {
    let dir = copy_bundle(&corpus_dir().join("M8A"));
    fs::write(
        dir.path().join("tests/draw.mini"),
        "fn test_x() { assert ; }\n",
    )
    .unwrap();
    match load_bundle(dir.path()) {
        Err(BundleError::Syntax { file, .. }) => assert_eq!(file, "tests/draw.mini"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn broken_reference_patch_is_rejected() {
    let dir = copy_bundle(&corpus_dir().join("M50A"));
    fs::write(
        dir.path().join("reference/patch.diff"),
        "--- a\n+++ b\n@@ -1,1 +1,1 @@\n-nothing\n+here\n",
    )
    .unwrap();
    assert!(matches!(
        load_bundle(dir.path()),
        Err(BundleError::Invalid(_))
    ));
}

#[test]
fn manifest_needs_failing_tests() {
    assert!(parse_manifest("{\"id\": \"X\"}").is_err());
    let m = parse_manifest("{\"id\": \"X\", \"failing_tests\": [\"test_a\"]}").unwrap();
    assert!(m.engines_expected.is_empty());
    assert!(!m.labels.underspecified);
}

fn subset() -> Vec<repairforge::harness::BugBundle> {
    ["M8A", "C5A", "L55A", "M50A", "DIV0A", "C21A"]
        .into_iter()
        .map(corpus_bundle)
        .collect()
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let plan = |workers| ExperimentPlan {
        bundles: subset(),
        engines: EngineKind::ALL.to_vec(),
        config: RepairConfig::default(),
        workers,
    };
    let one = run_experiment(&plan(1));
    let four = run_experiment(&plan(4));
    assert_eq!(one.len(), 18);
    let fp = |rs: &[repairforge::harness::ExperimentRecord]| {
        rs.iter().map(|r| r.fingerprint()).collect::<Vec<_>>()
    };
    assert_eq!(fp(&one), fp(&four));
    let keys: Vec<_> = one.iter().map(|r| (r.bundle.clone(), r.engine)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn records_round_trip_through_disk() {
    let records = with_big_stack(|| {
        let plan = ExperimentPlan {
            bundles: subset(),
            engines: vec![EngineKind::Kali, EngineKind::Nopol],
            config: RepairConfig::default(),
            workers: 2,
        };
        run_experiment(&plan)
    });
    let dir = tempfile::tempdir().unwrap();
    write_experiment(dir.path(), &records).unwrap();
    let text = fs::read_to_string(dir.path().join("results.ndjson")).unwrap();
    assert_eq!(parse_records(&text).unwrap(), records);
    for r in records.iter().filter(|r| r.fixed()) {
        let path = dir
            .path()
            .join("patches")
            .join(format!("{}-{}.diff", r.bundle, r.engine));
        assert_eq!(
            fs::read_to_string(path).unwrap(),
            r.patch_diff.clone().unwrap()
        );
    }
    assert!(parse_records("{\"bundle\": 1}\n")
        .unwrap_err()
        .starts_with("line 1"));
    assert!(parse_records("\n\n").unwrap().is_empty());
}

#[test]
fn starved_jobs_time_out() {
    let config = RepairConfig {
        timeout_ms: 1,
        ..RepairConfig::default()
    };
    let plan = ExperimentPlan {
        bundles: vec![fixture_bundle("heavy")],
        engines: EngineKind::ALL.to_vec(),
        config,
        workers: 3,
    };
    for r in run_experiment(&plan) {
        assert_eq!(r.outcome.status, RepairStatus::Timeout, "{}", r.engine);
        assert!(r.patch_diff.is_none());
        assert!(r.finished_ms >= r.started_ms);
    }
}

#[test]
fn patch_diff_matches_reference_for_deletion() {
    let b = corpus_bundle("M50A");
    let r = run_job(&b, EngineKind::Kali, &RepairConfig::default());
    let d = r.patch_diff.expect("diff");
    assert!(d.contains("-    s = s - 1;"), "{d}");
    assert!(b.reference_patch.unwrap().contains("-    s = s - 1;"));
}
