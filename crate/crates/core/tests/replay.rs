use std::process::Command;
use std::time::Duration;

use wfc_core::auth::{parse_auth_file, resolve_template, AuthFormat};
use wfc_core::engine::{run_session, SessionConfig};
use wfc_core::http::UreqTransport;
use wfc_core::openapi::load_schema;
use wfc_core::testgen::{emit_suite, select_suite, EmitOptions};
use wfc_testbed::{start_testbed, TestbedSpec};

fn pytest_available() -> bool {
    Command::new("python3")
        .args(["-c", "import pytest, requests"])
        .status()
        .is_ok_and(|s| s.success())
}

fn replay(auth_text: &str, seed: u64) {
    if !pytest_available() {
        eprintln!("python3 with pytest and requests not found; skipping replay");
        return;
    }
    let entries = resolve_template(&parse_auth_file(auth_text, AuthFormat::Yaml).unwrap()).unwrap();
    let (session, schema, base) = {
        let bed = start_testbed(TestbedSpec::default()).unwrap();
        let schema = load_schema(&bed.openapi_v3()).unwrap();
        let mut config = SessionConfig::new(schema.clone(), bed.api_base(), 20, seed).with_auth(entries.clone());
        config.max_tests = Some(250);
        let s = run_session(&config, &UreqTransport::new(Duration::from_secs(5))).unwrap();
        (s, schema, bed.api_base())
    };
    let selection = select_suite(&session);
    let suite = emit_suite(&selection, &session, &schema, &entries, &EmitOptions::new(base)).unwrap();
    assert!(!suite.tests.is_empty());
    let dir = tempfile::tempdir().unwrap();
    for f in &suite.files {
        std::fs::write(dir.path().join(&f.path), &f.text).unwrap();
    }

    // a fresh testbed on a different port, reached through SUT_BASE_URL
    let fresh = start_testbed(TestbedSpec::default()).unwrap();
    let out = Command::new("python3")
        .args(["-m", "pytest", "-q", "-p", "no:cacheprovider"])
        .current_dir(dir.path())
        .env("SUT_BASE_URL", fresh.api_base())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "pytest failed:\n{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains(&format!("{} passed", suite.tests.len())), "{stdout}");
}

#[test]
fn token_suite_replays_against_a_fresh_testbed() {
    replay(include_str!("../../../fixtures/auth/token_login.yaml"), 8);
}

#[test]
fn cookie_suite_replays_against_a_fresh_testbed() {
    replay(include_str!("../../../fixtures/auth/cookies_login.yaml"), 9);
}
