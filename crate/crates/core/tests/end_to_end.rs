use std::collections::BTreeSet;
use std::time::Duration;

use wfc_core::auth::{parse_auth_file, resolve_template, AuthFormat, ResolvedAuth};
use wfc_core::engine::{run_session, SessionConfig, SessionResult};
use wfc_core::http::UreqTransport;
use wfc_core::openapi::{load_schema, resolve_override};
use wfc_core::oracles::{HTTP_500, INVALID_INPUT_ACCEPTED, SCHEMA_MISMATCH};
use wfc_core::report::{build_report, endpoint_2xx_coverage, endpoints_with_500, parse_report, serialize_report, ToolMeta};
use wfc_core::testgen::{emit_suite, select_suite, EmitOptions};
use wfc_testbed::{start_testbed, TestbedSpec};

const TOKEN_AUTH: &str = include_str!("../../../fixtures/auth/token_login.yaml");
const COOKIE_AUTH: &str = include_str!("../../../fixtures/auth/cookies_login.yaml");

fn auth(text: &str) -> Vec<ResolvedAuth> {
    resolve_template(&parse_auth_file(text, AuthFormat::Yaml).unwrap()).unwrap()
}

fn session(seed: u64, max_tests: usize, auth_entries: Vec<ResolvedAuth>) -> SessionResult {
    let bed = start_testbed(TestbedSpec::default()).unwrap();
    let schema = load_schema(&bed.openapi_v3()).unwrap();
    let base = resolve_override(&schema, &bed.origin()).unwrap();
    assert_eq!(base, bed.api_base());
    let mut config = SessionConfig::new(schema, base, 20, seed).with_auth(auth_entries);
    config.max_tests = Some(max_tests);
    run_session(&config, &UreqTransport::new(Duration::from_secs(5))).unwrap()
}

#[test]
fn token_session_finds_the_planted_faults() {
    let s = session(11, 400, auth(TOKEN_AUTH));
    let hundred: Vec<_> = s.faults.iter().filter(|f| f.code == HTTP_500).collect();
    assert_eq!(hundred.len(), 1, "{hundred:?}");
    assert_eq!(hundred[0].endpoint, "GET:/api/tags/{id}");
    let fired_500 = s.firings.iter().filter(|f| f.fault.code == HTTP_500).count();
    assert!(fired_500 > 1, "dedupe not exercised");
    assert!(s.faults.iter().any(|f| f.code == SCHEMA_MISMATCH && f.endpoint == "GET:/api/archive"));
    assert!(s.faults.iter().any(|f| f.code == SCHEMA_MISMATCH && f.endpoint == "GET:/api/info"));
    assert!(s.faults.iter().any(|f| f.code == INVALID_INPUT_ACCEPTED && f.endpoint == "GET:/api/search"));

    let gated = |user: Option<&str>| -> BTreeSet<u16> {
        s.exchanges
            .iter()
            .filter(|e| e.action.endpoint == "GET:/api/posts" && e.action.auth_user.as_deref() == user)
            .filter_map(|e| e.status)
            .collect()
    };
    assert_eq!(gated(Some("admin")), BTreeSet::from([200]));
    assert_eq!(gated(None), BTreeSet::from([401]));
    assert_eq!(s.login_calls, 2);
    assert!(s.auth_failures.is_empty());
}

#[test]
fn cookie_session_reaches_gated_endpoints() {
    let s = session(5, 150, auth(COOKIE_AUTH));
    let ok = s
        .exchanges
        .iter()
        .filter(|e| e.action.auth_user.as_deref() == Some("ADMIN") && e.action.endpoint == "GET:/api/users/me")
        .all(|e| e.status == Some(200));
    assert!(ok);
    assert!(s.exchanges.iter().any(|e| e.action.auth_user.is_some() && e.status == Some(200)));
}

#[test]
fn v2_document_resolves_to_the_same_base() {
    let bed = start_testbed(TestbedSpec::default()).unwrap();
    let schema = load_schema(&bed.openapi_v2()).unwrap();
    assert_eq!(resolve_override(&schema, &bed.origin()).unwrap(), bed.api_base());
    assert_eq!(schema.operations.len(), load_schema(&bed.openapi_v3()).unwrap().operations.len());
}

#[test]
fn report_from_a_real_session_round_trips() {
    let bed = start_testbed(TestbedSpec::default()).unwrap();
    let schema = load_schema(&bed.openapi_v3()).unwrap();
    let entries = auth(TOKEN_AUTH);
    let mut config = SessionConfig::new(schema.clone(), bed.api_base(), 20, 3).with_auth(entries.clone());
    config.max_tests = Some(200);
    let s = run_session(&config, &UreqTransport::default()).unwrap();
    let selection = select_suite(&s);
    let suite = emit_suite(&selection, &s, &schema, &entries, &EmitOptions::new(bed.api_base())).unwrap();
    let report = build_report(&s, &suite, &ToolMeta::default(), chrono::Utc::now()).unwrap();
    assert_eq!(report.total_tests as usize, selection.selected.len());
    assert_eq!(report.faults, s.faults);
    let text = serialize_report(&report);
    assert_eq!(parse_report(&text).unwrap(), report);
    let rest = report.rest().unwrap();
    assert_eq!(rest.coverage_2xx(), endpoint_2xx_coverage(&s));
    assert_eq!(rest.endpoints_with_500(), endpoints_with_500(&s));
    assert_eq!(rest.endpoints_with_500(), 1);
}

#[test]
fn same_seed_same_session() {
    let a = session(21, 60, auth(TOKEN_AUTH));
    let b = session(21, 60, auth(TOKEN_AUTH));
    assert_eq!(a.tests, b.tests);
    assert_eq!(a.faults, b.faults);
    let statuses = |s: &SessionResult| s.exchanges.iter().map(|e| e.status).collect::<Vec<_>>();
    assert_eq!(statuses(&a), statuses(&b));
}
