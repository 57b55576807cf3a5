//! The WFC report document: building it from a session, strict parsing, and
//! the REST metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::SessionResult;
use crate::oracles::{category, Fault};
use crate::schema::{validate, SchemaError, ShippedSchema};
use crate::testgen::EmittedSuite;

pub const SCHEMA_VERSION: &str = "0.1.0";
pub const INTERRUPTED_NOTE: &str = "session interrupted before the time budget elapsed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: String,
    pub tool_name: String,
    pub tool_version: String,
    /// RFC 3339.
    pub creation_time: String,
    pub faults: Vec<Fault>,
    pub problem_details: ProblemDetails,
    pub total_tests: u64,
    pub test_file_paths: Vec<String>,
    pub test_cases: Vec<TestCaseInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDetails {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rest: Option<RestReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestReport {
    pub endpoint_count: u64,
    pub endpoints: Vec<RestEndpoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestEndpoint {
    pub identity: String,
    pub observed_statuses: Vec<u16>,
    pub fault_codes: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCaseInfo {
    pub name: String,
    pub file: String,
    pub start_line: u64,
    pub end_line: u64,
    pub operations_called: Vec<String>,
    pub fault_refs: Vec<Fault>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolMeta {
    pub name: String,
    pub version: String,
}

impl Default for ToolMeta {
    fn default() -> Self {
        Self {
            name: "wfc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConsistencyError {
    #[error("test {test} refers to file {file} which is not in the file list")]
    UnknownFile { test: String, file: String },
    #[error("total_tests is {declared} but {actual} test cases are listed")]
    TestCount { declared: u64, actual: usize },
    #[error("fault code {0} is not in the catalog")]
    UnknownFaultCode(u16),
    #[error("test {0} ends before it starts")]
    LineRange(String),
    #[error("endpoint_count is {declared} but {actual} endpoints are listed")]
    EndpointCount { declared: u64, actual: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report violates the schema: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    SchemaViolation(Vec<SchemaError>),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
}

impl Report {
    pub fn check_consistency(&self) -> Result<(), ConsistencyError> {
        if self.total_tests != self.test_cases.len() as u64 {
            return Err(ConsistencyError::TestCount {
                declared: self.total_tests,
                actual: self.test_cases.len(),
            });
        }
        for t in &self.test_cases {
            if !self.test_file_paths.contains(&t.file) {
                return Err(ConsistencyError::UnknownFile {
                    test: t.name.clone(),
                    file: t.file.clone(),
                });
            }
            if t.start_line > t.end_line {
                return Err(ConsistencyError::LineRange(t.name.clone()));
            }
        }
        if let Some(f) = self.faults.iter().find(|f| category(f.code).is_none()) {
            return Err(ConsistencyError::UnknownFaultCode(f.code));
        }
        if let Some(rest) = &self.problem_details.rest {
            if rest.endpoint_count != rest.endpoints.len() as u64 {
                return Err(ConsistencyError::EndpointCount {
                    declared: rest.endpoint_count,
                    actual: rest.endpoints.len(),
                });
            }
        }
        Ok(())
    }

    pub fn rest(&self) -> Option<&RestReport> {
        self.problem_details.rest.as_ref()
    }
}

impl RestReport {
    /// Percentage of endpoints with at least one 2xx status.
    pub fn coverage_2xx(&self) -> f64 {
        if self.endpoints.is_empty() {
            return 0.0;
        }
        let hit = self
            .endpoints
            .iter()
            .filter(|e| e.observed_statuses.iter().any(|s| (200..300).contains(s)))
            .count();
        100.0 * hit as f64 / self.endpoints.len() as f64
    }

    pub fn endpoints_with_500(&self) -> usize {
        self.endpoints.iter().filter(|e| e.observed_statuses.contains(&500)).count()
    }
}

/// Per-endpoint statuses and fault codes over every exchange of the session.
pub fn rest_report(session: &SessionResult) -> RestReport {
    let mut statuses: BTreeMap<&str, BTreeSet<u16>> = BTreeMap::new();
    let mut codes: BTreeMap<&str, BTreeSet<u16>> = BTreeMap::new();
    for ex in &session.exchanges {
        if let Some(s) = ex.status {
            statuses.entry(ex.action.endpoint.as_str()).or_default().insert(s);
        }
    }
    for f in &session.faults {
        codes.entry(f.endpoint.as_str()).or_default().insert(f.code);
    }
    let endpoints: Vec<RestEndpoint> = session
        .operations
        .iter()
        .map(|id| RestEndpoint {
            identity: id.clone(),
            observed_statuses: statuses.get(id.as_str()).map(|s| s.iter().copied().collect()).unwrap_or_default(),
            fault_codes: codes.get(id.as_str()).map(|s| s.iter().copied().collect()).unwrap_or_default(),
        })
        .collect();
    RestReport {
        endpoint_count: endpoints.len() as u64,
        endpoints,
    }
}

pub fn build_report(
    session: &SessionResult,
    suite: &EmittedSuite,
    meta: &ToolMeta,
    creation_time: chrono::DateTime<chrono::Utc>,
) -> Result<Report, ConsistencyError> {
    let test_file_paths: Vec<String> = suite.files.iter().map(|f| f.path.clone()).collect();
    let test_cases: Vec<TestCaseInfo> = suite
        .tests
        .iter()
        .map(|t| TestCaseInfo {
            name: t.name.clone(),
            file: t.file.clone(),
            start_line: t.start_line as u64,
            end_line: t.end_line as u64,
            operations_called: t.operations_called.clone(),
            fault_refs: t.faults.clone(),
        })
        .collect();
    let mut notes = Vec::new();
    if session.interrupted {
        notes.push(INTERRUPTED_NOTE.to_string());
    }
    for (user, err) in &session.auth_failures {
        notes.push(format!("authentication for {user} failed: {err}"));
    }
    let report = Report {
        schema_version: SCHEMA_VERSION.into(),
        tool_name: meta.name.clone(),
        tool_version: meta.version.clone(),
        creation_time: creation_time.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        faults: session.faults.clone(),
        problem_details: ProblemDetails {
            rest: Some(rest_report(session)),
        },
        total_tests: test_cases.len() as u64,
        test_file_paths,
        test_cases,
        notes: (!notes.is_empty()).then_some(notes),
    };
    report.check_consistency()?;
    Ok(report)
}

pub fn serialize_report(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Parses and validates against the shipped schema, then checks the
/// cross-field invariants.
pub fn parse_report(text: &str) -> Result<Report, ReportError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let errors = validate(ShippedSchema::Report, &value);
    if !errors.is_empty() {
        return Err(ReportError::SchemaViolation(errors));
    }
    let report: Report = serde_json::from_value(value)?;
    report.check_consistency()?;
    Ok(report)
}

/// Percentage of operations with at least one 2xx response; 0 with no operations.
pub fn endpoint_2xx_coverage(session: &SessionResult) -> f64 {
    if session.operations.is_empty() {
        return 0.0;
    }
    let hit: BTreeSet<&str> = session
        .exchanges
        .iter()
        .filter(|e| e.status.is_some_and(|s| (200..300).contains(&s)))
        .map(|e| e.action.endpoint.as_str())
        .collect();
    let covered = session.operations.iter().filter(|o| hit.contains(o.as_str())).count();
    100.0 * covered as f64 / session.operations.len() as f64
}

pub fn endpoints_with_500(session: &SessionResult) -> usize {
    session
        .exchanges
        .iter()
        .filter(|e| e.status == Some(500))
        .map(|e| e.action.endpoint.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}
