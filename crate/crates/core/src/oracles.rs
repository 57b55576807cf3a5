//! Fault catalog and the oracles that turn exchanges into faults.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{HttpExchange, Intent};
use crate::openapi::ApiOperation;

pub const HTTP_500: u16 = 100;
pub const SCHEMA_MISMATCH: u16 = 101;
pub const INVALID_INPUT_ACCEPTED: u16 = 900;
pub const EXPERIMENTAL_RANGE: std::ops::RangeInclusive<u16> = 900..=999;

/// Codes with a detector in this crate.
pub const IMPLEMENTED: [u16; 3] = [HTTP_500, SCHEMA_MISMATCH, INVALID_INPUT_ACCEPTED];

/// A fault; two faults are the same iff code, endpoint and context all match.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fault {
    pub code: u16,
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

impl Fault {
    pub fn new(code: u16, endpoint: impl Into<String>, context: Option<String>) -> Self {
        Self {
            code,
            endpoint: endpoint.into(),
            context,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CategorySource {
    #[serde(rename = "wfc-defined")]
    WfcDefined,
    #[serde(rename = "experimental")]
    Experimental,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultCategory {
    pub code: u16,
    pub name: String,
    pub description: String,
    pub source: CategorySource,
}

impl FaultCategory {
    pub fn detector_implemented(&self) -> bool {
        IMPLEMENTED.contains(&self.code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog does not parse: {0}")]
    Parse(String),
    #[error("duplicate fault code {0}")]
    DuplicateCode(u16),
    #[error("code {0} is reserved for experimental categories")]
    ReservedRange(u16),
    #[error("experimental code {0} must lie in 900-999")]
    ExperimentalOutOfRange(u16),
}

pub fn load_catalog(text: &str) -> Result<Vec<FaultCategory>, CatalogError> {
    let categories: Vec<FaultCategory> = serde_json::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
    let mut seen = HashSet::new();
    for c in &categories {
        if !seen.insert(c.code) {
            return Err(CatalogError::DuplicateCode(c.code));
        }
        let experimental_code = EXPERIMENTAL_RANGE.contains(&c.code);
        match c.source {
            CategorySource::WfcDefined if experimental_code => return Err(CatalogError::ReservedRange(c.code)),
            CategorySource::Experimental if !experimental_code => {
                return Err(CatalogError::ExperimentalOutOfRange(c.code))
            }
            _ => {}
        }
    }
    Ok(categories)
}

/// The catalog shipped with the crate.
pub fn shipped_catalog() -> &'static [FaultCategory] {
    static CATALOG: OnceLock<Vec<FaultCategory>> = OnceLock::new();
    CATALOG.get_or_init(|| load_catalog(crate::schema::FAULT_CATALOG_JSON).expect("shipped catalog is valid"))
}

pub fn category(code: u16) -> Option<&'static FaultCategory> {
    shipped_catalog().iter().find(|c| c.code == code)
}

fn masking_patterns() -> &'static (regex::Regex, regex::Regex) {
    static P: OnceLock<(regex::Regex, regex::Regex)> = OnceLock::new();
    P.get_or_init(|| {
        (
            regex::Regex::new(r"(?i)[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}").unwrap(),
            regex::Regex::new(r"[0-9]+").unwrap(),
        )
    })
}

/// Error text with UUIDs and digit runs masked, so the context is stable
/// across ids and counters.
pub fn normalize_message(message: &str) -> String {
    let (uuid, digits) = masking_patterns();
    let masked = uuid.replace_all(message, "<uuid>");
    digits.replace_all(&masked, "<n>").into_owned()
}

fn error_message(exchange: &HttpExchange) -> String {
    if let Some(json) = &exchange.response_json {
        for field in ["message", "error", "detail", "title"] {
            if let Some(s) = json.get(field).and_then(|v| v.as_str()) {
                return s.to_string();
            }
        }
        return String::new();
    }
    String::from_utf8_lossy(&exchange.response_body).chars().take(200).collect()
}

/// Status 500 gives code 100 with a digest of the masked error message as context.
pub fn detect_http_500(exchange: &HttpExchange) -> Option<Fault> {
    if exchange.status? != 500 {
        return None;
    }
    let normalized = normalize_message(&error_message(exchange));
    let digest = Sha256::digest(format!("500 {normalized}").as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    Some(Fault::new(HTTP_500, exchange.action.endpoint.clone(), Some(hex)))
}

fn media_of(content_type: &str) -> String {
    content_type.split(';').next().unwrap_or("").trim().to_ascii_lowercase()
}

fn media_matches(declared: &str, actual: &str) -> bool {
    let declared = media_of(declared);
    if declared == actual || declared == "*/*" {
        return true;
    }
    match declared.split_once('/') {
        Some((kind, "*")) => actual.split_once('/').is_some_and(|(k, _)| k == kind),
        _ => false,
    }
}

fn is_json(media: &str) -> bool {
    media == "application/json" || media.ends_with("+json")
}

/// Code 101: undeclared status, undeclared content type, or a body that fails
/// the declared schema.
pub fn detect_schema_mismatch(exchange: &HttpExchange, operation: &ApiOperation) -> Option<Fault> {
    let status = exchange.status?;
    if operation.declared_responses.is_empty() {
        return None;
    }
    let fault = |ctx: String| Some(Fault::new(SCHEMA_MISMATCH, exchange.action.endpoint.clone(), Some(ctx)));
    let Some(declared) = operation.response_for(status) else {
        return fault(format!("status {status} not declared"));
    };
    if exchange.response_body.is_empty() {
        return None;
    }
    let actual = exchange.response_header("Content-Type").map(media_of);
    if let Some(actual) = &actual {
        if !declared.media_types.is_empty() && !declared.media_types.iter().any(|d| media_matches(d, actual)) {
            return fault(format!("content-type {actual} not declared"));
        }
    }
    let Some(schema) = &declared.schema else { return None };
    if actual.as_deref().is_some_and(|a| !is_json(a)) {
        return None;
    }
    let Some(body) = &exchange.response_json else {
        return fault("body is not valid JSON".to_string());
    };
    schema.check(body).err().and_then(fault)
}

/// Code 900: a deliberately invalid request answered with 2xx.
pub fn detect_robustness_violation(exchange: &HttpExchange) -> Option<Fault> {
    if exchange.action.intent != Intent::Invalid {
        return None;
    }
    let status = exchange.status?;
    if !(200..300).contains(&status) {
        return None;
    }
    let violation = exchange.action.violation.as_ref()?;
    Some(Fault::new(
        INVALID_INPUT_ACCEPTED,
        exchange.action.endpoint.clone(),
        Some(format!("{} violated: accepted", violation.kind)),
    ))
}

/// All oracles for one exchange, in code order.
pub fn evaluate(exchange: &HttpExchange, operation: &ApiOperation) -> Vec<Fault> {
    [
        detect_http_500(exchange),
        detect_schema_mismatch(exchange, operation),
        detect_robustness_violation(exchange),
    ]
    .into_iter()
    .flatten()
    .collect()
}

/// First occurrences under triple equality, order preserved.
pub fn dedupe_faults(faults: Vec<Fault>) -> Vec<Fault> {
    let mut seen = HashSet::new();
    faults.into_iter().filter(|f| seen.insert(f.clone())).collect()
}
