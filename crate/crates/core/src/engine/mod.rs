//! Budgeted black-box fuzzing sessions: sample test cases, execute them
//! sequentially, and record every exchange.

pub mod generate;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::auth::{acquire_credentials, decorate_request, AuthFlowError, CredentialMaterial, ResolvedAuth};
use crate::http::{HttpRequest, Transport, TransportError};
use crate::openapi::{ApiOperation, ApiSchema, ParamLocation, ValueSchema};
use crate::oracles::{self, dedupe_faults, Fault};

pub use generate::ViolationKind;

pub const INVALID_INTENT_PROBABILITY: f64 = 0.2;
pub const DEFAULT_MAX_ACTIONS: usize = 5;
const MAX_CREDENTIAL_REFRESHES: u32 = 3;

/// Headers that OpenAPI says are controlled elsewhere and must not be fuzzed.
const RESERVED_HEADERS: [&str; 3] = ["accept", "content-type", "authorization"];

const PATH_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub schema: ApiSchema,
    pub base_url: String,
    pub auth_entries: Vec<ResolvedAuth>,
    pub budget_seconds: u64,
    pub rng_seed: u64,
    pub max_actions_per_test: usize,
    /// Optional cap on the number of test cases, mainly for tests.
    pub max_tests: Option<usize>,
    pub min_delay: Duration,
    /// Set from outside (e.g. a signal handler) to end the session early.
    pub stop: Arc<AtomicBool>,
}

impl SessionConfig {
    pub fn new(schema: ApiSchema, base_url: impl Into<String>, budget_seconds: u64, rng_seed: u64) -> Self {
        Self {
            schema,
            base_url: base_url.into(),
            auth_entries: Vec::new(),
            budget_seconds,
            rng_seed,
            max_actions_per_test: DEFAULT_MAX_ACTIONS,
            max_tests: None,
            min_delay: Duration::ZERO,
            stop: Arc::new(AtomicBool::new(false)),
        }
    }

    pub fn with_auth(mut self, entries: Vec<ResolvedAuth>) -> Self {
        self.auth_entries = entries;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.budget_seconds < 1 {
            return Err(EngineError::InvalidConfig("budget_seconds must be at least 1".into()));
        }
        if self.max_actions_per_test < 1 {
            return Err(EngineError::InvalidConfig("max_actions_per_test must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("target unreachable at {url}: {reason}")]
    TargetUnreachable { url: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intent {
    Valid,
    Invalid,
}

/// The one constraint an invalid action breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// `query category`, `path id`, `body.title`, `body`, ...
    pub target: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainSource {
    IdField,
    Location,
}

/// A path parameter to be filled from an earlier action's response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainBinding {
    pub param: String,
    pub source_action: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpAction {
    pub operation_index: usize,
    pub endpoint: String,
    pub path_values: Vec<(String, String)>,
    pub query_values: Vec<(String, String)>,
    pub header_values: Vec<(String, String)>,
    pub body: Option<Value>,
    pub body_media: Option<String>,
    pub auth_user: Option<String>,
    pub intent: Intent,
    pub violation: Option<Violation>,
    pub chained: Vec<ChainBinding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub id: usize,
    pub actions: Vec<HttpAction>,
}

/// A chained value actually substituted at execution time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainedValue {
    pub param: String,
    pub source_action: usize,
    pub source: ChainSource,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpExchange {
    pub test_id: usize,
    pub action_index: usize,
    pub action: HttpAction,
    /// The request as sent, before credentials were applied.
    pub request: HttpRequest,
    pub chained: Vec<ChainedValue>,
    pub status: Option<u16>,
    pub response_headers: Vec<(String, String)>,
    pub response_body: Vec<u8>,
    pub response_json: Option<Value>,
    pub elapsed_ms: u64,
    pub transport_error: Option<TransportError>,
}

impl HttpExchange {
    pub fn response_header(&self, name: &str) -> Option<&str> {
        self.response_headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// One oracle firing, pointing at the exchange that triggered it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultFiring {
    pub fault: Fault,
    pub exchange_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub exchanges: Vec<HttpExchange>,
    pub tests: Vec<TestCase>,
    pub faults: Vec<Fault>,
    pub firings: Vec<FaultFiring>,
    /// Identities of every operation in the schema, in schema order.
    pub operations: Vec<String>,
    pub wall_time_ms: u64,
    pub calls_made: usize,
    /// Login requests are not part of `calls_made`.
    pub login_calls: usize,
    pub auth_failures: Vec<(String, AuthFlowError)>,
    pub interrupted: bool,
    pub seed: u64,
}

impl SessionResult {
    pub fn exchanges_of(&self, test_id: usize) -> impl Iterator<Item = &HttpExchange> {
        self.exchanges.iter().filter(move |e| e.test_id == test_id)
    }
}

/// Renders a JSON value the way it travels in a URL or header.
pub fn wire_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn encode_path_segment(s: &str) -> String {
    utf8_percent_encode(s, PATH_SEGMENT).to_string()
}

pub fn encode_query(pairs: &[(String, String)]) -> String {
    let mut ser = url::form_urlencoded::Serializer::new(String::new());
    for (k, v) in pairs {
        ser.append_pair(k, v);
    }
    ser.finish()
}

/// Fills the path template with encoded values.
pub fn render_path(template: &str, values: &[(String, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in values {
        out = out.replace(&format!("{{{name}}}"), &encode_path_segment(value));
    }
    out
}

pub fn serialize_body(body: &Value, media: &str) -> Vec<u8> {
    let m = media.to_ascii_lowercase();
    if m.contains("x-www-form-urlencoded") {
        let pairs: Vec<(String, String)> = match body {
            Value::Object(map) => map.iter().map(|(k, v)| (k.clone(), wire_text(v))).collect(),
            other => vec![("value".into(), wire_text(other))],
        };
        return encode_query(&pairs).into_bytes();
    }
    if m.contains("json") {
        return serde_json::to_vec(body).expect("JSON value serializes");
    }
    wire_text(body).into_bytes()
}

pub fn build_request(base_url: &str, op: &ApiOperation, action: &HttpAction, path_values: &[(String, String)]) -> HttpRequest {
    let mut url = format!("{}{}", base_url.trim_end_matches('/'), render_path(&op.path_template, path_values));
    if !action.query_values.is_empty() {
        url.push('?');
        url.push_str(&encode_query(&action.query_values));
    }
    let mut request = HttpRequest::new(&op.verb, url);
    for (k, v) in &action.header_values {
        request.headers.push((k.clone(), v.clone()));
    }
    if let (Some(body), Some(media)) = (&action.body, &action.body_media) {
        request = request.with_body(media, serialize_body(body, media));
    }
    request
}

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    Param(usize),
    Field(String),
    Body,
}

fn candidate_violations(op: &ApiOperation) -> Vec<(Slot, ViolationKind)> {
    let mut out = Vec::new();
    for (i, p) in op.parameters.iter().enumerate() {
        if is_reserved_header(p.location, &p.name) {
            continue;
        }
        for k in generate::violable_kinds(&p.schema, true) {
            out.push((Slot::Param(i), k));
        }
        if p.required && p.location != ParamLocation::Path {
            out.push((Slot::Param(i), ViolationKind::RequiredMissing));
        }
    }
    if let Some(body) = &op.body {
        match &body.schema {
            ValueSchema::Object { fields, required, .. } => {
                for (name, schema) in fields {
                    for k in generate::violable_kinds(schema, false) {
                        out.push((Slot::Field(name.clone()), k));
                    }
                }
                for name in required {
                    out.push((Slot::Field(name.clone()), ViolationKind::RequiredMissing));
                }
            }
            other => {
                for k in generate::violable_kinds(other, false) {
                    out.push((Slot::Body, k));
                }
            }
        }
        if body.required {
            out.push((Slot::Body, ViolationKind::RequiredMissing));
        }
    }
    out
}

fn is_reserved_header(location: ParamLocation, name: &str) -> bool {
    location == ParamLocation::Header && RESERVED_HEADERS.contains(&name.to_ascii_lowercase().as_str())
}

/// Draws one action for `op`. All randomness is consumed here, never during execution.
pub fn sample_action<R: Rng + ?Sized>(
    op_index: usize,
    op: &ApiOperation,
    want_invalid: bool,
    auth_user: Option<String>,
    rng: &mut R,
) -> HttpAction {
    let mut chosen: Option<(Slot, ViolationKind)> = None;
    if want_invalid {
        let candidates = candidate_violations(op);
        if !candidates.is_empty() {
            chosen = Some(candidates[rng.random_range(0..candidates.len())].clone());
        }
    }

    let mut path_values = Vec::new();
    let mut query_values = Vec::new();
    let mut header_values = Vec::new();
    for (i, p) in op.parameters.iter().enumerate() {
        if is_reserved_header(p.location, &p.name) {
            continue;
        }
        let value = match &chosen {
            Some((Slot::Param(j), ViolationKind::RequiredMissing)) if *j == i => None,
            Some((Slot::Param(j), kind)) if *j == i => Some(generate::generate_invalid(&p.schema, *kind, rng)),
            _ => {
                if p.required || rng.random_bool(0.5) {
                    Some(generate::generate_valid(&p.schema, rng))
                } else {
                    None
                }
            }
        };
        let Some(value) = value else { continue };
        match p.location {
            ParamLocation::Path => path_values.push((p.name.clone(), wire_text(&value))),
            ParamLocation::Query => match &value {
                Value::Array(items) => {
                    query_values.extend(items.iter().map(|v| (p.name.clone(), wire_text(v))));
                }
                _ => query_values.push((p.name.clone(), wire_text(&value))),
            },
            ParamLocation::Header => header_values.push((p.name.clone(), wire_text(&value))),
        }
    }

    let mut body = None;
    let mut body_media = None;
    if let Some(rb) = &op.body {
        let omit = matches!(&chosen, Some((Slot::Body, ViolationKind::RequiredMissing)));
        let forced = matches!(&chosen, Some((Slot::Body | Slot::Field(_), _)));
        if !omit && (rb.required || forced || rng.random_bool(0.5)) {
            let mut value = match &chosen {
                Some((Slot::Body, kind)) => generate::generate_invalid(&rb.schema, *kind, rng),
                _ => generate::generate_valid(&rb.schema, rng),
            };
            if let (Some((Slot::Field(name), kind)), Value::Object(map)) = (&chosen, &mut value) {
                if *kind == ViolationKind::RequiredMissing {
                    map.remove(name);
                } else if let Some(schema) = rb.schema.field(name) {
                    map.insert(name.clone(), generate::generate_invalid(schema, *kind, rng));
                }
            }
            body = Some(value);
            body_media = Some(rb.media_type.clone());
        }
    }

    let violation = chosen.map(|(slot, kind)| Violation {
        target: match slot {
            Slot::Param(i) => format!("{} {}", op.parameters[i].location.as_str(), op.parameters[i].name),
            Slot::Field(name) => format!("body.{name}"),
            Slot::Body => "body".to_string(),
        },
        kind,
    });
    HttpAction {
        operation_index: op_index,
        endpoint: op.identity.clone(),
        path_values,
        query_values,
        header_values,
        body,
        body_media,
        auth_user,
        intent: if violation.is_some() { Intent::Invalid } else { Intent::Valid },
        violation,
        chained: Vec::new(),
    }
}

/// Samples a test case of 1..=max_actions uniformly chosen operations.
pub fn sample_test<R: Rng + ?Sized>(
    schema: &ApiSchema,
    auth_names: &[String],
    max_actions: usize,
    id: usize,
    rng: &mut R,
) -> TestCase {
    let ops = &schema.operations;
    let n = rng.random_range(1..=max_actions.max(1));
    let mut actions: Vec<HttpAction> = Vec::with_capacity(n);
    for _ in 0..n {
        let op_index = rng.random_range(0..ops.len());
        let op = &ops[op_index];
        let want_invalid = rng.random_bool(INVALID_INTENT_PROBABILITY);
        let auth_user = if op.security_required {
            let pick = rng.random_range(0..=auth_names.len());
            auth_names.get(pick).cloned()
        } else {
            None
        };
        let mut action = sample_action(op_index, op, want_invalid, auth_user, rng);
        action.chained = chain_bindings(ops, &actions, op, action.violation.as_ref());
        actions.push(action);
    }
    TestCase { id, actions }
}

// A later action whose path extends an earlier POST's path takes its first
// new placeholder from that POST's response.
fn chain_bindings(ops: &[ApiOperation], earlier: &[HttpAction], op: &ApiOperation, violation: Option<&Violation>) -> Vec<ChainBinding> {
    for (i, prev) in earlier.iter().enumerate().rev() {
        let prev_op = &ops[prev.operation_index];
        if prev_op.verb != "POST" {
            continue;
        }
        let prefix = format!("{}/", prev_op.path_template.trim_end_matches('/'));
        if !op.path_template.starts_with(&prefix) {
            continue;
        }
        let known = prev_op.placeholders();
        let Some(param) = op.placeholders().into_iter().find(|p| !known.contains(p)) else {
            continue;
        };
        if violation.is_some_and(|v| v.target == format!("path {param}")) {
            return Vec::new();
        }
        return vec![ChainBinding { param, source_action: i }];
    }
    Vec::new()
}

/// Extracts a resource id from a creation response: `id` field first, then
/// the last segment of `Location`.
pub fn chained_id(exchange: &HttpExchange) -> Option<(ChainSource, String)> {
    let status = exchange.status?;
    if !(200..300).contains(&status) {
        return None;
    }
    if let Some(id) = exchange.response_json.as_ref().and_then(|j| j.get("id")) {
        match id {
            Value::String(s) if !s.is_empty() => return Some((ChainSource::IdField, s.clone())),
            Value::Number(n) => return Some((ChainSource::IdField, n.to_string())),
            _ => {}
        }
    }
    let location = exchange.response_header("Location")?;
    let path = location.split(['?', '#']).next().unwrap_or("");
    let last = path.trim_end_matches('/').rsplit('/').next()?;
    if last.is_empty() {
        return None;
    }
    let decoded = percent_encoding::percent_decode_str(last).decode_utf8_lossy().into_owned();
    Some((ChainSource::Location, decoded))
}

struct UserCredentials {
    material: Option<CredentialMaterial>,
    failed: bool,
    seen_authorized: bool,
    refreshes: u32,
}

struct Executor<'a> {
    config: &'a SessionConfig,
    transport: &'a dyn Transport,
    users: BTreeMap<String, UserCredentials>,
    result: SessionResult,
}

impl<'a> Executor<'a> {
    fn credentials_for(&mut self, user: &str) -> Option<CredentialMaterial> {
        let entry = self.config.auth_entries.iter().find(|e| e.name == user)?;
        let state = self.users.entry(user.to_string()).or_insert(UserCredentials {
            material: None,
            failed: false,
            seen_authorized: false,
            refreshes: 0,
        });
        if state.material.is_none() && !state.failed {
            self.result.login_calls += 1;
            match acquire_credentials(entry, &self.config.base_url, self.transport) {
                Ok(m) => state.material = Some(m),
                Err(e) => {
                    log::warn!("login for {user} failed: {e}");
                    state.failed = true;
                    self.result.auth_failures.push((user.to_string(), e));
                }
            }
        }
        state.material.clone()
    }

    fn after_response(&mut self, user: &str, status: u16) {
        if let Some(state) = self.users.get_mut(user) {
            if status == 401 {
                if state.seen_authorized && state.refreshes < MAX_CREDENTIAL_REFRESHES {
                    state.refreshes += 1;
                    state.material = None;
                }
            } else {
                state.seen_authorized = true;
            }
        }
    }

    fn execute(&mut self, test: &mut TestCase) -> Result<(), EngineError> {
        let mut executed = 0;
        let first_index = self.result.exchanges.len();
        for (i, action) in test.actions.iter().enumerate() {
            if i > 0 && self.config.stop.load(Ordering::SeqCst) {
                self.result.interrupted = true;
                break;
            }
            if !self.config.min_delay.is_zero() && !self.result.exchanges.is_empty() {
                std::thread::sleep(self.config.min_delay);
            }
            let op = &self.config.schema.operations[action.operation_index];
            let mut path_values = action.path_values.clone();
            let mut chained = Vec::new();
            for binding in &action.chained {
                let source = &self.result.exchanges[first_index + binding.source_action];
                if let Some((how, value)) = chained_id(source) {
                    path_values.retain(|(k, _)| *k != binding.param);
                    path_values.push((binding.param.clone(), value.clone()));
                    chained.push(ChainedValue {
                        param: binding.param.clone(),
                        source_action: binding.source_action,
                        source: how,
                        value,
                    });
                }
            }
            let request = build_request(&self.config.base_url, op, action, &path_values);
            let material = action.auth_user.as_deref().and_then(|u| self.credentials_for(u));
            let outgoing = match &material {
                Some(m) => decorate_request(request.clone(), m),
                None => request.clone(),
            };
            let started = Instant::now();
            let outcome = self.transport.send(&outgoing);
            let elapsed_ms = started.elapsed().as_millis() as u64;
            let exchange = match outcome {
                Ok(resp) => {
                    if let Some(user) = &action.auth_user {
                        self.after_response(user, resp.status);
                    }
                    HttpExchange {
                        test_id: test.id,
                        action_index: i,
                        action: action.clone(),
                        request,
                        chained,
                        status: Some(resp.status),
                        response_json: serde_json::from_slice(&resp.body).ok(),
                        response_headers: resp.headers,
                        response_body: resp.body,
                        elapsed_ms,
                        transport_error: None,
                    }
                }
                Err(err) => {
                    if self.result.exchanges.is_empty() {
                        self.preflight(&err)?;
                    }
                    HttpExchange {
                        test_id: test.id,
                        action_index: i,
                        action: action.clone(),
                        request,
                        chained,
                        status: None,
                        response_headers: Vec::new(),
                        response_body: Vec::new(),
                        response_json: None,
                        elapsed_ms,
                        transport_error: Some(err),
                    }
                }
            };
            let index = self.result.exchanges.len();
            for fault in oracles::evaluate(&exchange, op) {
                self.result.firings.push(FaultFiring {
                    fault,
                    exchange_index: index,
                });
            }
            self.result.exchanges.push(exchange);
            executed += 1;
        }
        test.actions.truncate(executed);
        Ok(())
    }

    fn preflight(&self, first_error: &TransportError) -> Result<(), EngineError> {
        let probe = HttpRequest::new("GET", self.config.base_url.clone());
        match self.transport.send(&probe) {
            Ok(_) => Ok(()),
            Err(e) => Err(EngineError::TargetUnreachable {
                url: self.config.base_url.clone(),
                reason: format!("{first_error}; preflight: {e}"),
            }),
        }
    }
}

pub fn run_session(config: &SessionConfig, transport: &dyn Transport) -> Result<SessionResult, EngineError> {
    config.validate()?;
    let start = Instant::now();
    let deadline = start + Duration::from_secs(config.budget_seconds);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let auth_names: Vec<String> = config.auth_entries.iter().map(|e| e.name.clone()).collect();
    let mut exec = Executor {
        config,
        transport,
        users: BTreeMap::new(),
        result: SessionResult {
            exchanges: Vec::new(),
            tests: Vec::new(),
            faults: Vec::new(),
            firings: Vec::new(),
            operations: config.schema.operations.iter().map(|o| o.identity.clone()).collect(),
            wall_time_ms: 0,
            calls_made: 0,
            login_calls: 0,
            auth_failures: Vec::new(),
            interrupted: false,
            seed: config.rng_seed,
        },
    };
    if !config.schema.operations.is_empty() {
        loop {
            if config.stop.load(Ordering::SeqCst) {
                exec.result.interrupted = true;
                break;
            }
            if Instant::now() >= deadline || config.max_tests.is_some_and(|m| exec.result.tests.len() >= m) {
                break;
            }
            let id = exec.result.tests.len();
            let mut test = sample_test(&config.schema, &auth_names, config.max_actions_per_test, id, &mut rng);
            exec.execute(&mut test)?;
            if !test.actions.is_empty() {
                exec.result.tests.push(test);
            }
        }
    }
    let mut result = exec.result;
    result.calls_made = result.exchanges.len();
    result.faults = dedupe_faults(result.firings.iter().map(|f| f.fault.clone()).collect());
    result.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(result)
}
