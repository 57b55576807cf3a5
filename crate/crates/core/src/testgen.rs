//! Picks a small suite out of a session and writes it out as pytest modules.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde_json::Value;

use crate::auth::{AuthMechanism, CredentialSource, ResolvedAuth};
use crate::engine::{encode_query, ChainSource, HttpExchange, SessionResult};
use crate::http::{is_date_time_like, status_family};
use crate::openapi::{path_placeholders, ApiSchema};
use crate::oracles::{category, Fault};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionReason {
    FaultRevealing,
    CoverageNovel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectedTest {
    pub test_id: usize,
    pub reason: SelectionReason,
}

/// Selected tests in session order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteSelection {
    pub selected: Vec<SelectedTest>,
}

impl SuiteSelection {
    pub fn test_ids(&self) -> Vec<usize> {
        self.selected.iter().map(|s| s.test_id).collect()
    }
}

/// What each test of a session witnesses: indices into the session's fault
/// list and into `pairs`.
#[derive(Debug, Clone)]
pub struct CoverageIndex {
    /// Every observed (operation identity, status family), first-seen order.
    pub pairs: Vec<(String, u8)>,
    pub test_faults: Vec<BTreeSet<usize>>,
    pub test_pairs: Vec<BTreeSet<usize>>,
}

impl CoverageIndex {
    pub fn build(session: &SessionResult) -> Self {
        let position: HashMap<usize, usize> = session.tests.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        let fault_index: HashMap<&Fault, usize> = session.faults.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let n = session.tests.len();
        let mut test_faults = vec![BTreeSet::new(); n];
        let mut test_pairs = vec![BTreeSet::new(); n];
        for firing in &session.firings {
            let ex = &session.exchanges[firing.exchange_index];
            if let (Some(&t), Some(&f)) = (position.get(&ex.test_id), fault_index.get(&firing.fault)) {
                test_faults[t].insert(f);
            }
        }
        let mut pairs = Vec::new();
        let mut pair_index: HashMap<(String, u8), usize> = HashMap::new();
        for ex in &session.exchanges {
            let (Some(status), Some(&t)) = (ex.status, position.get(&ex.test_id)) else {
                continue;
            };
            let key = (ex.action.endpoint.clone(), status_family(status));
            let next = pairs.len();
            let p = *pair_index.entry(key.clone()).or_insert_with(|| {
                pairs.push(key);
                next
            });
            test_pairs[t].insert(p);
        }
        Self {
            pairs,
            test_faults,
            test_pairs,
        }
    }
}

/// Greedy cover: one minimal witness per fault, then per uncovered
/// (operation, status family) pair, then a reverse pass dropping tests whose
/// witnesses are all held by others. Ties go to fewer actions, then earlier tests.
pub fn select_suite(session: &SessionResult) -> SuiteSelection {
    let index = CoverageIndex::build(session);
    let n = session.tests.len();
    let mut fault_witnesses = vec![Vec::new(); session.faults.len()];
    let mut pair_witnesses = vec![Vec::new(); index.pairs.len()];
    for t in 0..n {
        for &f in &index.test_faults[t] {
            fault_witnesses[f].push(t);
        }
        for &p in &index.test_pairs[t] {
            pair_witnesses[p].push(t);
        }
    }
    let best = |ws: &[usize]| ws.iter().copied().min_by_key(|&t| (session.tests[t].actions.len(), t));

    let mut fault_count = vec![0usize; session.faults.len()];
    let mut pair_count = vec![0usize; index.pairs.len()];
    let mut added = Vec::new();
    let mut take = |t: usize, fault_count: &mut Vec<usize>, pair_count: &mut Vec<usize>| {
        for &f in &index.test_faults[t] {
            fault_count[f] += 1;
        }
        for &p in &index.test_pairs[t] {
            pair_count[p] += 1;
        }
        added.push(t);
    };
    for f in 0..fault_witnesses.len() {
        if fault_count[f] == 0 {
            if let Some(t) = best(&fault_witnesses[f]) {
                take(t, &mut fault_count, &mut pair_count);
            }
        }
    }
    for p in 0..pair_witnesses.len() {
        if pair_count[p] == 0 {
            if let Some(t) = best(&pair_witnesses[p]) {
                take(t, &mut fault_count, &mut pair_count);
            }
        }
    }

    let mut kept = BTreeSet::new();
    for &t in added.iter().rev() {
        let redundant = index.test_faults[t].iter().all(|&f| fault_count[f] > 1)
            && index.test_pairs[t].iter().all(|&p| pair_count[p] > 1);
        if redundant {
            for &f in &index.test_faults[t] {
                fault_count[f] -= 1;
            }
            for &p in &index.test_pairs[t] {
                pair_count[p] -= 1;
            }
        } else {
            kept.insert(t);
        }
    }
    SuiteSelection {
        selected: kept
            .into_iter()
            .map(|t| SelectedTest {
                test_id: session.tests[t].id,
                reason: if index.test_faults[t].is_empty() {
                    SelectionReason::CoverageNovel
                } else {
                    SelectionReason::FaultRevealing
                },
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dialect {
    #[default]
    PythonPytest,
}

#[derive(Debug, Clone)]
pub struct EmitOptions {
    /// Default for `BASE_URL`; the session's base URL.
    pub base_url: String,
    pub dialect: Dialect,
    pub test_timeout_seconds: u32,
    pub request_timeout_seconds: u32,
}

impl EmitOptions {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            dialect: Dialect::PythonPytest,
            test_timeout_seconds: 60,
            request_timeout_seconds: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFile {
    /// Relative to the output directory.
    pub path: String,
    pub text: String,
}

/// Where a test lives, with 1-based inclusive lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedTest {
    pub name: String,
    pub file: String,
    pub start_line: usize,
    pub end_line: usize,
    pub test_id: usize,
    pub operations_called: Vec<String>,
    pub faults: Vec<Fault>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmittedSuite {
    pub files: Vec<EmittedFile>,
    pub tests: Vec<EmittedTest>,
}

impl EmittedSuite {
    pub fn file(&self, path: &str) -> Option<&EmittedFile> {
        self.files.iter().find(|f| f.path == path)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("selected test {0} is not part of the session")]
    UnknownTest(usize),
    #[error("selected test {test_id} has no recorded exchange for action {action}")]
    MissingExchange { test_id: usize, action: usize },
}

const FILE_HEADER: &str = r##"# Generated by wfc. Point the suite at another deployment with SUT_BASE_URL.
import functools
import json
import os
import signal
import urllib.parse

import requests

BASE_URL = os.environ.get("SUT_BASE_URL", __BASE_URL__).rstrip("/")
TIMEOUT_SECONDS = __TEST_TIMEOUT__
REQUEST_TIMEOUT = __REQUEST_TIMEOUT__


def _timeout(seconds):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            if not hasattr(signal, "SIGALRM"):
                return fn(*args, **kwargs)

            def expired(signum, frame):
                raise TimeoutError("%s exceeded %ss" % (fn.__name__, seconds))

            previous = signal.signal(signal.SIGALRM, expired)
            signal.alarm(seconds)
            try:
                return fn(*args, **kwargs)
            finally:
                signal.alarm(0)
                signal.signal(signal.SIGALRM, previous)

        return wrapper

    return decorate


def _json_pointer(doc, pointer):
    if pointer == "":
        return doc
    for raw in pointer[1:].split("/"):
        token = raw.replace("~1", "/").replace("~0", "~")
        doc = doc[int(token)] if isinstance(doc, list) else doc[token]
    return doc


def _text(value):
    return value if isinstance(value, str) else json.dumps(value)


def _seg(value):
    return urllib.parse.quote(_text(value), safe="")


def _last_segment(location):
    path = location.split("?")[0].split("#")[0].rstrip("/")
    return urllib.parse.unquote(path.rsplit("/", 1)[-1])
"##;

const VOLATILE_WORDS: [&str; 6] = ["timestamp", "date", "time", "id", "uuid", "token"];
const MAX_FIELD_ASSERTIONS: usize = 20;

/// Writes the selected tests as pytest modules: one file per lowest fault
/// code, plus `test_coverage.py` for tests that found nothing.
pub fn emit_suite(
    selection: &SuiteSelection,
    session: &SessionResult,
    schema: &ApiSchema,
    auth_entries: &[ResolvedAuth],
    options: &EmitOptions,
) -> Result<EmittedSuite, EmitError> {
    let Dialect::PythonPytest = options.dialect;
    let mut by_exchange: HashMap<usize, Vec<Fault>> = HashMap::new();
    for firing in &session.firings {
        let list = by_exchange.entry(firing.exchange_index).or_default();
        if !list.contains(&firing.fault) {
            list.push(firing.fault.clone());
        }
    }
    let mut exchanges_by_test: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, ex) in session.exchanges.iter().enumerate() {
        exchanges_by_test.entry(ex.test_id).or_default().push(i);
    }
    let failed_users: BTreeSet<&str> = session.auth_failures.iter().map(|(u, _)| u.as_str()).collect();

    let mut groups: BTreeMap<Option<u16>, Vec<PreparedTest>> = BTreeMap::new();
    for sel in &selection.selected {
        let test = session
            .tests
            .iter()
            .find(|t| t.id == sel.test_id)
            .ok_or(EmitError::UnknownTest(sel.test_id))?;
        let indices = exchanges_by_test.get(&test.id).cloned().unwrap_or_default();
        let mut exchanges = Vec::new();
        let mut faults = Vec::new();
        for a in 0..test.actions.len() {
            let idx = indices
                .iter()
                .copied()
                .find(|&i| session.exchanges[i].action_index == a)
                .ok_or(EmitError::MissingExchange {
                    test_id: test.id,
                    action: a,
                })?;
            let found = by_exchange.get(&idx).cloned().unwrap_or_default();
            for f in &found {
                if !faults.contains(f) {
                    faults.push(f.clone());
                }
            }
            exchanges.push((&session.exchanges[idx], found));
        }
        let key = faults.iter().map(|f| f.code).min();
        groups.entry(key.map(Some).unwrap_or(None)).or_default().push(PreparedTest { exchanges, faults });
    }

    // fault files first, ordered by code, coverage last
    let mut ordered: Vec<(Option<u16>, Vec<PreparedTest>)> = groups.into_iter().collect();
    ordered.sort_by_key(|(k, _)| (k.is_none(), *k));

    let ctx = RenderCtx {
        schema,
        auth_entries,
        failed_users,
    };
    let header = FILE_HEADER
        .replace("__BASE_URL__", &py_str(options.base_url.trim_end_matches('/')))
        .replace("__TEST_TIMEOUT__", &options.test_timeout_seconds.to_string())
        .replace("__REQUEST_TIMEOUT__", &options.request_timeout_seconds.to_string());
    let mut suite = EmittedSuite::default();
    let mut ordinal = 0;
    for (code, tests) in ordered {
        let path = match code {
            Some(c) => format!("test_faults_{c}.py"),
            None => "test_coverage.py".to_string(),
        };
        let mut lines: Vec<String> = header.lines().map(str::to_string).collect();
        for t in tests {
            ordinal += 1;
            let name = test_name(ordinal, &t);
            lines.push(String::new());
            lines.push(String::new());
            let start_line = lines.len() + 1;
            lines.extend(ctx.render_test(&name, &t));
            suite.tests.push(EmittedTest {
                name,
                file: path.clone(),
                start_line,
                end_line: lines.len(),
                test_id: t.exchanges[0].0.test_id,
                operations_called: t.exchanges.iter().map(|(e, _)| e.action.endpoint.clone()).collect(),
                faults: t.faults.clone(),
            });
        }
        let mut text = lines.join("\n");
        text.push('\n');
        suite.files.push(EmittedFile { path, text });
    }
    Ok(suite)
}

struct PreparedTest<'a> {
    exchanges: Vec<(&'a HttpExchange, Vec<Fault>)>,
    faults: Vec<Fault>,
}

fn test_name(ordinal: usize, t: &PreparedTest) -> String {
    let focus = t
        .exchanges
        .iter()
        .find(|(_, f)| !f.is_empty())
        .or(t.exchanges.last())
        .map(|(e, _)| e.action.endpoint.as_str())
        .unwrap_or("");
    let mut name = format!("test_{ordinal}_{}", slug(focus));
    let codes: BTreeSet<u16> = t.faults.iter().map(|f| f.code).collect();
    if !codes.is_empty() {
        name.push_str("_shows_faults");
        for c in codes {
            name.push_str(&format!("_{c}"));
        }
    }
    name
}

/// `GET:/api/tags/{id}` -> `get_api_tags_id`
pub fn slug(identity: &str) -> String {
    identity
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_ascii_lowercase())
        .collect::<Vec<_>>()
        .join("_")
}

struct RenderCtx<'a> {
    schema: &'a ApiSchema,
    auth_entries: &'a [ResolvedAuth],
    failed_users: BTreeSet<&'a str>,
}

impl RenderCtx<'_> {
    fn render_test(&self, name: &str, t: &PreparedTest) -> Vec<String> {
        let mut out = vec!["# Calls:".to_string()];
        for (ex, _) in &t.exchanges {
            let status = ex.status.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
            out.push(format!("# ({status}) {}", ex.action.endpoint));
        }
        if !t.faults.is_empty() {
            let codes: BTreeSet<u16> = t.faults.iter().map(|f| f.code).collect();
            let codes: Vec<String> = codes.iter().map(u16::to_string).collect();
            out.push(format!(
                "# Found {} potential fault(s) of type-code(s) {}",
                t.faults.len(),
                codes.join(", ")
            ));
        }
        out.push("@_timeout(TIMEOUT_SECONDS)".into());
        out.push(format!("def {name}():"));

        let mut body = Vec::new();
        let mut auth_vars: BTreeMap<String, String> = BTreeMap::new();
        for (ex, _) in &t.exchanges {
            let Some(user) = &ex.action.auth_user else { continue };
            if auth_vars.contains_key(user) || self.failed_users.contains(user.as_str()) {
                continue;
            }
            let Some(entry) = self.auth_entries.iter().find(|e| &e.name == user) else {
                continue;
            };
            let var = unique_ident(&format!("auth_{}", ident(user)), auth_vars.values());
            body.extend(login_preamble(entry, &var));
            auth_vars.insert(user.clone(), var);
        }
        if !body.is_empty() {
            body.push(String::new());
        }
        for (i, (ex, faults)) in t.exchanges.iter().enumerate() {
            if i > 0 {
                body.push(String::new());
            }
            let auth = ex.action.auth_user.as_ref().and_then(|u| auth_vars.get(u));
            body.extend(self.render_call(i, ex, faults, auth.map(String::as_str)));
        }
        out.extend(body.into_iter().map(|l| if l.is_empty() { l } else { format!("    {l}") }));
        out
    }

    fn render_call(&self, i: usize, ex: &HttpExchange, faults: &[Fault], auth: Option<&str>) -> Vec<String> {
        let op = &self.schema.operations[ex.action.operation_index];
        let mut url = format!("BASE_URL + {}", self.path_expr(op.path_template.as_str(), ex));
        if !ex.action.query_values.is_empty() {
            url = format!("{url} + {}", py_str(&format!("?{}", encode_query(&ex.action.query_values))));
        }
        let mut args = vec![url];
        let mut headers: Vec<String> = Vec::new();
        if let Some(var) = auth {
            headers.push(format!("**{var}"));
        }
        for (k, v) in &ex.request.headers {
            headers.push(format!("{}: {}", py_str(k), py_str(v)));
        }
        if !headers.is_empty() {
            args.push(format!("headers={{{}}}", headers.join(", ")));
        }
        if let Some(body) = &ex.request.body {
            args.push(format!("data={}", py_bytes(body)));
        }
        args.push("allow_redirects=False".into());
        args.push("timeout=REQUEST_TIMEOUT".into());
        let verb = ex.request.method.to_ascii_lowercase();
        let call = if ["get", "post", "put", "delete", "patch", "head", "options"].contains(&verb.as_str()) {
            format!("requests.{verb}({})", args.join(", "))
        } else {
            format!("requests.request({}, {})", py_str(&ex.request.method), args.join(", "))
        };
        let res = format!("res_{i}");
        let Some(status) = ex.status else {
            return vec![
                "try:".into(),
                format!("    {call}"),
                "except requests.RequestException:".into(),
                "    pass".into(),
            ];
        };
        let mut out = vec![format!("{res} = {call}")];
        let mutating = matches!(ex.request.method.as_str(), "PUT" | "PATCH" | "DELETE");
        let family_only = mutating && !op.placeholders().is_empty() && ex.chained.is_empty() && faults.is_empty();
        if family_only {
            out.push(format!("assert {res}.status_code // 100 == {}", status / 100));
            return out;
        }
        out.push(format!("assert {res}.status_code == {status}"));
        for f in faults {
            let name = category(f.code).map(|c| c.name.as_str()).unwrap_or("Unknown");
            out.push(format!("# Fault{}. {}. {}", f.code, name, f.endpoint));
        }
        let content_type = ex.response_header("Content-Type").map(|c| {
            c.split(';').next().unwrap_or("").trim().to_ascii_lowercase()
        });
        let declared = op.response_for(status).is_some_and(|d| !d.media_types.is_empty());
        if let (true, Some(ct)) = (declared, &content_type) {
            if !ct.is_empty() {
                out.push(format!("assert {} in {res}.headers.get(\"content-type\", \"\")", py_str(ct)));
            }
        }
        let json_like = content_type.as_deref().is_none_or(|c| c.contains("json"));
        if let (true, Some(Value::Object(_))) = (json_like, &ex.response_json) {
            let mut fields = Vec::new();
            scalar_fields(ex.response_json.as_ref().unwrap(), &mut Vec::new(), &mut fields);
            if !fields.is_empty() {
                let body = format!("body_{i}");
                out.push(format!("{body} = {res}.json()"));
                for (path, value) in fields.into_iter().take(MAX_FIELD_ASSERTIONS) {
                    let target = format!("{body}{}", path.iter().map(|k| format!("[{}]", py_str(k))).collect::<String>());
                    match value {
                        Value::Null => out.push(format!("assert {target} is None")),
                        Value::Bool(b) => out.push(format!("assert {target} is {}", if *b { "True" } else { "False" })),
                        other => out.push(format!("assert {target} == {}", py_scalar(other))),
                    }
                }
            }
        }
        out
    }

    // Python expression for the path: literal where values were sampled,
    // pulled from earlier responses where they were chained.
    fn path_expr(&self, template: &str, ex: &HttpExchange) -> String {
        let mut parts: Vec<String> = Vec::new();
        let mut literal = String::new();
        let mut rest = template;
        let placeholders = path_placeholders(template);
        while let Some(open) = rest.find('{') {
            let Some(close) = rest[open..].find('}').map(|c| c + open) else { break };
            let name = &rest[open + 1..close];
            literal.push_str(&rest[..open]);
            if !placeholders.iter().any(|p| p == name) {
                literal.push_str(&rest[open..=close]);
            } else if let Some(c) = ex.chained.iter().find(|c| c.param == name) {
                if !literal.is_empty() {
                    parts.push(py_str(&literal));
                    literal.clear();
                }
                let source = format!("res_{}", c.source_action);
                parts.push(match c.source {
                    ChainSource::IdField => format!("_seg({source}.json()[\"id\"])"),
                    ChainSource::Location => format!("_seg(_last_segment({source}.headers[\"Location\"]))"),
                });
            } else {
                let value = ex
                    .action
                    .path_values
                    .iter()
                    .find(|(k, _)| k == name)
                    .map(|(_, v)| crate::engine::encode_path_segment(v));
                literal.push_str(&value.unwrap_or_else(|| rest[open..=close].to_string()));
            }
            rest = &rest[close + 1..];
        }
        literal.push_str(rest);
        if !literal.is_empty() || parts.is_empty() {
            parts.push(py_str(&literal));
        }
        parts.join(" + ")
    }
}

fn login_preamble(entry: &ResolvedAuth, var: &str) -> Vec<String> {
    let recipe = match &entry.mechanism {
        AuthMechanism::StaticHeaders(headers) => {
            let items: Vec<String> = headers.iter().map(|h| format!("{}: {}", py_str(&h.name), py_str(&h.value))).collect();
            return vec![format!("{var} = {{{}}}", items.join(", "))];
        }
        AuthMechanism::Login(recipe) => recipe,
    };
    let login = format!("login_{}", var.trim_start_matches("auth_"));
    let mut args = vec![format!("BASE_URL + {}", py_str(&recipe.endpoint))];
    if let Some(ct) = &recipe.content_type {
        args.push(format!("headers={{\"Content-Type\": {}}}", py_str(ct)));
    }
    if let Some(payload) = &recipe.payload_raw {
        args.push(format!("data={}", py_bytes(payload.as_bytes())));
    }
    args.push("timeout=REQUEST_TIMEOUT".into());
    let verb = recipe.verb.to_ascii_uppercase();
    let mut out = vec![format!("# login as {}", entry.name)];
    match &recipe.credential {
        CredentialSource::Cookies => {
            let session = format!("session_{}", var.trim_start_matches("auth_"));
            out.push(format!("{session} = requests.Session()"));
            out.push(format!("{login} = {session}.request({}, {})", py_str(&verb), args.join(", ")));
            out.push(format!("assert {login}.status_code // 100 == 2"));
            out.push(format!(
                "{var} = {{\"Cookie\": \"; \".join(k + \"=\" + v for k, v in sorted({session}.cookies.items()))}}"
            ));
        }
        CredentialSource::Token(token) => {
            out.push(format!("{login} = requests.request({}, {})", py_str(&verb), args.join(", ")));
            out.push(format!("assert {login}.status_code // 100 == 2"));
            out.push(format!(
                "{var} = {{{}: {} + _text(_json_pointer({login}.json(), {}))}}",
                py_str(&token.http_header_name),
                py_str(&token.header_prefix),
                py_str(token.extract_from_field.as_str())
            ));
        }
    }
    out
}

fn scalar_fields<'a>(value: &'a Value, path: &mut Vec<String>, out: &mut Vec<(Vec<String>, &'a Value)>) {
    let Value::Object(map) = value else { return };
    if path.len() >= 3 {
        return;
    }
    for (k, v) in map {
        if is_volatile_name(k) {
            continue;
        }
        match v {
            Value::Object(_) => {
                path.push(k.clone());
                scalar_fields(v, path, out);
                path.pop();
            }
            Value::Array(_) => {}
            Value::String(s) if is_date_time_like(s) => {}
            _ => {
                let mut p = path.clone();
                p.push(k.clone());
                out.push((p, v));
            }
        }
    }
}

/// Field names made of words such as `id`, `token` or `time`; camelCase and
/// snake_case are both split.
pub fn is_volatile_name(name: &str) -> bool {
    let mut words = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for c in name.chars() {
        if !c.is_ascii_alphanumeric() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            prev_lower = false;
            continue;
        }
        if c.is_ascii_uppercase() && prev_lower && !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
        prev_lower = c.is_ascii_lowercase() || c.is_ascii_digit();
        current.push(c.to_ascii_lowercase());
    }
    if !current.is_empty() {
        words.push(current);
    }
    words.iter().any(|w| VOLATILE_WORDS.contains(&w.as_str()))
}

fn ident(s: &str) -> String {
    let mut out: String = s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect();
    if out.is_empty() {
        out.push('u');
    }
    out
}

fn unique_ident<'a>(base: &str, taken: impl Iterator<Item = &'a String> + Clone) -> String {
    let mut candidate = base.to_string();
    let mut n = 2;
    while taken.clone().any(|t| *t == candidate) {
        candidate = format!("{base}_{n}");
        n += 1;
    }
    candidate
}

/// A double-quoted Python string literal.
pub fn py_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn py_bytes(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => format!("{}.encode(\"utf-8\")", py_str(s)),
        Err(_) => {
            let mut out = String::from("b\"");
            for b in bytes {
                out.push_str(&format!("\\x{b:02x}"));
            }
            out.push('"');
            out
        }
    }
}

fn py_scalar(v: &Value) -> String {
    match v {
        Value::Null => "None".into(),
        Value::Bool(true) => "True".into(),
        Value::Bool(false) => "False".into(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => py_str(s),
        other => py_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{HttpAction, Intent, TestCase};
    use crate::engine::FaultFiring;
    use crate::http::HttpRequest;
    use crate::openapi::load_schema;
    use proptest::prelude::*;

    const DOC: &str = r#"{"openapi": "3.0.0", "paths": {
        "/a": {"get": {"responses": {"200": {"description": "ok", "content": {"application/json": {"schema": {"type": "object"}}}}}}},
        "/b/{id}": {"delete": {"parameters": [{"name": "id", "in": "path", "required": true, "schema": {"type": "string"}}],
            "responses": {"204": {"description": "gone"}}}}}}"#;

    fn action(op: usize, endpoint: &str) -> HttpAction {
        HttpAction {
            operation_index: op,
            endpoint: endpoint.into(),
            path_values: vec![("id".into(), "x 1".into())],
            query_values: vec![],
            header_values: vec![],
            body: None,
            body_media: None,
            auth_user: None,
            intent: Intent::Valid,
            violation: None,
            chained: vec![],
        }
    }

    fn exchange(test_id: usize, action_index: usize, a: HttpAction, status: u16, body: Value) -> HttpExchange {
        HttpExchange {
            test_id,
            action_index,
            request: HttpRequest::new(if a.endpoint.starts_with("GET") { "GET" } else { "DELETE" }, "http://h/x"),
            action: a,
            chained: vec![],
            status: Some(status),
            response_headers: vec![("Content-Type".into(), "application/json".into())],
            response_body: body.to_string().into_bytes(),
            response_json: Some(body),
            elapsed_ms: 1,
            transport_error: None,
        }
    }

    /// tests: list of (endpoint per action, status per action)
    fn synthetic(tests: &[Vec<(usize, u16)>]) -> SessionResult {
        let endpoints = ["GET:/a", "DELETE:/b/{id}"];
        let mut s = SessionResult {
            exchanges: vec![],
            tests: vec![],
            faults: vec![],
            firings: vec![],
            operations: endpoints.iter().map(|e| e.to_string()).collect(),
            wall_time_ms: 0,
            calls_made: 0,
            login_calls: 0,
            auth_failures: vec![],
            interrupted: false,
            seed: 0,
        };
        for (id, calls) in tests.iter().enumerate() {
            let mut actions = vec![];
            for (i, &(op, status)) in calls.iter().enumerate() {
                let a = action(op, endpoints[op]);
                actions.push(a.clone());
                let ex = exchange(id, i, a, status, serde_json::json!({"message": "m", "id": 3}));
                if status == 500 {
                    let f = Fault::new(100, endpoints[op], Some("c".into()));
                    s.firings.push(FaultFiring { fault: f, exchange_index: s.exchanges.len() });
                }
                s.exchanges.push(ex);
            }
            s.tests.push(TestCase { id, actions });
        }
        s.faults = crate::oracles::dedupe_faults(s.firings.iter().map(|f| f.fault.clone()).collect());
        s
    }

    #[test]
    fn identical_fault_tests_collapse() {
        let s = synthetic(&[vec![(0, 500)], vec![(0, 500)], vec![(0, 500)]]);
        let sel = select_suite(&s);
        assert_eq!(sel.test_ids(), vec![0]);
        assert_eq!(sel.selected[0].reason, SelectionReason::FaultRevealing);
    }

    #[test]
    fn status_family_novelty_keeps_both() {
        let s = synthetic(&[vec![(0, 200)], vec![(0, 500)]]);
        assert_eq!(select_suite(&s).test_ids(), vec![0, 1]);
    }

    #[test]
    fn shorter_witness_preferred() {
        let s = synthetic(&[vec![(0, 200), (0, 500)], vec![(0, 500)], vec![(0, 200)]]);
        assert_eq!(select_suite(&s).test_ids(), vec![1, 2]);
    }

    #[test]
    fn redundant_early_pick_dropped() {
        // test 1 is picked for the fault, test 0 for (a,2xx); then test 2
        // covers the (b,2xx) pair and (a,2xx), so test 0 goes.
        let s = synthetic(&[vec![(0, 200)], vec![(0, 500)], vec![(0, 201), (1, 204)]]);
        assert_eq!(select_suite(&s).test_ids(), vec![1, 2]);
    }

    #[test]
    fn emitted_shape() {
        let schema = load_schema(DOC).unwrap();
        let s = synthetic(&[vec![(0, 500)], vec![(1, 204)]]);
        let sel = select_suite(&s);
        let suite = emit_suite(&sel, &s, &schema, &[], &EmitOptions::new("http://localhost:8080/api/")).unwrap();
        assert_eq!(suite.files.len(), 2);
        assert_eq!(suite.files[0].path, "test_faults_100.py");
        assert_eq!(suite.files[1].path, "test_coverage.py");
        let text = &suite.files[0].text;
        assert!(text.contains("os.environ.get(\"SUT_BASE_URL\", \"http://localhost:8080/api\")"));
        assert!(text.contains("# Calls:\n# (500) GET:/a\n# Found 1 potential fault(s) of type-code(s) 100\n@_timeout(TIMEOUT_SECONDS)\ndef test_1_get_a_shows_faults_100():"));
        assert!(text.contains("assert res_0.status_code == 500\n    # Fault100. HTTP Status 500. GET:/a"));
        assert!(text.contains("assert body_0[\"message\"] == \"m\""));
        assert!(!text.contains("body_0[\"id\"]"));
        assert!(!text.contains("login"));
        let cov = &suite.files[1].text;
        assert!(cov.contains("requests.delete(BASE_URL + \"/b/x%201\""));
        assert!(cov.contains("assert res_0.status_code // 100 == 2"));
        for t in &suite.tests {
            let file = suite.file(&t.file).unwrap();
            let lines: Vec<&str> = file.text.lines().collect();
            let slice = &lines[t.start_line - 1..t.end_line];
            assert_eq!(slice.iter().filter(|l| l.starts_with("def test_")).count(), 1);
            assert!(slice[0].starts_with("# Calls:"));
        }
    }

    #[test]
    fn unknown_test_is_an_error() {
        let schema = load_schema(DOC).unwrap();
        let s = synthetic(&[vec![(0, 200)]]);
        let sel = SuiteSelection {
            selected: vec![SelectedTest { test_id: 9, reason: SelectionReason::CoverageNovel }],
        };
        assert_eq!(
            emit_suite(&sel, &s, &schema, &[], &EmitOptions::new("http://h")).unwrap_err(),
            EmitError::UnknownTest(9)
        );
    }

    #[test]
    fn volatile_names() {
        for n in ["id", "userId", "created_at_time", "accessToken", "UUID", "date"] {
            assert!(is_volatile_name(n), "{n}");
        }
        for n in ["message", "valid", "width", "title", "status"] {
            assert!(!is_volatile_name(n), "{n}");
        }
    }

    #[test]
    fn python_literals() {
        assert_eq!(py_str("a\"b\\c\n\u{1}"), "\"a\\\"b\\\\c\\n\\x01\"");
        assert_eq!(py_bytes(&[0xff]), "b\"\\xff\"");
        assert_eq!(slug("GET:/api/tags/{id}"), "get_api_tags_id");
    }

    fn brute_force_covers(s: &SessionResult, ids: &[usize]) -> bool {
        let index = CoverageIndex::build(s);
        let mut faults = BTreeSet::new();
        let mut pairs = BTreeSet::new();
        for &id in ids {
            let t = s.tests.iter().position(|t| t.id == id).unwrap();
            faults.extend(index.test_faults[t].iter().copied());
            pairs.extend(index.test_pairs[t].iter().copied());
        }
        faults.len() == s.faults.len() && pairs.len() == index.pairs.len()
    }

    proptest! {
        #[test]
        fn selection_is_a_minimal_cover(tests in prop::collection::vec(
            prop::collection::vec((0usize..2, prop::sample::select(vec![200u16, 204, 404, 500])), 1..4), 1..25)) {
            let s = synthetic(&tests);
            let ids = select_suite(&s).test_ids();
            prop_assert!(brute_force_covers(&s, &ids));
            let index = CoverageIndex::build(&s);
            prop_assert!(ids.len() <= s.faults.len() + index.pairs.len());
            for skip in 0..ids.len() {
                let mut fewer = ids.clone();
                fewer.remove(skip);
                prop_assert!(!brute_force_covers(&s, &fewer), "test {} redundant", ids[skip]);
            }
        }
    }
}
