use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::Value;

use crate::http::{HttpRequest, HttpResponse, Transport, TransportError};
use crate::pointer::JsonPointer;

use super::model::{AuthMechanism, CredentialSource, Header, LoginRecipe, ResolvedAuth};

const MAX_LOGIN_REDIRECTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CredentialKind {
    Cookies(BTreeMap<String, String>),
    Header { name: String, value: String },
    StaticHeaders(Vec<Header>),
}

/// Credentials obtained for one user. Immutable once built.
#[derive(Debug, Clone)]
pub struct CredentialMaterial {
    user_name: String,
    kind: CredentialKind,
    acquired_at: Instant,
}

impl CredentialMaterial {
    pub fn new(user_name: impl Into<String>, kind: CredentialKind) -> Result<Self, AuthFlowError> {
        if let CredentialKind::Cookies(map) = &kind {
            if map.is_empty() {
                return Err(AuthFlowError::MissingCookies);
            }
        }
        Ok(Self {
            user_name: user_name.into(),
            kind,
            acquired_at: Instant::now(),
        })
    }

    pub fn user_name(&self) -> &str {
        &self.user_name
    }

    pub fn kind(&self) -> &CredentialKind {
        &self.kind
    }

    pub fn acquired_at(&self) -> Instant {
        self.acquired_at
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuthFlowError {
    #[error("login request failed: {0}")]
    LoginTransportError(#[from] TransportError),
    #[error("login rejected with status {status}")]
    LoginRejected { status: u16 },
    #[error("token not found at {pointer}")]
    TokenNotFound { pointer: String },
    #[error("value at {pointer} is not a scalar")]
    NonScalarToken { pointer: String },
    #[error("login response body is not JSON")]
    MalformedLoginResponse,
    #[error("login response did not set any cookie")]
    MissingCookies,
}

/// Reads the token at `pointer`. Numbers and booleans are rendered as JSON text.
pub fn extract_token(body: &Value, pointer: &JsonPointer) -> Result<String, AuthFlowError> {
    match pointer.resolve(body) {
        None | Some(Value::Null) => Err(AuthFlowError::TokenNotFound {
            pointer: pointer.to_string(),
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(v @ (Value::Number(_) | Value::Bool(_))) => Ok(v.to_string()),
        Some(Value::Array(_) | Value::Object(_)) => Err(AuthFlowError::NonScalarToken {
            pointer: pointer.to_string(),
        }),
    }
}

pub fn acquire_credentials(
    entry: &ResolvedAuth,
    base_url: &str,
    transport: &dyn Transport,
) -> Result<CredentialMaterial, AuthFlowError> {
    let recipe = match &entry.mechanism {
        AuthMechanism::StaticHeaders(headers) => {
            return CredentialMaterial::new(&entry.name, CredentialKind::StaticHeaders(headers.clone()))
        }
        AuthMechanism::Login(recipe) => recipe,
    };
    let (response, cookies) = perform_login(recipe, base_url, transport)?;
    if !response.is_success() {
        return Err(AuthFlowError::LoginRejected {
            status: response.status,
        });
    }
    let kind = match &recipe.credential {
        CredentialSource::Cookies => CredentialKind::Cookies(cookies),
        CredentialSource::Token(token) => {
            let body: Value =
                serde_json::from_slice(&response.body).map_err(|_| AuthFlowError::MalformedLoginResponse)?;
            let raw = extract_token(&body, &token.extract_from_field).map_err(|e| match e {
                AuthFlowError::NonScalarToken { pointer } => AuthFlowError::TokenNotFound { pointer },
                other => other,
            })?;
            CredentialKind::Header {
                name: token.http_header_name.clone(),
                value: format!("{}{}", token.header_prefix, raw),
            }
        }
    };
    CredentialMaterial::new(&entry.name, kind)
}

pub fn login_request(recipe: &LoginRecipe, base_url: &str) -> HttpRequest {
    let url = format!("{}{}", base_url.trim_end_matches('/'), recipe.endpoint);
    let mut request = HttpRequest::new(&recipe.verb, url);
    if let Some(ct) = &recipe.content_type {
        request.set_header("Content-Type", ct);
    }
    if let Some(payload) = &recipe.payload_raw {
        request.body = Some(payload.clone().into_bytes());
    }
    request
}

// Follows up to three redirects, accumulating cookies set along the way.
fn perform_login(
    recipe: &LoginRecipe,
    base_url: &str,
    transport: &dyn Transport,
) -> Result<(HttpResponse, BTreeMap<String, String>), AuthFlowError> {
    let mut request = login_request(recipe, base_url);
    let mut cookies = BTreeMap::new();
    let mut hops = 0;
    loop {
        let response = transport.send(&request)?;
        collect_cookies(&response, &mut cookies);
        let location = response.header("Location").map(str::to_string);
        let redirect = matches!(response.status, 301 | 302 | 303 | 307 | 308);
        match location {
            Some(loc) if redirect && hops < MAX_LOGIN_REDIRECTS => {
                hops += 1;
                let next_url = url::Url::parse(&request.url)
                    .and_then(|u| u.join(&loc))
                    .map(|u| u.to_string())
                    .unwrap_or(loc);
                let keep_method = matches!(response.status, 307 | 308);
                let mut next = if keep_method {
                    let mut r = request.clone();
                    r.url = next_url;
                    r
                } else {
                    HttpRequest::new("GET", next_url)
                };
                if !cookies.is_empty() {
                    next.set_header("Cookie", cookie_header(&cookies));
                }
                request = next;
            }
            _ => return Ok((response, cookies)),
        }
    }
}

fn collect_cookies(response: &HttpResponse, into: &mut BTreeMap<String, String>) {
    for raw in response.header_all("Set-Cookie") {
        let pair = raw.split(';').next().unwrap_or("").trim();
        if let Some((name, value)) = pair.split_once('=') {
            let name = name.trim();
            if !name.is_empty() {
                into.insert(name.to_string(), value.trim().to_string());
            }
        }
    }
}

fn cookie_header(cookies: &BTreeMap<String, String>) -> String {
    cookies
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Applies credentials through headers only; the URL and body are untouched.
pub fn decorate_request(mut request: HttpRequest, material: &CredentialMaterial) -> HttpRequest {
    match &material.kind {
        CredentialKind::Header { name, value } => request.set_header(name, value.clone()),
        CredentialKind::Cookies(cookies) => request.set_header("Cookie", cookie_header(cookies)),
        CredentialKind::StaticHeaders(headers) => {
            for h in headers {
                request.set_header(&h.name, h.value.clone());
            }
        }
    }
    request
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auth::TokenConfig;
    use proptest::prelude::*;
    use serde_json::json;
    use std::sync::Mutex;

    struct Scripted {
        responses: Mutex<Vec<HttpResponse>>,
        seen: Mutex<Vec<HttpRequest>>,
    }

    impl Scripted {
        fn new(responses: Vec<HttpResponse>) -> Self {
            Self {
                responses: Mutex::new(responses),
                seen: Mutex::new(Vec::new()),
            }
        }
        fn calls(&self) -> usize {
            self.seen.lock().unwrap().len()
        }
    }

    impl Transport for Scripted {
        fn send(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
            self.seen.lock().unwrap().push(request.clone());
            let mut r = self.responses.lock().unwrap();
            if r.is_empty() {
                return Err(TransportError::Connection("refused".into()));
            }
            Ok(r.remove(0))
        }
    }

    fn response(status: u16, headers: &[(&str, &str)], body: &str) -> HttpResponse {
        HttpResponse {
            status,
            headers: headers.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            body: body.as_bytes().to_vec(),
        }
    }

    fn token_entry(pointer: &str) -> ResolvedAuth {
        ResolvedAuth {
            name: "admin".into(),
            mechanism: AuthMechanism::Login(LoginRecipe {
                endpoint: "/api/auth/signin".into(),
                verb: "POST".into(),
                content_type: Some("application/json".into()),
                payload_raw: Some(r#"{"usernameOrEmail": "admin", "password": "bar123"}"#.into()),
                credential: CredentialSource::Token(TokenConfig {
                    extract_from_field: JsonPointer::parse(pointer).unwrap(),
                    http_header_name: "Authorization".into(),
                    header_prefix: "Bearer ".into(),
                }),
            }),
        }
    }

    fn cookie_entry() -> ResolvedAuth {
        ResolvedAuth {
            name: "ADMIN".into(),
            mechanism: AuthMechanism::Login(LoginRecipe {
                endpoint: "/login".into(),
                verb: "POST".into(),
                content_type: Some("application/x-www-form-urlencoded".into()),
                payload_raw: Some("username=admin&password=admin".into()),
                credential: CredentialSource::Cookies,
            }),
        }
    }

    #[test]
    fn token_login_assembles_header() {
        let t = Scripted::new(vec![response(200, &[], r#"{"accessToken":"xyz"}"#)]);
        let m = acquire_credentials(&token_entry("/accessToken"), "http://h:1/base/", &t).unwrap();
        assert_eq!(
            m.kind(),
            &CredentialKind::Header {
                name: "Authorization".into(),
                value: "Bearer xyz".into()
            }
        );
        assert_eq!(t.calls(), 1);
        let sent = &t.seen.lock().unwrap()[0];
        assert_eq!(sent.url, "http://h:1/base/api/auth/signin");
        assert_eq!(sent.method, "POST");
        assert_eq!(sent.header("content-type"), Some("application/json"));
        assert_eq!(
            sent.body.as_deref(),
            Some(br#"{"usernameOrEmail": "admin", "password": "bar123"}"#.as_slice())
        );
    }

    #[test]
    fn cookie_login_captures_cookies() {
        let t = Scripted::new(vec![response(
            200,
            &[("Set-Cookie", "SESSION=abc; Path=/; HttpOnly")],
            "",
        )]);
        let m = acquire_credentials(&cookie_entry(), "http://h:1", &t).unwrap();
        let expected: BTreeMap<_, _> = [("SESSION".to_string(), "abc".to_string())].into();
        assert_eq!(m.kind(), &CredentialKind::Cookies(expected));
        assert_eq!(t.seen.lock().unwrap()[0].body.as_deref(), Some(b"username=admin&password=admin".as_slice()));
    }

    #[test]
    fn pointer_miss_is_token_not_found() {
        let t = Scripted::new(vec![response(200, &[], r#"{"access": {"token": "t"}}"#)]);
        let err = acquire_credentials(&token_entry("/accessToken"), "http://h", &t).unwrap_err();
        assert_eq!(
            err,
            AuthFlowError::TokenNotFound {
                pointer: "/accessToken".into()
            }
        );
    }

    #[test]
    fn object_token_in_login_is_token_not_found() {
        let t = Scripted::new(vec![response(200, &[], r#"{"access": {"token": "t"}}"#)]);
        let err = acquire_credentials(&token_entry("/access"), "http://h", &t).unwrap_err();
        assert!(matches!(err, AuthFlowError::TokenNotFound { .. }));
    }

    #[test]
    fn non_json_body_is_malformed() {
        let t = Scripted::new(vec![response(200, &[], "<html>")]);
        let err = acquire_credentials(&token_entry("/accessToken"), "http://h", &t).unwrap_err();
        assert_eq!(err, AuthFlowError::MalformedLoginResponse);
    }

    #[test]
    fn rejected_login_carries_status() {
        let t = Scripted::new(vec![response(401, &[], "{}")]);
        let err = acquire_credentials(&token_entry("/accessToken"), "http://h", &t).unwrap_err();
        assert_eq!(err, AuthFlowError::LoginRejected { status: 401 });
    }

    #[test]
    fn transport_failure() {
        let t = Scripted::new(vec![]);
        let err = acquire_credentials(&cookie_entry(), "http://h", &t).unwrap_err();
        assert!(matches!(err, AuthFlowError::LoginTransportError(_)));
    }

    #[test]
    fn cookies_required_when_expected() {
        let t = Scripted::new(vec![response(200, &[], "")]);
        assert_eq!(
            acquire_credentials(&cookie_entry(), "http://h", &t).unwrap_err(),
            AuthFlowError::MissingCookies
        );
    }

    #[test]
    fn follows_up_to_three_redirects() {
        let t = Scripted::new(vec![
            response(302, &[("Location", "/a"), ("Set-Cookie", "A=1")], ""),
            response(302, &[("Location", "/b")], ""),
            response(302, &[("Location", "/c")], ""),
            response(200, &[("Set-Cookie", "SESSION=z")], ""),
        ]);
        let m = acquire_credentials(&cookie_entry(), "http://h", &t).unwrap();
        let CredentialKind::Cookies(c) = m.kind() else { panic!() };
        assert_eq!(c.len(), 2);
        let seen = t.seen.lock().unwrap();
        assert_eq!(seen[1].url, "http://h/a");
        assert_eq!(seen[1].method, "GET");
        assert_eq!(seen[1].header("Cookie"), Some("A=1"));
    }

    #[test]
    fn fourth_redirect_is_rejected() {
        let t = Scripted::new(vec![
            response(302, &[("Location", "/a"), ("Set-Cookie", "A=1")], ""),
            response(302, &[("Location", "/b")], ""),
            response(302, &[("Location", "/c")], ""),
            response(302, &[("Location", "/d")], ""),
        ]);
        assert_eq!(
            acquire_credentials(&cookie_entry(), "http://h", &t).unwrap_err(),
            AuthFlowError::LoginRejected { status: 302 }
        );
        assert_eq!(t.calls(), 4);
    }

    #[test]
    fn static_headers_need_no_network() {
        let t = Scripted::new(vec![]);
        let entry = ResolvedAuth {
            name: "svc".into(),
            mechanism: AuthMechanism::StaticHeaders(vec![Header {
                name: "X-Api-Key".into(),
                value: "k".into(),
            }]),
        };
        let m = acquire_credentials(&entry, "http://h", &t).unwrap();
        assert_eq!(t.calls(), 0);
        let r = decorate_request(HttpRequest::new("GET", "http://h/x"), &m);
        assert_eq!(r.header("x-api-key"), Some("k"));
    }

    #[test]
    fn extract_token_cases() {
        let p = |s| JsonPointer::parse(s).unwrap();
        assert_eq!(extract_token(&json!({"accessToken": "abc"}), &p("/accessToken")).unwrap(), "abc");
        assert_eq!(extract_token(&json!({"data": {"jwt": "q"}}), &p("/data/jwt")).unwrap(), "q");
        assert_eq!(extract_token(&json!({"a": ["x", "y"]}), &p("/a/1")).unwrap(), "y");
        assert_eq!(extract_token(&json!({"n": 42}), &p("/n")).unwrap(), "42");
        assert_eq!(extract_token(&json!({"b": true}), &p("/b")).unwrap(), "true");
        assert!(matches!(
            extract_token(&json!({"o": {}}), &p("/o")),
            Err(AuthFlowError::NonScalarToken { .. })
        ));
    }

    #[test]
    fn decorate_overwrites_existing_header() {
        let mut req = HttpRequest::new("GET", "http://h/api/tags/2");
        req.set_header("Authorization", "old");
        let m = CredentialMaterial::new(
            "admin",
            CredentialKind::Header {
                name: "Authorization".into(),
                value: "Bearer xyz".into(),
            },
        )
        .unwrap();
        let out = decorate_request(req.clone(), &m);
        assert_eq!(out.header("Authorization"), Some("Bearer xyz"));
        assert_eq!(out.headers.len(), 1);
        assert_eq!((out.url.as_str(), out.body.as_ref()), (req.url.as_str(), req.body.as_ref()));
    }

    #[test]
    fn empty_cookie_material_cannot_be_built() {
        assert!(CredentialMaterial::new("u", CredentialKind::Cookies(BTreeMap::new())).is_err());
    }

    proptest! {
        #[test]
        fn prefix_is_concatenated_verbatim(prefix in ".{0,8}", token in ".{0,16}") {
            let mut entry = token_entry("/t");
            if let AuthMechanism::Login(r) = &mut entry.mechanism {
                if let CredentialSource::Token(t) = &mut r.credential {
                    t.header_prefix = prefix.clone();
                }
            }
            let body = json!({"t": token}).to_string();
            let t = Scripted::new(vec![response(200, &[], &body)]);
            let m = acquire_credentials(&entry, "http://h", &t).unwrap();
            let CredentialKind::Header { value, .. } = m.kind() else { panic!() };
            prop_assert_eq!(value, &format!("{prefix}{token}"));
        }

        #[test]
        fn decoration_is_idempotent(value in "[ -~]{0,20}", body in proptest::option::of("[a-z]{0,10}")) {
            let m = CredentialMaterial::new("u", CredentialKind::Header { name: "Authorization".into(), value }).unwrap();
            let mut req = HttpRequest::new("POST", "http://h/x?q=1");
            req.body = body.map(String::into_bytes);
            let once = decorate_request(req.clone(), &m);
            let twice = decorate_request(once.clone(), &m);
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(&once.url, &req.url);
            prop_assert_eq!(&once.body, &req.body);
        }
    }
}
