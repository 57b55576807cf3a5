use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::doc::{parse_document, DocError, DocFormat};
use crate::pointer::JsonPointer;
use crate::schema::{self, SchemaError, ShippedSchema};

use super::validate::{validate_auth_file, Violation};

/// An auth configuration file exactly as written (template not applied).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    pub auth: Vec<AuthenticationInfo>,
    #[serde(rename = "authTemplate", default, skip_serializing_if = "Option::is_none")]
    pub auth_template: Option<AuthenticationInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configs: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct AuthenticationInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub login_endpoint_auth: Option<LoginEndpointAuth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_headers: Option<Vec<Header>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct LoginEndpointAuth {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_cookies: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<TokenHandling>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct TokenHandling {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extract_from_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_header_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header_prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub name: String,
    pub value: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AuthParseError {
    #[error(transparent)]
    Parse(#[from] DocError),
    #[error("auth file does not match schema: {}", join(.0))]
    SchemaViolation(Vec<SchemaError>),
}

fn join(errors: &[SchemaError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub fn parse_auth_file(text: &str, format: DocFormat) -> Result<AuthFile, AuthParseError> {
    let doc = parse_document(text, format)?;
    let errors = schema::validate(ShippedSchema::Auth, &doc);
    if !errors.is_empty() {
        return Err(AuthParseError::SchemaViolation(errors));
    }
    serde_json::from_value(doc).map_err(|e| {
        AuthParseError::SchemaViolation(vec![SchemaError {
            path: String::new(),
            message: e.to_string(),
        }])
    })
}

impl AuthFile {
    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("auth file serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("auth file serializes")
    }
}

/// Field-wise merge of each entry over the template. Entry values win; the
/// merge descends into `loginEndpointAuth` and `token` but never into lists.
pub fn merge_template(file: &AuthFile) -> Vec<AuthenticationInfo> {
    let Some(template) = &file.auth_template else {
        return file.auth.clone();
    };
    file.auth.iter().map(|entry| merge_entry(entry, template)).collect()
}

fn merge_entry(entry: &AuthenticationInfo, template: &AuthenticationInfo) -> AuthenticationInfo {
    AuthenticationInfo {
        name: entry.name.clone().or_else(|| template.name.clone()),
        login_endpoint_auth: match (&entry.login_endpoint_auth, &template.login_endpoint_auth) {
            (Some(e), Some(t)) => Some(merge_login(e, t)),
            (e, t) => e.clone().or_else(|| t.clone()),
        },
        static_headers: entry
            .static_headers
            .clone()
            .or_else(|| template.static_headers.clone()),
    }
}

fn merge_login(entry: &LoginEndpointAuth, template: &LoginEndpointAuth) -> LoginEndpointAuth {
    LoginEndpointAuth {
        endpoint: entry.endpoint.clone().or_else(|| template.endpoint.clone()),
        verb: entry.verb.clone().or_else(|| template.verb.clone()),
        content_type: entry
            .content_type
            .clone()
            .or_else(|| template.content_type.clone()),
        payload_raw: entry
            .payload_raw
            .clone()
            .or_else(|| template.payload_raw.clone()),
        expect_cookies: entry.expect_cookies.or(template.expect_cookies),
        token: match (&entry.token, &template.token) {
            (Some(e), Some(t)) => Some(TokenHandling {
                extract_from_field: e
                    .extract_from_field
                    .clone()
                    .or_else(|| t.extract_from_field.clone()),
                http_header_name: e
                    .http_header_name
                    .clone()
                    .or_else(|| t.http_header_name.clone()),
                header_prefix: e.header_prefix.clone().or_else(|| t.header_prefix.clone()),
            }),
            (e, t) => e.clone().or_else(|| t.clone()),
        },
    }
}

/// A fully resolved user: exactly one way of obtaining credentials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedAuth {
    pub name: String,
    pub mechanism: AuthMechanism,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthMechanism {
    Login(LoginRecipe),
    StaticHeaders(Vec<Header>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoginRecipe {
    /// Relative to the API base URL, starts with `/`.
    pub endpoint: String,
    pub verb: String,
    pub content_type: Option<String>,
    pub payload_raw: Option<String>,
    pub credential: CredentialSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CredentialSource {
    Cookies,
    Token(TokenConfig),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenConfig {
    pub extract_from_field: JsonPointer,
    pub http_header_name: String,
    /// Used verbatim, trailing whitespace included.
    pub header_prefix: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot resolve auth configuration: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ResolutionError {
    pub violations: Vec<Violation>,
}

pub fn resolve_template(file: &AuthFile) -> Result<Vec<ResolvedAuth>, ResolutionError> {
    let violations = validate_auth_file(file);
    if !violations.is_empty() {
        return Err(ResolutionError { violations });
    }
    Ok(merge_template(file)
        .into_iter()
        .map(|info| into_resolved(info).expect("validated entry resolves"))
        .collect())
}

// Only called on entries that passed validation.
fn into_resolved(info: AuthenticationInfo) -> Option<ResolvedAuth> {
    let name = info.name?;
    let mechanism = match (info.login_endpoint_auth, info.static_headers) {
        (Some(login), None) => {
            let credential = match (login.expect_cookies.unwrap_or(false), login.token) {
                (true, None) => CredentialSource::Cookies,
                (false, Some(t)) => CredentialSource::Token(TokenConfig {
                    extract_from_field: JsonPointer::parse(t.extract_from_field.as_deref()?).ok()?,
                    http_header_name: t.http_header_name?,
                    header_prefix: t.header_prefix.unwrap_or_default(),
                }),
                _ => return None,
            };
            AuthMechanism::Login(LoginRecipe {
                endpoint: login.endpoint?,
                verb: login.verb?.to_ascii_uppercase(),
                content_type: login.content_type,
                payload_raw: login.payload_raw,
                credential,
            })
        }
        (None, Some(headers)) => AuthMechanism::StaticHeaders(headers),
        _ => return None,
    };
    Some(ResolvedAuth { name, mechanism })
}
