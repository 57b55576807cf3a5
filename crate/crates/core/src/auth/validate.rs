use std::collections::HashMap;
use std::fmt;

use crate::pointer::JsonPointer;

use super::model::{merge_template, AuthFile};

const VERBS: [&str; 7] = ["GET", "POST", "PUT", "PATCH", "DELETE", "HEAD", "OPTIONS"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    EmptyAuthList,
    MissingName,
    EmptyName,
    DuplicateName,
    NoMechanism,
    AmbiguousMechanism,
    MissingEndpoint,
    EndpointNotAbsolute,
    MissingVerb,
    InvalidVerb,
    MissingContentType,
    NoCredentialSource,
    AmbiguousCredentialSource,
    MissingTokenPointer,
    InvalidJsonPointer,
    MissingTokenHeader,
    EmptyStaticHeaders,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}", self.code, self.path)
    }
}

/// Checks the resolved form of the file. Paths point at the entry that
/// carries the defect after the template has been applied.
pub fn validate_auth_file(file: &AuthFile) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, path: String| out.push(Violation { code, path });
    if file.auth.is_empty() {
        push(ViolationCode::EmptyAuthList, "auth".into());
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, entry) in merge_template(file).iter().enumerate() {
        let base = format!("auth[{i}]");
        match entry.name.as_deref() {
            None => push(ViolationCode::MissingName, format!("{base}.name")),
            Some("") => push(ViolationCode::EmptyName, format!("{base}.name")),
            Some(name) => {
                if seen.insert(name.to_string(), i).is_some() {
                    push(ViolationCode::DuplicateName, format!("{base}.name"));
                }
            }
        }
        match (&entry.login_endpoint_auth, &entry.static_headers) {
            (None, None) => push(ViolationCode::NoMechanism, base.clone()),
            (Some(_), Some(_)) => push(ViolationCode::AmbiguousMechanism, base.clone()),
            (None, Some(headers)) => {
                if headers.is_empty() {
                    push(ViolationCode::EmptyStaticHeaders, format!("{base}.staticHeaders"));
                }
            }
            (Some(login), None) => {
                let lbase = format!("{base}.loginEndpointAuth");
                match login.endpoint.as_deref() {
                    None => push(ViolationCode::MissingEndpoint, format!("{lbase}.endpoint")),
                    Some(e) if !e.starts_with('/') => {
                        push(ViolationCode::EndpointNotAbsolute, format!("{lbase}.endpoint"))
                    }
                    Some(_) => {}
                }
                match login.verb.as_deref() {
                    None => push(ViolationCode::MissingVerb, format!("{lbase}.verb")),
                    Some(v) if !VERBS.contains(&v.to_ascii_uppercase().as_str()) => {
                        push(ViolationCode::InvalidVerb, format!("{lbase}.verb"))
                    }
                    Some(_) => {}
                }
                if login.payload_raw.is_some() && login.content_type.is_none() {
                    push(ViolationCode::MissingContentType, format!("{lbase}.contentType"));
                }
                let cookies = login.expect_cookies.unwrap_or(false);
                match (cookies, &login.token) {
                    (false, None) => push(ViolationCode::NoCredentialSource, lbase.clone()),
                    (true, Some(_)) => push(ViolationCode::AmbiguousCredentialSource, lbase.clone()),
                    (true, None) => {}
                    (false, Some(token)) => {
                        let tbase = format!("{lbase}.token");
                        match token.extract_from_field.as_deref() {
                            None => push(
                                ViolationCode::MissingTokenPointer,
                                format!("{tbase}.extractFromField"),
                            ),
                            Some(p) => {
                                if JsonPointer::parse(p).is_err() {
                                    push(
                                        ViolationCode::InvalidJsonPointer,
                                        format!("{tbase}.extractFromField"),
                                    );
                                }
                            }
                        }
                        if token.http_header_name.as_deref().map_or(true, str::is_empty) {
                            push(ViolationCode::MissingTokenHeader, format!("{tbase}.httpHeaderName"));
                        }
                    }
                }
            }
        }
    }
    out
}
