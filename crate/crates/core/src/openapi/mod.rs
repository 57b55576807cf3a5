//! Lenient OpenAPI v2/v3 ingestion and base-URL resolution.

mod load;
mod value;

pub use load::{load_schema, FatalSchemaError};
pub use value::{NumberSchema, StringSchema, ValueSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecVersion {
    V2,
    V3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum IssueSeverity {
    Warning,
    Degraded,
}

/// A defect found during ingestion. Never fatal on its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaIssue {
    pub severity: IssueSeverity,
    /// Location in the document, as a JSON Pointer.
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            IssueSeverity::Warning => "warning",
            IssueSeverity::Degraded => "degraded",
        };
        write!(f, "{tag} at {}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamLocation {
    Path,
    Query,
    Header,
}

impl ParamLocation {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamLocation::Path => "path",
            ParamLocation::Query => "query",
            ParamLocation::Header => "header",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub location: ParamLocation,
    pub schema: ValueSchema,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestBody {
    pub media_type: String,
    pub schema: ValueSchema,
    pub required: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StatusPattern {
    Exact(u16),
    /// `2XX` and friends; holds the leading digit.
    Family(u8),
    Default,
}

impl StatusPattern {
    pub fn parse(key: &str) -> Option<Self> {
        let key = key.trim();
        if key.eq_ignore_ascii_case("default") {
            return Some(StatusPattern::Default);
        }
        let bytes = key.as_bytes();
        if bytes.len() == 3 && (b'1'..=b'5').contains(&bytes[0]) && key[1..].eq_ignore_ascii_case("xx") {
            return Some(StatusPattern::Family(bytes[0] - b'0'));
        }
        match key.parse::<u16>() {
            Ok(code) if (100..=599).contains(&code) => Some(StatusPattern::Exact(code)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeclaredResponse {
    /// Schema of the JSON body, when one is declared.
    pub schema: Option<ValueSchema>,
    /// Declared media types; empty when the response has no content.
    pub media_types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiOperation {
    /// Upper-case HTTP verb.
    pub verb: String,
    pub path_template: String,
    /// `VERB:path_template`, with a `#n` suffix on collisions.
    pub identity: String,
    pub parameters: Vec<Parameter>,
    pub body: Option<RequestBody>,
    pub declared_responses: Vec<(StatusPattern, DeclaredResponse)>,
    pub security_required: bool,
}

impl ApiOperation {
    /// The declaration covering `status`: exact code, then family, then default.
    pub fn response_for(&self, status: u16) -> Option<&DeclaredResponse> {
        let find = |p: StatusPattern| self.declared_responses.iter().find(|(k, _)| *k == p).map(|(_, r)| r);
        find(StatusPattern::Exact(status))
            .or_else(|| find(StatusPattern::Family((status / 100) as u8)))
            .or_else(|| find(StatusPattern::Default))
    }

    pub fn parameters_in(&self, location: ParamLocation) -> impl Iterator<Item = &Parameter> {
        self.parameters.iter().filter(move |p| p.location == location)
    }

    /// Names of `{placeholders}` in the path template, in order.
    pub fn placeholders(&self) -> Vec<String> {
        path_placeholders(&self.path_template)
    }
}

pub fn path_placeholders(template: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else { break };
        out.push(rest[open + 1..open + close].to_string());
        rest = &rest[open + close + 1..];
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiSchema {
    pub spec_version: SpecVersion,
    pub operations: Vec<ApiOperation>,
    pub issues: Vec<SchemaIssue>,
    /// v2 `basePath` or the first v3 server URL, variables substituted.
    pub raw_base: Option<String>,
}

impl ApiSchema {
    pub fn operation(&self, identity: &str) -> Option<&ApiOperation> {
        self.operations.iter().find(|o| o.identity == identity)
    }

    /// The path prefix the API is mounted under, without a trailing slash.
    pub fn path_prefix(&self) -> String {
        let Some(base) = self.raw_base.as_deref() else {
            return String::new();
        };
        let path = match url::Url::parse(base) {
            Ok(u) if u.has_host() => u.path().to_string(),
            _ => base.split(['?', '#']).next().unwrap_or("").to_string(),
        };
        let trimmed = path.trim_end_matches('/');
        if trimmed.is_empty() {
            String::new()
        } else if trimmed.starts_with('/') {
            trimmed.to_string()
        } else {
            format!("/{trimmed}")
        }
    }
}

/// `scheme://host[:port]` plus the schema's path prefix. Pure; never touches the network.
pub fn resolve_base_url(schema: &ApiSchema, host: &str, port: Option<u16>, scheme: &str) -> String {
    let authority = match port {
        Some(p) => format!("{host}:{p}"),
        None => host.to_string(),
    };
    format!("{scheme}://{authority}{}", schema.path_prefix())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid base URL {0:?}")]
pub struct BaseUrlError(pub String);

/// Applies a user-supplied `scheme://host:port` override. If the override
/// carries its own path, it is taken as the complete base and the schema's
/// prefix is not appended.
pub fn resolve_override(schema: &ApiSchema, override_url: &str) -> Result<String, BaseUrlError> {
    let parsed = url::Url::parse(override_url).map_err(|_| BaseUrlError(override_url.to_string()))?;
    let host = parsed
        .host_str()
        .ok_or_else(|| BaseUrlError(override_url.to_string()))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(BaseUrlError(override_url.to_string()));
    }
    let own_path = parsed.path().trim_end_matches('/');
    if !own_path.is_empty() {
        return Ok(format!("{}://{}{}", parsed.scheme(), authority(&parsed, host), own_path));
    }
    Ok(resolve_base_url(schema, &authority(&parsed, host), None, parsed.scheme()))
}

fn authority(u: &url::Url, host: &str) -> String {
    match u.port() {
        Some(p) => format!("{host}:{p}"),
        None => host.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_base(version: SpecVersion, base: Option<&str>) -> ApiSchema {
        ApiSchema {
            spec_version: version,
            operations: vec![],
            issues: vec![],
            raw_base: base.map(str::to_string),
        }
    }

    #[test]
    fn base_url_cases() {
        let s = with_base(SpecVersion::V2, Some("/v2"));
        assert_eq!(resolve_base_url(&s, "localhost", Some(9000), "http"), "http://localhost:9000/v2");
        let s = with_base(SpecVersion::V3, Some("http://localhost:8080/rest"));
        assert_eq!(resolve_base_url(&s, "localhost", Some(9001), "http"), "http://localhost:9001/rest");
        let s = with_base(SpecVersion::V3, Some("/api/v3"));
        assert_eq!(resolve_base_url(&s, "localhost", Some(9002), "http"), "http://localhost:9002/api/v3");
        let s = with_base(SpecVersion::V2, Some("/"));
        assert_eq!(resolve_base_url(&s, "h", Some(1), "http"), "http://h:1");
        let s = with_base(SpecVersion::V3, None);
        assert_eq!(resolve_base_url(&s, "h", None, "https"), "https://h");
        let s = with_base(SpecVersion::V3, Some("https://api.example.com/"));
        assert_eq!(resolve_base_url(&s, "h", Some(2), "http"), "http://h:2");
    }

    #[test]
    fn override_parsing() {
        let s = with_base(SpecVersion::V3, Some("/api/v3"));
        assert_eq!(resolve_override(&s, "http://localhost:9002").unwrap(), "http://localhost:9002/api/v3");
        assert_eq!(resolve_override(&s, "http://localhost:9002/").unwrap(), "http://localhost:9002/api/v3");
        assert_eq!(resolve_override(&s, "http://localhost:9002/other").unwrap(), "http://localhost:9002/other");
        assert!(resolve_override(&s, "localhost:9002").is_err());
    }

    #[test]
    fn status_patterns() {
        assert_eq!(StatusPattern::parse("200"), Some(StatusPattern::Exact(200)));
        assert_eq!(StatusPattern::parse("2XX"), Some(StatusPattern::Family(2)));
        assert_eq!(StatusPattern::parse("4xx"), Some(StatusPattern::Family(4)));
        assert_eq!(StatusPattern::parse("default"), Some(StatusPattern::Default));
        assert_eq!(StatusPattern::parse("99"), None);
        assert_eq!(StatusPattern::parse("ok"), None);
    }

    #[test]
    fn placeholders_in_order() {
        assert_eq!(path_placeholders("/a/{x}/b/{y}"), vec!["x", "y"]);
        assert!(path_placeholders("/a").is_empty());
    }
}
