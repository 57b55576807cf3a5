//! The shipped WFC document schemas and validation against them.

use std::sync::OnceLock;

use serde_json::Value;

use crate::doc::{parse_document, DocFormat};

pub const AUTH_SCHEMA_YAML: &str = include_str!("../../../schemas/auth.yaml");
pub const REPORT_SCHEMA_YAML: &str = include_str!("../../../schemas/report.yaml");
pub const FAULT_CATALOG_JSON: &str = include_str!("../../../schemas/fault_categories.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShippedSchema {
    Auth,
    Report,
}

/// One schema violation: where in the instance, and what went wrong.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    /// Dotted path such as `auth[1].loginEndpointAuth.verb`; empty for the root.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "<root>: {}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

pub fn schema_document(which: ShippedSchema) -> Value {
    let text = match which {
        ShippedSchema::Auth => AUTH_SCHEMA_YAML,
        ShippedSchema::Report => REPORT_SCHEMA_YAML,
    };
    parse_document(text, DocFormat::Yaml).expect("shipped schema is valid YAML")
}

fn validator(which: ShippedSchema) -> &'static jsonschema::Validator {
    static AUTH: OnceLock<jsonschema::Validator> = OnceLock::new();
    static REPORT: OnceLock<jsonschema::Validator> = OnceLock::new();
    let cell = match which {
        ShippedSchema::Auth => &AUTH,
        ShippedSchema::Report => &REPORT,
    };
    cell.get_or_init(|| {
        jsonschema::options()
            .should_validate_formats(true)
            .build(&schema_document(which))
            .expect("shipped schema compiles")
    })
}

pub fn validate(which: ShippedSchema, instance: &Value) -> Vec<SchemaError> {
    validator(which)
        .iter_errors(instance)
        .map(|e| SchemaError {
            path: dotted_path(e.instance_path().as_str()),
            message: e.to_string(),
        })
        .collect()
}

/// `/auth/1/name` -> `auth[1].name`
pub fn dotted_path(pointer: &str) -> String {
    let mut out = String::new();
    for token in pointer.split('/').skip(1) {
        let token = token.replace("~1", "/").replace("~0", "~");
        if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
            out.push('[');
            out.push_str(&token);
            out.push(']');
        } else {
            if !out.is_empty() {
                out.push('.');
            }
            out.push_str(&token);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_schemas_compile() {
        assert!(validate(ShippedSchema::Auth, &serde_json::json!({"auth": [{"name": "a"}]})).is_empty());
        assert!(!validate(ShippedSchema::Report, &serde_json::json!({})).is_empty());
    }

    #[test]
    fn dotted() {
        assert_eq!(dotted_path("/auth/1/name"), "auth[1].name");
        assert_eq!(dotted_path(""), "");
    }
}
