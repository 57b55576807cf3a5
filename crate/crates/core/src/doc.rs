//! Loading of JSON/YAML documents into a single `serde_json::Value` tree.

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocFormat {
    Yaml,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed YAML: {0}")]
    Yaml(#[from] serde_yaml::Error),
}

pub fn parse_document(text: &str, format: DocFormat) -> Result<Value, DocError> {
    match format {
        DocFormat::Json => Ok(serde_json::from_str(text)?),
        DocFormat::Yaml => {
            let yaml: serde_yaml::Value = serde_yaml::from_str(text)?;
            Ok(yaml_to_json(yaml))
        }
    }
}

/// Parses JSON first and falls back to YAML, which is a superset for our purposes.
pub fn parse_any(text: &str) -> Result<Value, DocError> {
    match serde_json::from_str(text) {
        Ok(v) => Ok(v),
        Err(_) => parse_document(text, DocFormat::Yaml),
    }
}

/// YAML allows non-string mapping keys (OpenAPI status codes are often bare
/// integers); they are stringified here.
pub fn yaml_to_json(value: serde_yaml::Value) -> Value {
    use serde_yaml::Value as Y;
    match value {
        Y::Null => Value::Null,
        Y::Bool(b) => Value::Bool(b),
        Y::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::Number(i.into())
            } else if let Some(u) = n.as_u64() {
                Value::Number(u.into())
            } else {
                n.as_f64()
                    .and_then(Number::from_f64)
                    .map(Value::Number)
                    .unwrap_or(Value::Null)
            }
        }
        Y::String(s) => Value::String(s),
        Y::Sequence(items) => Value::Array(items.into_iter().map(yaml_to_json).collect()),
        Y::Mapping(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                out.insert(yaml_key(k), yaml_to_json(v));
            }
            Value::Object(out)
        }
        Y::Tagged(tagged) => yaml_to_json(tagged.value),
    }
}

fn yaml_key(key: serde_yaml::Value) -> String {
    use serde_yaml::Value as Y;
    match key {
        Y::String(s) => s,
        Y::Bool(b) => b.to_string(),
        Y::Number(n) => n.to_string(),
        Y::Null => "null".to_string(),
        other => serde_yaml::to_string(&other)
            .unwrap_or_default()
            .trim()
            .to_string(),
    }
}
