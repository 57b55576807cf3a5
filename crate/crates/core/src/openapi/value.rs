//! The small value-schema vocabulary used for generation and response checks.

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StringSchema {
    pub format: Option<String>,
    pub enumeration: Option<Vec<Value>>,
    pub pattern: Option<String>,
    pub min_length: Option<usize>,
    pub max_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NumberSchema {
    pub minimum: Option<f64>,
    pub maximum: Option<f64>,
    pub exclusive_minimum: bool,
    pub exclusive_maximum: bool,
    pub enumeration: Option<Vec<Value>>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueSchema {
    String(StringSchema),
    Integer(NumberSchema),
    Number(NumberSchema),
    Boolean,
    Array {
        items: Box<ValueSchema>,
        min_items: Option<usize>,
        max_items: Option<usize>,
    },
    Object {
        /// Sorted by name.
        fields: Vec<(String, ValueSchema)>,
        required: Vec<String>,
        additional: bool,
    },
    Any,
    Nullable(Box<ValueSchema>),
}

impl ValueSchema {
    pub fn string() -> Self {
        ValueSchema::String(StringSchema::default())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            ValueSchema::String(_) => "string",
            ValueSchema::Integer(_) => "integer",
            ValueSchema::Number(_) => "number",
            ValueSchema::Boolean => "boolean",
            ValueSchema::Array { .. } => "array",
            ValueSchema::Object { .. } => "object",
            ValueSchema::Any => "any",
            ValueSchema::Nullable(inner) => inner.type_name(),
        }
    }

    pub fn field(&self, name: &str) -> Option<&ValueSchema> {
        match self {
            ValueSchema::Object { fields, .. } => fields.iter().find(|(n, _)| n == name).map(|(_, s)| s),
            ValueSchema::Nullable(inner) => inner.field(name),
            _ => None,
        }
    }

    /// Checks `value`, returning the first violation as `<path> <problem>`,
    /// e.g. `.id missing` or `.items[2] expected string`.
    pub fn check(&self, value: &Value) -> Result<(), String> {
        check_at(self, value, "")
    }
}

fn at(path: &str) -> &str {
    if path.is_empty() {
        "$"
    } else {
        path
    }
}

fn enum_ok(enumeration: &Option<Vec<Value>>, value: &Value) -> bool {
    match enumeration {
        None => true,
        Some(members) => members.iter().any(|m| m == value || numbers_equal(m, value)),
    }
}

fn numbers_equal(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

fn bounds_ok(s: &NumberSchema, x: f64) -> Result<(), &'static str> {
    if let Some(min) = s.minimum {
        if x < min || (s.exclusive_minimum && x == min) {
            return Err("below minimum");
        }
    }
    if let Some(max) = s.maximum {
        if x > max || (s.exclusive_maximum && x == max) {
            return Err("above maximum");
        }
    }
    Ok(())
}

fn check_at(schema: &ValueSchema, value: &Value, path: &str) -> Result<(), String> {
    let fail = |problem: &str| Err(format!("{} {}", at(path), problem));
    match schema {
        ValueSchema::Any => Ok(()),
        ValueSchema::Nullable(inner) => {
            if value.is_null() {
                Ok(())
            } else {
                check_at(inner, value, path)
            }
        }
        ValueSchema::Boolean => {
            if value.is_boolean() {
                Ok(())
            } else {
                fail("expected boolean")
            }
        }
        ValueSchema::String(s) => {
            let Some(text) = value.as_str() else {
                return fail("expected string");
            };
            if !enum_ok(&s.enumeration, value) {
                return fail("not in enum");
            }
            let len = text.chars().count();
            if s.min_length.is_some_and(|m| len < m) {
                return fail("shorter than minLength");
            }
            if s.max_length.is_some_and(|m| len > m) {
                return fail("longer than maxLength");
            }
            if let Some(p) = &s.pattern {
                if let Ok(re) = regex::Regex::new(p) {
                    if !re.is_match(text) {
                        return fail("does not match pattern");
                    }
                }
            }
            Ok(())
        }
        ValueSchema::Integer(s) | ValueSchema::Number(s) => {
            let Some(x) = value.as_f64() else {
                return fail(if matches!(schema, ValueSchema::Integer(_)) {
                    "expected integer"
                } else {
                    "expected number"
                });
            };
            if matches!(schema, ValueSchema::Integer(_)) && !(value.is_i64() || value.is_u64() || x.fract() == 0.0) {
                return fail("expected integer");
            }
            if !enum_ok(&s.enumeration, value) {
                return fail("not in enum");
            }
            bounds_ok(s, x).or_else(|p| fail(p))
        }
        ValueSchema::Array {
            items,
            min_items,
            max_items,
        } => {
            let Some(elements) = value.as_array() else {
                return fail("expected array");
            };
            if min_items.is_some_and(|m| elements.len() < m) {
                return fail("fewer than minItems");
            }
            if max_items.is_some_and(|m| elements.len() > m) {
                return fail("more than maxItems");
            }
            for (i, element) in elements.iter().enumerate() {
                check_at(items, element, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        ValueSchema::Object {
            fields,
            required,
            additional,
        } => {
            let Some(map) = value.as_object() else {
                return fail("expected object");
            };
            for name in required {
                if !map.contains_key(name) {
                    return Err(format!("{path}.{name} missing"));
                }
            }
            for (name, field_value) in map {
                match fields.iter().find(|(n, _)| n == name) {
                    Some((_, s)) => check_at(s, field_value, &format!("{path}.{name}"))?,
                    None if !additional => return Err(format!("{path}.{name} not allowed")),
                    None => {}
                }
            }
            Ok(())
        }
    }
}
