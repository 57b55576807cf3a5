//! Value generation from value-schemas, conforming or deliberately violating
//! exactly one constraint.

use rand::Rng;
use regex_syntax::hir::{Class, Hir, HirKind};
use serde_json::{json, Map, Value};

use crate::openapi::{NumberSchema, StringSchema, ValueSchema};

/// Cap on extra repetitions for unbounded regex quantifiers.
const MAX_EXTRA_REPEAT: u32 = 3;
const DEFAULT_SPAN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    Enum,
    Minimum,
    Maximum,
    Type,
    Pattern,
    MinLength,
    MaxLength,
    Format,
    RequiredMissing,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Enum => "enum",
            ViolationKind::Minimum => "minimum",
            ViolationKind::Maximum => "maximum",
            ViolationKind::Type => "type",
            ViolationKind::Pattern => "pattern",
            ViolationKind::MinLength => "minLength",
            ViolationKind::MaxLength => "maxLength",
            ViolationKind::Format => "format",
            ViolationKind::RequiredMissing => "required-missing",
        }
    }
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const CHECKABLE_FORMATS: [&str; 6] = ["date-time", "date", "uuid", "email", "uri", "ipv4"];

fn unwrap_nullable(schema: &ValueSchema) -> &ValueSchema {
    match schema {
        ValueSchema::Nullable(inner) => unwrap_nullable(inner),
        other => other,
    }
}

/// Constraints of a scalar schema that a generated value can break.
/// `on_wire` is true for path/query/header values, where every value travels
/// as text and a string can never have the wrong type.
pub fn violable_kinds(schema: &ValueSchema, on_wire: bool) -> Vec<ViolationKind> {
    let mut kinds = Vec::new();
    match unwrap_nullable(schema) {
        ValueSchema::String(s) => {
            if s.enumeration.as_ref().is_some_and(|e| !e.is_empty()) {
                kinds.push(ViolationKind::Enum);
            }
            if s.pattern.as_deref().is_some_and(|p| pattern_violation(p).is_some()) {
                kinds.push(ViolationKind::Pattern);
            }
            if s.min_length.is_some_and(|m| m > 0) {
                kinds.push(ViolationKind::MinLength);
            }
            if s.max_length.is_some() {
                kinds.push(ViolationKind::MaxLength);
            }
            if s.format.as_deref().is_some_and(|f| CHECKABLE_FORMATS.contains(&f)) {
                kinds.push(ViolationKind::Format);
            }
            if !on_wire {
                kinds.push(ViolationKind::Type);
            }
        }
        ValueSchema::Integer(n) | ValueSchema::Number(n) => {
            if n.enumeration.as_ref().is_some_and(|e| !e.is_empty()) {
                kinds.push(ViolationKind::Enum);
            }
            if n.minimum.is_some() {
                kinds.push(ViolationKind::Minimum);
            }
            if n.maximum.is_some() {
                kinds.push(ViolationKind::Maximum);
            }
            kinds.push(ViolationKind::Type);
        }
        ValueSchema::Boolean => kinds.push(ViolationKind::Type),
        ValueSchema::Array { .. } | ValueSchema::Object { .. } if !on_wire => kinds.push(ViolationKind::Type),
        _ => {}
    }
    kinds
}

pub fn generate_valid<R: Rng + ?Sized>(schema: &ValueSchema, rng: &mut R) -> Value {
    match schema {
        ValueSchema::Nullable(inner) => generate_valid(inner, rng),
        ValueSchema::Any => Value::String(random_word(rng, 1, 8)),
        ValueSchema::Boolean => Value::Bool(rng.random_bool(0.5)),
        ValueSchema::String(s) => Value::String(valid_string(s, rng)),
        ValueSchema::Integer(n) => valid_integer(n, rng),
        ValueSchema::Number(n) => valid_number(n, rng),
        ValueSchema::Array {
            items,
            min_items,
            max_items,
        } => {
            let lo = min_items.unwrap_or(0);
            let hi = max_items.unwrap_or(lo + 3).max(lo).min(lo + 3);
            let len = rng.random_range(lo..=hi);
            Value::Array((0..len).map(|_| generate_valid(items, rng)).collect())
        }
        ValueSchema::Object { fields, required, .. } => {
            let mut map = Map::new();
            for (name, field) in fields {
                if required.contains(name) || rng.random_bool(0.5) {
                    map.insert(name.clone(), generate_valid(field, rng));
                }
            }
            for name in required {
                if !map.contains_key(name) {
                    map.insert(name.clone(), Value::String(random_word(rng, 1, 8)));
                }
            }
            Value::Object(map)
        }
    }
}

/// A value breaking `kind` while keeping every other constraint where possible.
pub fn generate_invalid<R: Rng + ?Sized>(schema: &ValueSchema, kind: ViolationKind, rng: &mut R) -> Value {
    let schema = unwrap_nullable(schema);
    match (schema, kind) {
        (ValueSchema::String(s), ViolationKind::Enum) => {
            let members = s.enumeration.as_deref().unwrap_or(&[]);
            loop {
                let candidate = Value::String(format!("{}_{}", random_word(rng, 3, 8), rng.random_range(0..1000)));
                if !members.contains(&candidate) {
                    return candidate;
                }
            }
        }
        (ValueSchema::String(s), ViolationKind::Pattern) => {
            Value::String(s.pattern.as_deref().and_then(pattern_violation).unwrap_or_else(|| "\u{1}".into()))
        }
        (ValueSchema::String(s), ViolationKind::MinLength) => {
            let n = s.min_length.unwrap_or(1).saturating_sub(1);
            Value::String(random_word(rng, n, n))
        }
        (ValueSchema::String(s), ViolationKind::MaxLength) => {
            let n = s.max_length.unwrap_or(0) + 1;
            Value::String(random_word(rng, n, n + 3))
        }
        (ValueSchema::String(s), ViolationKind::Format) => {
            Value::String(format!("not-a-{}", s.format.as_deref().unwrap_or("value")))
        }
        (ValueSchema::String(_), ViolationKind::Type) => json!(rng.random_range(0..1000)),
        (ValueSchema::Integer(n) | ValueSchema::Number(n), ViolationKind::Enum) => {
            let members = n.enumeration.as_deref().unwrap_or(&[]);
            let max = members.iter().filter_map(Value::as_f64).fold(0.0f64, f64::max);
            json!(max.floor() as i64 + 1 + rng.random_range(0..10))
        }
        (ValueSchema::Integer(n), ViolationKind::Minimum) => {
            let min = n.minimum.unwrap_or(0.0);
            let below = if n.exclusive_minimum { min.ceil() } else { min.ceil() - 1.0 };
            json!(below as i64 - rng.random_range(0..10))
        }
        (ValueSchema::Integer(n), ViolationKind::Maximum) => {
            let max = n.maximum.unwrap_or(0.0);
            let above = if n.exclusive_maximum { max.floor() } else { max.floor() + 1.0 };
            json!(above as i64 + rng.random_range(0..10))
        }
        (ValueSchema::Number(n), ViolationKind::Minimum) => json!(n.minimum.unwrap_or(0.0) - 1.0 - rng.random_range(0..10) as f64),
        (ValueSchema::Number(n), ViolationKind::Maximum) => json!(n.maximum.unwrap_or(0.0) + 1.0 + rng.random_range(0..10) as f64),
        (ValueSchema::Integer(_) | ValueSchema::Number(_) | ValueSchema::Boolean, ViolationKind::Type) => {
            Value::String(random_word(rng, 3, 8))
        }
        (ValueSchema::Array { .. } | ValueSchema::Object { .. }, ViolationKind::Type) => Value::String(random_word(rng, 3, 8)),
        _ => generate_valid(schema, rng),
    }
}

fn valid_string<R: Rng + ?Sized>(s: &StringSchema, rng: &mut R) -> String {
    if let Some(members) = s.enumeration.as_ref().filter(|e| !e.is_empty()) {
        let m = &members[rng.random_range(0..members.len())];
        return m.as_str().map(str::to_string).unwrap_or_else(|| m.to_string());
    }
    let min = s.min_length.unwrap_or(0);
    let max = s.max_length.unwrap_or(min.max(1) + 7).max(min);
    let fits = |v: &str| (min..=max).contains(&v.chars().count());
    if let Some(p) = &s.pattern {
        for _ in 0..8 {
            if let Some(v) = string_from_pattern(p, rng) {
                if fits(&v) {
                    return v;
                }
            }
        }
        log::debug!("could not satisfy pattern {p:?}; generating a plain string");
    }
    if let Some(v) = s.format.as_deref().and_then(|f| formatted(f, rng)) {
        if fits(&v) {
            return v;
        }
    }
    random_word(rng, min.max(1).min(max), max)
}

fn formatted<R: Rng + ?Sized>(format: &str, rng: &mut R) -> Option<String> {
    Some(match format {
        "date-time" => format!(
            "20{:02}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
            rng.random_range(0..30),
            rng.random_range(1..=12),
            rng.random_range(1..=28),
            rng.random_range(0..24),
            rng.random_range(0..60),
            rng.random_range(0..60)
        ),
        "date" => format!(
            "20{:02}-{:02}-{:02}",
            rng.random_range(0..30),
            rng.random_range(1..=12),
            rng.random_range(1..=28)
        ),
        "uuid" => {
            let b: [u8; 16] = rng.random();
            let h: String = b.iter().map(|x| format!("{x:02x}")).collect();
            format!("{}-{}-4{}-a{}-{}", &h[0..8], &h[8..12], &h[13..16], &h[17..20], &h[20..32])
        }
        "email" => format!("{}@example.com", random_word(rng, 3, 8)),
        "uri" | "url" => format!("http://example.com/{}", random_word(rng, 1, 8)),
        "ipv4" => format!(
            "{}.{}.{}.{}",
            rng.random_range(1..=254),
            rng.random_range(0..=255),
            rng.random_range(0..=255),
            rng.random_range(1..=254)
        ),
        "byte" => "aGVsbG8=".to_string(),
        _ => return None,
    })
}

fn bounds(n: &NumberSchema, integer: bool) -> (f64, f64) {
    let step = if integer { 1.0 } else { 0.01 };
    let mut lo = n.minimum.map(|m| if n.exclusive_minimum { m + step } else { m });
    let mut hi = n.maximum.map(|m| if n.exclusive_maximum { m - step } else { m });
    if integer {
        lo = lo.map(f64::ceil);
        hi = hi.map(f64::floor);
    }
    let (lo, hi) = match (lo, hi) {
        (Some(l), Some(h)) => (l, h),
        (Some(l), None) => (l, l + DEFAULT_SPAN),
        (None, Some(h)) => (h - DEFAULT_SPAN, h),
        (None, None) => (0.0, DEFAULT_SPAN),
    };
    if lo > hi {
        log::debug!("unsatisfiable numeric bounds [{lo}, {hi}]");
        (lo, lo)
    } else {
        (lo, hi)
    }
}

fn valid_integer<R: Rng + ?Sized>(n: &NumberSchema, rng: &mut R) -> Value {
    if let Some(members) = n.enumeration.as_ref().filter(|e| !e.is_empty()) {
        return members[rng.random_range(0..members.len())].clone();
    }
    let (lo, hi) = bounds(n, true);
    json!(rng.random_range(lo as i64..=hi as i64))
}

fn valid_number<R: Rng + ?Sized>(n: &NumberSchema, rng: &mut R) -> Value {
    if let Some(members) = n.enumeration.as_ref().filter(|e| !e.is_empty()) {
        return members[rng.random_range(0..members.len())].clone();
    }
    let (lo, hi) = bounds(n, false);
    let x = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let rounded = (x * 100.0).round() / 100.0;
    json!(rounded.clamp(lo, hi))
}

pub fn random_word<R: Rng + ?Sized>(rng: &mut R, min: usize, max: usize) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let len = rng.random_range(min..=max.max(min));
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char).collect()
}

/// A random string matching `pattern`, or None for unsupported constructs.
pub fn string_from_pattern<R: Rng + ?Sized>(pattern: &str, rng: &mut R) -> Option<String> {
    let hir = regex_syntax::Parser::new().parse(pattern).ok()?;
    let mut out = String::new();
    emit(&hir, rng, &mut out)?;
    let re = regex::Regex::new(pattern).ok()?;
    re.is_match(&out).then_some(out)
}

fn emit<R: Rng + ?Sized>(hir: &Hir, rng: &mut R, out: &mut String) -> Option<()> {
    match hir.kind() {
        HirKind::Empty | HirKind::Look(_) => Some(()),
        HirKind::Literal(lit) => {
            out.push_str(std::str::from_utf8(&lit.0).ok()?);
            Some(())
        }
        HirKind::Class(Class::Unicode(class)) => {
            let ranges = class.ranges();
            let printable: Vec<(u32, u32)> = ranges
                .iter()
                .filter_map(|r| {
                    let lo = (r.start() as u32).max(0x20);
                    let hi = (r.end() as u32).min(0x7e);
                    (lo <= hi).then_some((lo, hi))
                })
                .collect();
            let pool: Vec<(u32, u32)> = if printable.is_empty() {
                ranges.iter().map(|r| (r.start() as u32, r.end() as u32)).collect()
            } else {
                printable
            };
            let (lo, hi) = *pool.get(rng.random_range(0..pool.len().max(1)))?;
            out.push(char::from_u32(rng.random_range(lo..=hi))?);
            Some(())
        }
        HirKind::Class(Class::Bytes(class)) => {
            let r = class.ranges().iter().find(|r| r.start() < 0x80)?;
            out.push(rng.random_range(r.start()..=r.end().min(0x7f)) as char);
            Some(())
        }
        HirKind::Repetition(rep) => {
            let max = rep.max.unwrap_or(rep.min + MAX_EXTRA_REPEAT);
            let n = rng.random_range(rep.min..=max.max(rep.min));
            for _ in 0..n {
                emit(&rep.sub, rng, out)?;
            }
            Some(())
        }
        HirKind::Capture(cap) => emit(&cap.sub, rng, out),
        HirKind::Concat(parts) => parts.iter().try_for_each(|p| emit(p, rng, out)),
        HirKind::Alternation(alts) => emit(&alts[rng.random_range(0..alts.len())], rng, out),
    }
}

/// A fixed string that does not match `pattern`, if one of a few candidates works.
pub fn pattern_violation(pattern: &str) -> Option<String> {
    let re = regex::Regex::new(pattern).ok()?;
    ["", "!", "~~~", "@@@@", " ", "A", "0", "zz99--!!"]
        .into_iter()
        .find(|c| !re.is_match(c))
        .map(str::to_string)
}
