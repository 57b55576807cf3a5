use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};

use super::{
    path_placeholders, ApiOperation, ApiSchema, DeclaredResponse, IssueSeverity, NumberSchema, ParamLocation,
    Parameter, RequestBody, SchemaIssue, SpecVersion, StatusPattern, StringSchema, ValueSchema,
};
use crate::doc::{parse_any, DocError};
use crate::pointer::{escape_token, JsonPointer};

const VERBS: [&str; 8] = ["get", "put", "post", "delete", "options", "head", "patch", "trace"];
const MAX_REF_HOPS: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum FatalSchemaError {
    #[error("document does not parse: {0}")]
    Parse(#[from] DocError),
    #[error("document has no paths object")]
    NoPaths,
}

/// Reads an OpenAPI v2 or v3 document (JSON or YAML), salvaging whatever it can.
pub fn load_schema(text: &str) -> Result<ApiSchema, FatalSchemaError> {
    let doc = parse_any(text)?;
    let Some(paths) = doc.get("paths").and_then(Value::as_object) else {
        return Err(FatalSchemaError::NoPaths);
    };
    let mut loader = Loader {
        root: &doc,
        issues: Vec::new(),
        reported: BTreeSet::new(),
    };
    let spec_version = loader.detect_version();
    let raw_base = loader.raw_base(spec_version);

    let global_security = doc.get("security");
    let global_consumes = string_list(doc.get("consumes"));
    let global_produces = string_list(doc.get("produces"));

    let mut operations = Vec::new();
    let mut identities: BTreeMap<String, usize> = BTreeMap::new();
    for (raw_path, item) in paths {
        let item_loc = format!("/paths/{}", escape_token(raw_path));
        let path = if raw_path.starts_with('/') {
            raw_path.clone()
        } else {
            loader.issue(IssueSeverity::Warning, &item_loc, "path does not start with '/'; prefixed");
            format!("/{raw_path}")
        };
        let Some(item) = loader.deref(item, &item_loc) else { continue };
        let Some(item) = item.as_object() else {
            loader.issue(IssueSeverity::Degraded, &item_loc, "path item is not an object; skipped");
            continue;
        };
        let shared_params = item.get("parameters");
        for verb in VERBS {
            let Some(op) = item.get(verb) else { continue };
            let op_loc = format!("{item_loc}/{verb}");
            let Some(op) = op.as_object() else {
                loader.issue(IssueSeverity::Degraded, &op_loc, "operation is not an object; skipped");
                continue;
            };
            let ctx = OpContext {
                version: spec_version,
                consumes: string_list(op.get("consumes")).or_else(|| global_consumes.clone()),
                produces: string_list(op.get("produces")).or_else(|| global_produces.clone()),
            };
            let mut operation = loader.operation(verb, &path, op, shared_params, &op_loc, &ctx);
            operation.security_required = security_required(op.get("security").or(global_security));
            let count = identities.entry(operation.identity.clone()).or_insert(0);
            *count += 1;
            if *count > 1 {
                let unique = format!("{}#{}", operation.identity, count);
                loader.issue(
                    IssueSeverity::Warning,
                    &op_loc,
                    &format!("duplicate operation identity {}; renamed {unique}", operation.identity),
                );
                operation.identity = unique;
            }
            operations.push(operation);
        }
    }

    Ok(ApiSchema {
        spec_version,
        operations,
        issues: loader.issues,
        raw_base,
    })
}

struct OpContext {
    version: SpecVersion,
    consumes: Option<Vec<String>>,
    produces: Option<Vec<String>>,
}

struct Loader<'a> {
    root: &'a Value,
    issues: Vec<SchemaIssue>,
    reported: BTreeSet<(String, String)>,
}

fn string_list(v: Option<&Value>) -> Option<Vec<String>> {
    let list: Vec<String> = v?.as_array()?.iter().filter_map(|s| s.as_str().map(str::to_string)).collect();
    if list.is_empty() {
        None
    } else {
        Some(list)
    }
}

fn security_required(v: Option<&Value>) -> bool {
    match v.and_then(Value::as_array) {
        // An empty requirement object means anonymous access is allowed.
        Some(reqs) => !reqs.is_empty() && reqs.iter().all(|r| r.as_object().is_some_and(|o| !o.is_empty())),
        None => false,
    }
}

fn is_json_media(m: &str) -> bool {
    let m = m.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
    m == "application/json" || m.ends_with("+json") || m == "*/*"
}

impl<'a> Loader<'a> {
    fn issue(&mut self, severity: IssueSeverity, location: &str, message: &str) {
        if self.reported.insert((location.to_string(), message.to_string())) {
            self.issues.push(SchemaIssue {
                severity,
                location: location.to_string(),
                message: message.to_string(),
            });
        }
    }

    fn detect_version(&mut self) -> SpecVersion {
        let v3 = self.root.get("openapi").and_then(Value::as_str);
        let v2 = self.root.get("swagger").and_then(Value::as_str);
        match (v3, v2) {
            (Some(_), Some(_)) => {
                self.issue(IssueSeverity::Warning, "", "both openapi and swagger markers present; treated as v3");
                SpecVersion::V3
            }
            (Some(v), None) => {
                if !v.starts_with('3') {
                    self.issue(IssueSeverity::Warning, "/openapi", &format!("unsupported openapi version {v}"));
                }
                SpecVersion::V3
            }
            (None, Some(_)) => SpecVersion::V2,
            (None, None) => {
                let guess = if self.root.get("basePath").is_some() || self.root.get("definitions").is_some() {
                    SpecVersion::V2
                } else {
                    SpecVersion::V3
                };
                self.issue(IssueSeverity::Warning, "", "no openapi/swagger version marker");
                guess
            }
        }
    }

    fn raw_base(&mut self, version: SpecVersion) -> Option<String> {
        match version {
            SpecVersion::V2 => self.root.get("basePath").and_then(Value::as_str).map(str::to_string),
            SpecVersion::V3 => {
                let servers = self.root.get("servers")?.as_array()?;
                if servers.len() > 1 {
                    self.issue(
                        IssueSeverity::Warning,
                        "/servers",
                        &format!("{} servers declared; using the first", servers.len()),
                    );
                }
                let first = servers.first()?;
                let mut url = first.get("url")?.as_str()?.to_string();
                if let Some(vars) = first.get("variables").and_then(Value::as_object) {
                    for (name, var) in vars {
                        if let Some(default) = var.get("default").and_then(Value::as_str) {
                            url = url.replace(&format!("{{{name}}}"), default);
                        }
                    }
                }
                Some(url)
            }
        }
    }

    /// Follows `$ref` chains inside the document.
    fn deref(&mut self, value: &'a Value, location: &str) -> Option<&'a Value> {
        let mut current = value;
        let mut seen = Vec::new();
        for _ in 0..MAX_REF_HOPS {
            let Some(reference) = current.get("$ref").and_then(Value::as_str) else {
                return Some(current);
            };
            if seen.iter().any(|s| s == reference) {
                self.issue(IssueSeverity::Degraded, location, &format!("cyclic $ref {reference}"));
                return None;
            }
            seen.push(reference.to_string());
            match self.lookup(reference) {
                Ok(target) => current = target,
                Err(msg) => {
                    self.issue(IssueSeverity::Degraded, location, &msg);
                    return None;
                }
            }
        }
        self.issue(IssueSeverity::Degraded, location, "$ref chain too long");
        None
    }

    fn lookup(&self, reference: &str) -> Result<&'a Value, String> {
        let Some(fragment) = reference.strip_prefix('#') else {
            return Err(format!("external $ref {reference} not supported"));
        };
        let decoded = percent_encoding::percent_decode_str(fragment).decode_utf8_lossy();
        let pointer = JsonPointer::parse(&decoded).map_err(|_| format!("malformed $ref {reference}"))?;
        pointer
            .resolve(self.root)
            .ok_or_else(|| format!("dangling $ref {reference}"))
    }

    fn operation(
        &mut self,
        verb: &str,
        path: &str,
        op: &'a Map<String, Value>,
        shared: Option<&'a Value>,
        loc: &str,
        ctx: &OpContext,
    ) -> ApiOperation {
        let mut params: Vec<Parameter> = Vec::new();
        let mut form_fields: Vec<(String, ValueSchema, bool)> = Vec::new();
        let mut body: Option<RequestBody> = None;

        let shared_list = shared.and_then(Value::as_array).map(|a| a.as_slice()).unwrap_or(&[]);
        let own_list = op.get("parameters").and_then(Value::as_array).map(|a| a.as_slice()).unwrap_or(&[]);
        let shared_loc = format!("{}/parameters", loc.rsplit_once('/').map_or("", |(p, _)| p));
        let sources = shared_list
            .iter()
            .enumerate()
            .map(|(i, p)| (p, format!("{shared_loc}/{i}")))
            .chain(own_list.iter().enumerate().map(|(i, p)| (p, format!("{loc}/parameters/{i}"))));

        for (raw, ploc) in sources {
            let Some(p) = self.deref(raw, &ploc) else { continue };
            let (Some(name), Some(location)) = (
                p.get("name").and_then(Value::as_str),
                p.get("in").and_then(Value::as_str),
            ) else {
                self.issue(IssueSeverity::Degraded, &ploc, "parameter lacks name or in; skipped");
                continue;
            };
            let required = p.get("required").and_then(Value::as_bool).unwrap_or(false);
            let schema_of = |this: &mut Self| -> ValueSchema {
                match p.get("schema") {
                    Some(s) => this.value_schema(s, &format!("{ploc}/schema"), &mut Vec::new()),
                    // v2 non-body parameters carry the schema keywords inline.
                    None => this.value_schema(p, &ploc, &mut Vec::new()),
                }
            };
            let location = match location {
                "path" => ParamLocation::Path,
                "query" => ParamLocation::Query,
                "header" => ParamLocation::Header,
                "cookie" => {
                    self.issue(IssueSeverity::Warning, &ploc, "cookie parameters are not fuzzed");
                    continue;
                }
                "body" => {
                    let schema = schema_of(self);
                    let media = pick_media(ctx.consumes.as_deref(), "application/json");
                    body = Some(RequestBody {
                        media_type: media,
                        schema,
                        required,
                    });
                    continue;
                }
                "formData" => {
                    let schema = schema_of(self);
                    form_fields.retain(|(n, _, _)| n != name);
                    form_fields.push((name.to_string(), schema, required));
                    continue;
                }
                other => {
                    self.issue(IssueSeverity::Degraded, &ploc, &format!("unknown parameter location {other}"));
                    continue;
                }
            };
            let schema = schema_of(self);
            params.retain(|q| !(q.name == name && q.location == location));
            params.push(Parameter {
                name: name.to_string(),
                location,
                schema,
                required: required || location == ParamLocation::Path,
            });
        }

        if !form_fields.is_empty() && body.is_none() {
            let media = ctx
                .consumes
                .as_deref()
                .and_then(|c| c.iter().find(|m| m.contains("form")).cloned())
                .unwrap_or_else(|| "application/x-www-form-urlencoded".to_string());
            let required = form_fields.iter().filter(|f| f.2).map(|f| f.0.clone()).collect::<Vec<_>>();
            let any_required = !required.is_empty();
            let mut fields: Vec<(String, ValueSchema)> = form_fields.into_iter().map(|(n, s, _)| (n, s)).collect();
            fields.sort_by(|a, b| a.0.cmp(&b.0));
            body = Some(RequestBody {
                media_type: media,
                schema: ValueSchema::Object {
                    fields,
                    required,
                    additional: true,
                },
                required: any_required,
            });
        }

        if ctx.version == SpecVersion::V3 {
            if let Some(rb) = op.get("requestBody") {
                let rloc = format!("{loc}/requestBody");
                if let Some(rb) = self.deref(rb, &rloc) {
                    body = self.v3_request_body(rb, &rloc).or(body);
                }
            }
        }

        for name in path_placeholders(path) {
            let declared = params.iter().any(|p| p.location == ParamLocation::Path && p.name == name);
            if !declared {
                self.issue(
                    IssueSeverity::Warning,
                    loc,
                    &format!("path placeholder {{{name}}} has no parameter; using a string"),
                );
                params.push(Parameter {
                    name,
                    location: ParamLocation::Path,
                    schema: ValueSchema::string(),
                    required: true,
                });
            }
        }

        let declared_responses = self.responses(op.get("responses"), &format!("{loc}/responses"), ctx);
        let verb = verb.to_ascii_uppercase();
        ApiOperation {
            identity: format!("{verb}:{path}"),
            verb,
            path_template: path.to_string(),
            parameters: params,
            body,
            declared_responses,
            security_required: false,
        }
    }

    fn v3_request_body(&mut self, rb: &'a Value, loc: &str) -> Option<RequestBody> {
        let required = rb.get("required").and_then(Value::as_bool).unwrap_or(false);
        let content = rb.get("content").and_then(Value::as_object)?;
        let (media, entry) = content
            .iter()
            .find(|(m, _)| is_json_media(m))
            .or_else(|| content.iter().next())?;
        let schema = match entry.get("schema") {
            Some(s) => self.value_schema(s, &format!("{loc}/content/{}/schema", escape_token(media)), &mut Vec::new()),
            None => ValueSchema::Any,
        };
        Some(RequestBody {
            media_type: media.clone(),
            schema,
            required,
        })
    }

    fn responses(&mut self, v: Option<&'a Value>, loc: &str, ctx: &OpContext) -> Vec<(StatusPattern, DeclaredResponse)> {
        let Some(map) = v.and_then(Value::as_object) else {
            self.issue(IssueSeverity::Warning, loc, "no responses declared");
            return Vec::new();
        };
        let mut out = Vec::new();
        for (key, raw) in map {
            let rloc = format!("{loc}/{}", escape_token(key));
            let Some(pattern) = StatusPattern::parse(key) else {
                if !key.starts_with("x-") {
                    self.issue(IssueSeverity::Warning, &rloc, &format!("unrecognized status key {key}"));
                }
                continue;
            };
            let declared = match self.deref(raw, &rloc) {
                None => DeclaredResponse {
                    schema: Some(ValueSchema::Any),
                    media_types: Vec::new(),
                },
                Some(r) => self.declared_response(r, &rloc, ctx),
            };
            out.push((pattern, declared));
        }
        out.sort_by_key(|(p, _)| *p);
        out
    }

    fn declared_response(&mut self, r: &'a Value, loc: &str, ctx: &OpContext) -> DeclaredResponse {
        match ctx.version {
            SpecVersion::V3 => {
                let Some(content) = r.get("content").and_then(Value::as_object) else {
                    return DeclaredResponse::default();
                };
                let media_types: Vec<String> = content.keys().cloned().collect();
                let schema = content.iter().find(|(m, _)| is_json_media(m)).map(|(m, entry)| match entry.get("schema") {
                    Some(s) => self.value_schema(s, &format!("{loc}/content/{}/schema", escape_token(m)), &mut Vec::new()),
                    None => ValueSchema::Any,
                });
                DeclaredResponse { schema, media_types }
            }
            SpecVersion::V2 => match r.get("schema") {
                None => DeclaredResponse::default(),
                Some(s) => {
                    let schema = self.value_schema(s, &format!("{loc}/schema"), &mut Vec::new());
                    let media_types = ctx.produces.clone().unwrap_or_else(|| vec!["application/json".to_string()]);
                    let json = media_types.iter().any(|m| is_json_media(m));
                    DeclaredResponse {
                        schema: json.then_some(schema),
                        media_types,
                    }
                }
            },
        }
    }

    /// Normalizes a JSON Schema fragment. `stack` holds the refs being expanded.
    fn value_schema(&mut self, v: &'a Value, loc: &str, stack: &mut Vec<String>) -> ValueSchema {
        if let Some(reference) = v.get("$ref").and_then(Value::as_str) {
            if stack.iter().any(|r| r == reference) {
                self.issue(IssueSeverity::Degraded, loc, &format!("cyclic $ref {reference}; treated as any"));
                return ValueSchema::Any;
            }
            return match self.lookup(reference) {
                Ok(target) => {
                    stack.push(reference.to_string());
                    let s = self.value_schema(target, loc, stack);
                    stack.pop();
                    s
                }
                Err(msg) => {
                    self.issue(IssueSeverity::Degraded, loc, &format!("{msg}; treated as any"));
                    ValueSchema::Any
                }
            };
        }
        let Some(obj) = v.as_object() else {
            return ValueSchema::Any;
        };

        if let Some(parts) = obj.get("allOf").and_then(Value::as_array) {
            let converted: Vec<ValueSchema> = parts
                .iter()
                .enumerate()
                .map(|(i, p)| self.value_schema(p, &format!("{loc}/allOf/{i}"), stack))
                .collect();
            let mut merged = merge_all_of(converted);
            if obj.contains_key("properties") {
                let own = self.plain_schema(obj, loc, stack);
                merged = merge_all_of(vec![merged, own]);
            }
            return merged;
        }
        if obj.contains_key("anyOf") || obj.contains_key("oneOf") {
            return ValueSchema::Any;
        }
        self.plain_schema(obj, loc, stack)
    }

    fn plain_schema(&mut self, obj: &'a Map<String, Value>, loc: &str, stack: &mut Vec<String>) -> ValueSchema {
        let mut nullable = obj.get("nullable").and_then(Value::as_bool).unwrap_or(false)
            || obj.get("x-nullable").and_then(Value::as_bool).unwrap_or(false);
        let enumeration = obj.get("enum").and_then(Value::as_array).cloned();
        let declared_type = match obj.get("type") {
            Some(Value::String(t)) => Some(t.clone()),
            Some(Value::Array(types)) => {
                let names: Vec<&str> = types.iter().filter_map(Value::as_str).collect();
                if names.contains(&"null") {
                    nullable = true;
                }
                names.into_iter().find(|t| *t != "null").map(str::to_string)
            }
            _ => None,
        };
        let ty = declared_type.or_else(|| {
            if obj.contains_key("properties") || obj.contains_key("additionalProperties") {
                Some("object".into())
            } else if obj.contains_key("items") {
                Some("array".into())
            } else {
                enumeration.as_ref().and_then(|e| e.first()).map(|first| {
                    match first {
                        Value::String(_) => "string",
                        Value::Bool(_) => "boolean",
                        Value::Number(n) if n.is_f64() => "number",
                        Value::Number(_) => "integer",
                        _ => "any",
                    }
                    .to_string()
                })
            }
        });
        let as_usize = |k: &str| obj.get(k).and_then(Value::as_u64).map(|n| n as usize);
        let format = obj.get("format").and_then(Value::as_str).map(str::to_string);
        let schema = match ty.as_deref() {
            Some("string") => ValueSchema::String(StringSchema {
                format,
                enumeration,
                pattern: obj.get("pattern").and_then(Value::as_str).map(str::to_string),
                min_length: as_usize("minLength"),
                max_length: as_usize("maxLength"),
            }),
            Some("file") => ValueSchema::String(StringSchema {
                format: Some("binary".into()),
                ..Default::default()
            }),
            Some(t @ ("integer" | "number")) => {
                let mut n = NumberSchema {
                    minimum: obj.get("minimum").and_then(Value::as_f64),
                    maximum: obj.get("maximum").and_then(Value::as_f64),
                    exclusive_minimum: false,
                    exclusive_maximum: false,
                    enumeration,
                    format,
                };
                match obj.get("exclusiveMinimum") {
                    Some(Value::Bool(b)) => n.exclusive_minimum = *b,
                    Some(Value::Number(x)) => {
                        n.minimum = x.as_f64();
                        n.exclusive_minimum = true;
                    }
                    _ => {}
                }
                match obj.get("exclusiveMaximum") {
                    Some(Value::Bool(b)) => n.exclusive_maximum = *b,
                    Some(Value::Number(x)) => {
                        n.maximum = x.as_f64();
                        n.exclusive_maximum = true;
                    }
                    _ => {}
                }
                if t == "integer" {
                    ValueSchema::Integer(n)
                } else {
                    ValueSchema::Number(n)
                }
            }
            Some("boolean") => ValueSchema::Boolean,
            Some("array") => {
                let items = match obj.get("items") {
                    Some(i) => self.value_schema(i, &format!("{loc}/items"), stack),
                    None => ValueSchema::Any,
                };
                ValueSchema::Array {
                    items: Box::new(items),
                    min_items: as_usize("minItems"),
                    max_items: as_usize("maxItems"),
                }
            }
            Some("object") => {
                let mut fields = Vec::new();
                if let Some(props) = obj.get("properties").and_then(Value::as_object) {
                    for (name, p) in props {
                        let ploc = format!("{loc}/properties/{}", escape_token(name));
                        fields.push((name.clone(), self.value_schema(p, &ploc, stack)));
                    }
                }
                fields.sort_by(|a, b| a.0.cmp(&b.0));
                let required = obj
                    .get("required")
                    .and_then(Value::as_array)
                    .map(|r| r.iter().filter_map(|s| s.as_str().map(str::to_string)).collect())
                    .unwrap_or_default();
                let additional = !matches!(obj.get("additionalProperties"), Some(Value::Bool(false)));
                ValueSchema::Object {
                    fields,
                    required,
                    additional,
                }
            }
            Some("any") | None => ValueSchema::Any,
            Some(other) => {
                self.issue(IssueSeverity::Degraded, loc, &format!("unknown type {other}; treated as any"));
                ValueSchema::Any
            }
        };
        if nullable && schema != ValueSchema::Any {
            ValueSchema::Nullable(Box::new(schema))
        } else {
            schema
        }
    }
}

fn pick_media(candidates: Option<&[String]>, fallback: &str) -> String {
    candidates
        .and_then(|c| c.iter().find(|m| is_json_media(m)).or_else(|| c.first()))
        .cloned()
        .unwrap_or_else(|| fallback.to_string())
}

fn merge_all_of(parts: Vec<ValueSchema>) -> ValueSchema {
    let concrete: Vec<ValueSchema> = parts.into_iter().filter(|p| *p != ValueSchema::Any).collect();
    if concrete.is_empty() {
        return ValueSchema::Any;
    }
    if concrete.iter().all(|p| matches!(p, ValueSchema::Object { .. })) {
        let mut fields: Vec<(String, ValueSchema)> = Vec::new();
        let mut required: Vec<String> = Vec::new();
        for p in concrete {
            if let ValueSchema::Object {
                fields: f,
                required: r,
                ..
            } = p
            {
                for (name, s) in f {
                    fields.retain(|(n, _)| *n != name);
                    fields.push((name, s));
                }
                for name in r {
                    if !required.contains(&name) {
                        required.push(name);
                    }
                }
            }
        }
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        // Left open: a closed part would otherwise reject its siblings' fields.
        return ValueSchema::Object {
            fields,
            required,
            additional: true,
        };
    }
    if concrete.len() == 1 {
        return concrete.into_iter().next().unwrap();
    }
    ValueSchema::Any
}

#[cfg(test)]
mod tests {
    use super::*;

    const PETSTORE_V3: &str = r#"
openapi: 3.0.2
servers:
  - url: /api/v3
paths:
  /pet:
    put:
      tags: [pet]
      summary: Update an existing pet
      operationId: updatePet
      requestBody:
        description: Update an existent pet in the store
        content:
          application/json:
            schema:
              $ref: '#/components/schemas/Pet'
          application/xml:
            schema:
              $ref: '#/components/schemas/Pet'
        required: true
      responses:
        "200":
          description: Successful operation
          content:
            application/json:
              schema:
                $ref: '#/components/schemas/Pet'
        "400":
          description: Invalid ID supplied
        "404":
          description: Pet not found
      security:
        - petstore_auth:
            - write:pets
            - read:pets
components:
  schemas:
    Pet:
      required: [name, photoUrls]
      type: object
      properties:
        id: {type: integer, format: int64}
        name: {type: string}
        photoUrls: {type: array, items: {type: string}}
        status: {type: string, enum: [available, pending, sold]}
"#;

    #[test]
    fn petstore_put_pet() {
        let s = load_schema(PETSTORE_V3).unwrap();
        assert_eq!(s.spec_version, SpecVersion::V3);
        assert_eq!(s.operations.len(), 1);
        let op = &s.operations[0];
        assert_eq!(op.identity, "PUT:/pet");
        assert!(op.security_required);
        let body = op.body.as_ref().unwrap();
        assert!(body.required);
        assert_eq!(body.media_type, "application/json");
        assert!(matches!(&body.schema, ValueSchema::Object { required, .. } if required.len() == 2));
        assert!(s.issues.is_empty(), "{:?}", s.issues);
        assert_eq!(s.raw_base.as_deref(), Some("/api/v3"));
        assert!(op.response_for(200).unwrap().schema.is_some());
        assert!(op.response_for(500).is_none());
    }

    #[test]
    fn v2_dangling_ref_is_salvaged() {
        let text = r##"{"swagger": "2.0", "basePath": "/v2", "paths": {"/check": {"get": {
            "parameters": [{"name": "lang", "in": "query", "type": "string", "required": true}],
            "responses": {"200": {"description": "ok", "schema": {"$ref": "#/definitions/Missing"}}}}}}}"##;
        let s = load_schema(text).unwrap();
        assert_eq!(s.spec_version, SpecVersion::V2);
        assert_eq!(s.operations.len(), 1);
        assert_eq!(s.issues.len(), 1);
        assert_eq!(s.issues[0].severity, IssueSeverity::Degraded);
        assert_eq!(s.operations[0].response_for(200).unwrap().schema, Some(ValueSchema::Any));
        assert_eq!(s.operations[0].parameters[0].name, "lang");
    }

    #[test]
    fn empty_paths() {
        let s = load_schema(r#"{"openapi": "3.0.0", "paths": {}}"#).unwrap();
        assert!(s.operations.is_empty() && s.issues.is_empty());
    }

    #[test]
    fn missing_paths_is_fatal() {
        assert!(matches!(load_schema(r#"{"openapi": "3.0.0"}"#), Err(FatalSchemaError::NoPaths)));
        assert!(matches!(load_schema("{: nope"), Err(FatalSchemaError::Parse(_))));
    }

    #[test]
    fn both_markers_prefer_v3() {
        let s = load_schema(r#"{"openapi": "3.0.0", "swagger": "2.0", "paths": {}}"#).unwrap();
        assert_eq!(s.spec_version, SpecVersion::V3);
        assert_eq!(s.issues.len(), 1);
    }

    #[test]
    fn synthesizes_missing_path_parameter() {
        let s = load_schema(r#"{"openapi": "3.0.0", "paths": {"/a/{id}": {"get": {"responses": {"200": {"description": "x"}}}}}}"#)
            .unwrap();
        let op = &s.operations[0];
        assert_eq!(op.parameters.len(), 1);
        assert_eq!(op.parameters[0].location, ParamLocation::Path);
        assert!(op.parameters[0].required);
        assert_eq!(s.issues.len(), 1);
    }

    #[test]
    fn cyclic_schema_degrades() {
        let text = r##"{"openapi": "3.0.0", "paths": {"/n": {"get": {"responses": {"200": {"description": "x",
            "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Node"}}}}}}}},
            "components": {"schemas": {"Node": {"type": "object", "properties": {"next": {"$ref": "#/components/schemas/Node"}}}}}}"##;
        let s = load_schema(text).unwrap();
        let schema = s.operations[0].response_for(200).unwrap().schema.clone().unwrap();
        assert_eq!(schema.field("next"), Some(&ValueSchema::Any));
        assert_eq!(s.issues.len(), 1);
    }

    #[test]
    fn multiple_servers_and_variables() {
        let text = r#"{"openapi": "3.0.0", "servers": [{"url": "http://x:{port}/{base}", "variables": {"port": {"default": "80"}, "base": {"default": "rest"}}}, {"url": "/other"}], "paths": {}}"#;
        let s = load_schema(text).unwrap();
        assert_eq!(s.raw_base.as_deref(), Some("http://x:80/rest"));
        assert_eq!(s.path_prefix(), "/rest");
        assert_eq!(s.issues.len(), 1);
    }

    #[test]
    fn v2_form_and_body_parameters() {
        let text = r#"{"swagger": "2.0", "paths": {"/login": {"post": {"consumes": ["application/x-www-form-urlencoded"],
            "parameters": [{"name": "username", "in": "formData", "type": "string", "required": true},
                           {"name": "password", "in": "formData", "type": "string"}],
            "responses": {"200": {"description": "ok"}}}},
            "/items": {"post": {"parameters": [{"name": "b", "in": "body", "required": true, "schema": {"type": "object"}}],
            "responses": {"201": {"description": "ok"}}}}}}"#;
        let s = load_schema(text).unwrap();
        let login = s.operation("POST:/login").unwrap();
        let body = login.body.as_ref().unwrap();
        assert_eq!(body.media_type, "application/x-www-form-urlencoded");
        assert!(matches!(&body.schema, ValueSchema::Object { fields, required, .. } if fields.len() == 2 && required == &["username"]));
        let items = s.operation("POST:/items").unwrap();
        assert_eq!(items.body.as_ref().unwrap().media_type, "application/json");
    }

    #[test]
    fn security_inheritance_and_override() {
        let text = r#"{"openapi": "3.0.0", "security": [{"bearer": []}], "paths": {
            "/a": {"get": {"responses": {}}},
            "/b": {"get": {"security": [], "responses": {}}},
            "/c": {"get": {"security": [{}], "responses": {}}}}}"#;
        let s = load_schema(text).unwrap();
        assert!(s.operation("GET:/a").unwrap().security_required);
        assert!(!s.operation("GET:/b").unwrap().security_required);
        assert!(!s.operation("GET:/c").unwrap().security_required);
    }

    #[test]
    fn identity_collision_gets_suffix() {
        let text = r#"{"openapi": "3.0.0", "paths": {"/a": {"get": {"responses": {}}}, "a": {"get": {"responses": {}}}}}"#;
        let s = load_schema(text).unwrap();
        let ids: Vec<&str> = s.operations.iter().map(|o| o.identity.as_str()).collect();
        assert!(ids.contains(&"GET:/a") && ids.contains(&"GET:/a#2"), "{ids:?}");
    }

    #[test]
    fn yaml_and_json_agree() {
        let json: Value = serde_yaml::from_str(PETSTORE_V3).unwrap();
        let a = load_schema(PETSTORE_V3).unwrap();
        let b = load_schema(&json.to_string()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_of_merges_objects() {
        let text = r##"{"openapi": "3.0.0", "paths": {"/x": {"get": {"responses": {"200": {"description": "",
            "content": {"application/json": {"schema": {"allOf": [
                {"type": "object", "properties": {"a": {"type": "string"}}, "required": ["a"]},
                {"type": "object", "properties": {"b": {"type": "integer"}}}]}}}}}}}}}"##;
        let s = load_schema(text).unwrap();
        let schema = s.operations[0].response_for(200).unwrap().schema.clone().unwrap();
        assert!(schema.field("a").is_some() && schema.field("b").is_some());
        assert_eq!(schema.check(&serde_json::json!({"b": 1})).unwrap_err(), ".a missing");
    }
}
