use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{Map, Value};

use super::model::*;

/// A model invariant broken by the document, located by JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pointer = if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        };
        write!(f, "{pointer}: {}", self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("document is not valid JSON: {0}")]
    MalformedJson(String),
    #[error("unsupported document version {found:?}, expected \"2.0\"")]
    UnsupportedVersion { found: Option<String> },
    #[error("invalid document ({} violation(s)): {}", .0.len(), join_violations(.0))]
    InvalidModel(Vec<Violation>),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

const KNOWN_FORMATS: &[(PrimitiveType, &str)] = &[
    (PrimitiveType::String, "uuid"),
    (PrimitiveType::String, "date-time"),
    (PrimitiveType::Integer, "int32"),
    (PrimitiveType::Integer, "int64"),
    (PrimitiveType::Number, "float"),
    (PrimitiveType::Number, "double"),
];

struct Ctx {
    violations: Vec<Violation>,
    warnings: Vec<String>,
}

impl Ctx {
    fn violation(&mut self, pointer: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            pointer: pointer.to_string(),
            message: message.into(),
        });
    }
}

fn child(pointer: &str, token: &str) -> String {
    format!("{pointer}/{}", escape_pointer(token))
}

/// Parses an OpenAPI 2.0 JSON document into a validated [`ApiDescription`].
///
/// Vendor extensions and fields outside the supported subset are ignored.
pub fn parse_document(text: &str) -> Result<ApiDescription, ParseError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| ParseError::MalformedJson(e.to_string()))?;
    let Some(root) = root.as_object() else {
        return Err(ParseError::InvalidModel(vec![Violation {
            pointer: String::new(),
            message: "document root must be a JSON object".into(),
        }]));
    };
    match root.get("swagger") {
        Some(Value::String(v)) if v == "2.0" => {}
        Some(Value::String(v)) => {
            return Err(ParseError::UnsupportedVersion {
                found: Some(v.clone()),
            })
        }
        Some(other) => {
            return Err(ParseError::UnsupportedVersion {
                found: Some(other.to_string()),
            })
        }
        None => return Err(ParseError::UnsupportedVersion { found: None }),
    }

    let mut ctx = Ctx {
        violations: Vec::new(),
        warnings: Vec::new(),
    };

    let host = root.get("host").and_then(Value::as_str).map(str::to_string);
    let base_path = root
        .get("basePath")
        .and_then(Value::as_str)
        .unwrap_or("/")
        .to_string();
    let scheme = root
        .get("schemes")
        .and_then(Value::as_array)
        .and_then(|s| s.first())
        .and_then(Value::as_str)
        .map(str::to_string);
    let global_consumes = media_types(root.get("consumes"));
    let global_produces = media_types(root.get("produces"));

    let mut definitions = BTreeMap::new();
    match root.get("definitions") {
        None => {}
        Some(Value::Object(defs)) => {
            for (name, schema) in defs {
                let ptr = child("/definitions", name);
                if let Some(s) = parse_schema(schema, &ptr, &mut ctx) {
                    definitions.insert(name.clone(), s);
                }
            }
        }
        Some(_) => ctx.violation("/definitions", "definitions must be an object"),
    }

    let mut paths = BTreeMap::new();
    match root.get("paths") {
        None => {}
        Some(Value::Object(items)) => {
            for (template, item) in items {
                if template.starts_with("x-") {
                    continue;
                }
                let ptr = child("/paths", template);
                if template.is_empty() || !template.starts_with('/') {
                    ctx.violation(&ptr, "path template must start with \"/\"");
                    continue;
                }
                let Some(item) = item.as_object() else {
                    ctx.violation(&ptr, "path item must be an object");
                    continue;
                };
                let ops = parse_path_item(
                    template,
                    item,
                    &ptr,
                    &global_consumes,
                    &global_produces,
                    &mut ctx,
                );
                paths.insert(template.clone(), ops);
            }
        }
        Some(_) => ctx.violation("/paths", "paths must be an object"),
    }

    let api = ApiDescription {
        scheme,
        host,
        base_path,
        paths,
        definitions,
        warnings: Vec::new(),
    };
    check_references(&api, &mut ctx);

    if ctx.violations.is_empty() {
        Ok(ApiDescription {
            warnings: ctx.warnings,
            ..api
        })
    } else {
        Err(ParseError::InvalidModel(ctx.violations))
    }
}

fn media_types(value: Option<&Value>) -> Vec<String> {
    let types: Vec<String> = value
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .filter_map(Value::as_str)
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    if types.is_empty() {
        vec!["application/json".to_string()]
    } else {
        types
    }
}

fn parse_path_item(
    template: &str,
    item: &Map<String, Value>,
    ptr: &str,
    consumes: &[String],
    produces: &[String],
    ctx: &mut Ctx,
) -> BTreeMap<Verb, OperationSpec> {
    let shared = match item.get("parameters") {
        Some(Value::Array(params)) => params
            .iter()
            .enumerate()
            .filter_map(|(i, p)| parse_parameter(p, &child(&child(ptr, "parameters"), &i.to_string()), ctx))
            .collect(),
        Some(_) => {
            ctx.violation(&child(ptr, "parameters"), "parameters must be an array");
            Vec::new()
        }
        None => Vec::new(),
    };

    let placeholders = placeholders(template);
    let mut ops = BTreeMap::new();
    for (key, value) in item {
        let Some(verb) = Verb::from_key(key) else {
            continue;
        };
        let op_ptr = child(ptr, key);
        let Some(op) = value.as_object() else {
            ctx.violation(&op_ptr, "operation must be an object");
            continue;
        };
        let mut params: Vec<ParameterSpec> = match op.get("parameters") {
            Some(Value::Array(list)) => list
                .iter()
                .enumerate()
                .filter_map(|(i, p)| {
                    parse_parameter(p, &child(&child(&op_ptr, "parameters"), &i.to_string()), ctx)
                })
                .collect(),
            Some(_) => {
                ctx.violation(&child(&op_ptr, "parameters"), "parameters must be an array");
                Vec::new()
            }
            None => Vec::new(),
        };
        // Path-level parameters apply unless the operation overrides (name, in).
        for p in &shared {
            if !params
                .iter()
                .any(|q| q.name == p.name && q.location == p.location)
            {
                params.push(p.clone());
            }
        }

        check_parameters(&params, &placeholders, &op_ptr, ctx);

        let mut responses = BTreeMap::new();
        match op.get("responses") {
            Some(Value::Object(map)) => {
                for (status_key, resp) in map {
                    if status_key.starts_with("x-") {
                        continue;
                    }
                    let resp_ptr = child(&child(&op_ptr, "responses"), status_key);
                    if !valid_status_key(status_key) {
                        ctx.violation(
                            &resp_ptr,
                            format!("status key {status_key:?} must be a code in 100-599 or \"default\""),
                        );
                        continue;
                    }
                    let schema = resp
                        .get("schema")
                        .and_then(|s| parse_schema(s, &child(&resp_ptr, "schema"), ctx));
                    responses.insert(
                        status_key.clone(),
                        ResponseSpec {
                            status_key: status_key.clone(),
                            schema,
                        },
                    );
                }
            }
            Some(_) => ctx.violation(&child(&op_ptr, "responses"), "responses must be an object"),
            None => {}
        }

        let consumes = match op.get("consumes") {
            Some(v) => media_types(Some(v)),
            None => consumes.to_vec(),
        };
        let produces = match op.get("produces") {
            Some(v) => media_types(Some(v)),
            None => produces.to_vec(),
        };
        ops.insert(
            verb,
            OperationSpec {
                verb,
                path_template: template.to_string(),
                operation_id: op
                    .get("operationId")
                    .and_then(Value::as_str)
                    .map(str::to_string),
                parameters: params,
                responses,
                consumes,
                produces,
            },
        );
    }
    ops
}

fn valid_status_key(key: &str) -> bool {
    if key == "default" {
        return true;
    }
    key.len() == 3
        && key.bytes().all(|b| b.is_ascii_digit())
        && matches!(key.parse::<u16>(), Ok(100..=599))
}

/// Names of the `{name}` placeholders in a path template, in order.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let Some(close) = after.find('}') else { break };
        out.push(after[..close].to_string());
        rest = &after[close + 1..];
    }
    out
}

fn check_parameters(
    params: &[ParameterSpec],
    placeholders: &[String],
    op_ptr: &str,
    ctx: &mut Ctx,
) {
    let ptr = child(op_ptr, "parameters");
    let mut seen = BTreeSet::new();
    for p in params {
        if !seen.insert((p.location, p.name.as_str())) {
            ctx.violation(
                &ptr,
                format!("duplicate {} parameter {:?}", p.location, p.name),
            );
        }
    }
    let bodies = params
        .iter()
        .filter(|p| p.location == Location::Body)
        .count();
    if bodies > 1 {
        ctx.violation(&ptr, "at most one body parameter is allowed");
    }
    if bodies == 1 && params.iter().any(|p| p.location == Location::Form) {
        ctx.violation(&ptr, "body and formData parameters cannot be combined");
    }
    let path_names: BTreeSet<&str> = params
        .iter()
        .filter(|p| p.location == Location::Path)
        .map(|p| p.name.as_str())
        .collect();
    for name in placeholders {
        if !path_names.contains(name.as_str()) {
            ctx.violation(
                &ptr,
                format!("placeholder {{{name}}} has no matching path parameter"),
            );
        }
    }
    for name in path_names {
        if !placeholders.iter().any(|p| p == name) {
            ctx.violation(
                &ptr,
                format!("path parameter {name:?} does not appear in the path template"),
            );
        }
    }
}

fn parse_parameter(value: &Value, ptr: &str, ctx: &mut Ctx) -> Option<ParameterSpec> {
    let Some(obj) = value.as_object() else {
        ctx.violation(ptr, "parameter must be an object");
        return None;
    };
    if obj.contains_key("$ref") {
        ctx.violation(ptr, "parameter references are not supported");
        return None;
    }
    let Some(name) = obj.get("name").and_then(Value::as_str) else {
        ctx.violation(ptr, "parameter is missing a string \"name\"");
        return None;
    };
    let location = match obj.get("in").and_then(Value::as_str) {
        Some(key) => match Location::from_key(key) {
            Some(loc) => loc,
            None => {
                ctx.violation(&child(ptr, "in"), format!("unknown parameter location {key:?}"));
                return None;
            }
        },
        None => {
            ctx.violation(ptr, "parameter is missing \"in\"");
            return None;
        }
    };
    let required = match obj.get("required") {
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            ctx.violation(&child(ptr, "required"), "required must be a boolean");
            false
        }
        None => location == Location::Path,
    };
    if location == Location::Path && !required {
        ctx.violation(&child(ptr, "required"), "path parameters must be required");
    }
    let schema = if location == Location::Body {
        match obj.get("schema") {
            Some(s) => parse_schema(s, &child(ptr, "schema"), ctx)?,
            None => {
                ctx.violation(ptr, "body parameter is missing \"schema\"");
                return None;
            }
        }
    } else {
        if !obj.contains_key("type") {
            ctx.violation(ptr, format!("{location} parameter is missing \"type\""));
            return None;
        }
        parse_schema(value, ptr, ctx)?
    };
    let collection_format = match obj.get("collectionFormat").and_then(Value::as_str) {
        None => None,
        Some("csv") => Some(CollectionFormat::Csv),
        Some("multi") => Some(CollectionFormat::Multi),
        Some(other) => {
            ctx.violation(
                &child(ptr, "collectionFormat"),
                format!("collectionFormat {other:?} is unsupported (csv and multi only)"),
            );
            None
        }
    };
    Some(ParameterSpec {
        name: name.to_string(),
        location,
        required,
        schema,
        collection_format,
    })
}

fn parse_schema(value: &Value, ptr: &str, ctx: &mut Ctx) -> Option<DataSchema> {
    let Some(obj) = value.as_object() else {
        ctx.violation(ptr, "schema must be an object");
        return None;
    };
    if let Some(reference) = obj.get("$ref") {
        let Some(reference) = reference.as_str() else {
            ctx.violation(&child(ptr, "$ref"), "$ref must be a string");
            return None;
        };
        return match reference.strip_prefix("#/definitions/") {
            Some(name) if !name.is_empty() && !name.contains('/') => {
                Some(DataSchema::reference(unescape_pointer(name)))
            }
            _ => {
                ctx.violation(
                    &child(ptr, "$ref"),
                    format!("unsupported reference {reference:?}; only #/definitions/<name> is allowed"),
                );
                None
            }
        };
    }

    let ty = match obj.get("type") {
        Some(Value::String(t)) => Some(t.as_str()),
        Some(_) => {
            ctx.violation(&child(ptr, "type"), "type must be a string");
            return None;
        }
        None if obj.contains_key("properties") => Some("object"),
        None if obj.contains_key("items") => Some("array"),
        None => None,
    };
    match ty {
        Some("array") => {
            let Some(items) = obj.get("items") else {
                ctx.violation(ptr, "array schema is missing \"items\"");
                return None;
            };
            let items = parse_schema(items, &child(ptr, "items"), ctx)?;
            Some(DataSchema::array(items))
        }
        Some("object") => {
            let mut properties = BTreeMap::new();
            match obj.get("properties") {
                None => {}
                Some(Value::Object(props)) => {
                    let props_ptr = child(ptr, "properties");
                    for (name, schema) in props {
                        if let Some(s) = parse_schema(schema, &child(&props_ptr, name), ctx) {
                            properties.insert(name.clone(), s);
                        }
                    }
                }
                Some(_) => ctx.violation(&child(ptr, "properties"), "properties must be an object"),
            }
            let mut required = Vec::new();
            match obj.get("required") {
                None => {}
                Some(Value::Array(names)) => {
                    for (i, name) in names.iter().enumerate() {
                        match name.as_str() {
                            Some(n) if properties.contains_key(n) => required.push(n.to_string()),
                            Some(n) => ctx.violation(
                                &child(&child(ptr, "required"), &i.to_string()),
                                format!("required key {n:?} is not a declared property"),
                            ),
                            None => ctx.violation(
                                &child(&child(ptr, "required"), &i.to_string()),
                                "required entries must be strings",
                            ),
                        }
                    }
                }
                Some(_) => ctx.violation(&child(ptr, "required"), "required must be an array"),
            }
            Some(DataSchema::Object {
                properties,
                required,
            })
        }
        Some(name) => {
            let Some(ty) = PrimitiveType::from_name(name) else {
                ctx.violation(&child(ptr, "type"), format!("unsupported type {name:?}"));
                return None;
            };
            let mut prim = Primitive::new(ty);
            if let Some(format) = obj.get("format").and_then(Value::as_str) {
                if KNOWN_FORMATS.contains(&(ty, format)) {
                    prim.format = Some(format.to_string());
                } else {
                    ctx.warnings.push(format!(
                        "{ptr}: format {format:?} is not supported for {ty}; using plain {ty}"
                    ));
                }
            }
            match obj.get("enum") {
                None => {}
                Some(Value::Array(values)) if !values.is_empty() => {
                    prim.enum_values = Some(values.clone())
                }
                Some(_) => ctx.violation(&child(ptr, "enum"), "enum must be a non-empty array"),
            }
            for (key, slot) in [("minimum", &mut prim.minimum), ("maximum", &mut prim.maximum)] {
                match obj.get(key) {
                    None => {}
                    Some(v) => match v.as_f64() {
                        Some(n) => *slot = Some(n),
                        None => ctx.violation(&child(ptr, key), format!("{key} must be a number")),
                    },
                }
            }
            if let (Some(min), Some(max)) = (prim.minimum, prim.maximum) {
                if min > max {
                    ctx.violation(ptr, format!("minimum {min} exceeds maximum {max}"));
                }
            }
            if let Some(pattern) = obj.get("pattern") {
                match pattern.as_str() {
                    Some(p) => match regex::Regex::new(p) {
                        Ok(_) => prim.pattern = Some(p.to_string()),
                        Err(e) => ctx.violation(
                            &child(ptr, "pattern"),
                            format!("pattern does not compile: {e}"),
                        ),
                    },
                    None => ctx.violation(&child(ptr, "pattern"), "pattern must be a string"),
                }
            }
            Some(DataSchema::Primitive(prim))
        }
        None => {
            ctx.violation(ptr, "schema has no \"type\"");
            None
        }
    }
}

fn check_references(api: &ApiDescription, ctx: &mut Ctx) {
    let check = |schema: &DataSchema, ptr: String, ctx: &mut Ctx| {
        schema.walk(&mut |s| {
            if let DataSchema::Reference { name } = s {
                if !api.definitions.contains_key(name) {
                    ctx.violation(
                        &ptr,
                        format!("dangling reference #/definitions/{name}"),
                    );
                }
            }
        });
    };
    for (name, schema) in &api.definitions {
        check(schema, child("/definitions", name), ctx);
    }
    for (template, ops) in &api.paths {
        for (verb, op) in ops {
            let op_ptr = child(&child("/paths", template), verb.key());
            for p in &op.parameters {
                check(&p.schema, child(&child(&op_ptr, "parameters"), &p.name), ctx);
            }
            for (key, resp) in &op.responses {
                if let Some(schema) = &resp.schema {
                    check(schema, child(&child(&op_ptr, "responses"), key), ctx);
                }
            }
        }
    }
    // Pure alias chains (A -> B -> A) never reach a concrete schema.
    for name in api.definitions.keys() {
        if let Err(super::ResolveError::CyclicReference(cycle)) =
            super::resolve_reference(api, name)
        {
            if cycle.first() == Some(name) {
                ctx.violation(
                    &child("/definitions", name),
                    format!("cyclic reference chain {}", cycle.join(" -> ")),
                );
            }
        }
    }
}
