use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// HTTP verbs an OpenAPI 2.0 path item may carry.
///
/// Declared in lexicographic order of their lower-case names so the derived
/// `Ord` matches the order operations are listed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verb {
    Delete,
    Get,
    Head,
    Patch,
    Post,
    Put,
}

impl Verb {
    pub const ALL: [Verb; 6] = [
        Verb::Delete,
        Verb::Get,
        Verb::Head,
        Verb::Patch,
        Verb::Post,
        Verb::Put,
    ];

    /// The lower-case key used in a path item.
    pub fn key(self) -> &'static str {
        match self {
            Verb::Delete => "delete",
            Verb::Get => "get",
            Verb::Head => "head",
            Verb::Patch => "patch",
            Verb::Post => "post",
            Verb::Put => "put",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Delete => "DELETE",
            Verb::Get => "GET",
            Verb::Head => "HEAD",
            Verb::Patch => "PATCH",
            Verb::Post => "POST",
            Verb::Put => "PUT",
        }
    }

    pub fn from_key(key: &str) -> Option<Verb> {
        Verb::ALL
            .into_iter()
            .find(|v| v.key().eq_ignore_ascii_case(key))
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Path,
    Query,
    Header,
    Body,
    Form,
}

impl Location {
    /// The value of the `in` field in an OpenAPI 2.0 parameter object.
    pub fn key(self) -> &'static str {
        match self {
            Location::Path => "path",
            Location::Query => "query",
            Location::Header => "header",
            Location::Body => "body",
            Location::Form => "formData",
        }
    }

    pub fn from_key(key: &str) -> Option<Location> {
        match key {
            "path" => Some(Location::Path),
            "query" => Some(Location::Query),
            "header" => Some(Location::Header),
            "body" => Some(Location::Body),
            "formData" => Some(Location::Form),
            _ => None,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Location::Form => "form",
            other => other.key(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveType {
    String,
    Integer,
    Number,
    Boolean,
}

impl PrimitiveType {
    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveType::String => "string",
            PrimitiveType::Integer => "integer",
            PrimitiveType::Number => "number",
            PrimitiveType::Boolean => "boolean",
        }
    }

    pub fn from_name(name: &str) -> Option<PrimitiveType> {
        match name {
            "string" => Some(PrimitiveType::String),
            "integer" => Some(PrimitiveType::Integer),
            "number" => Some(PrimitiveType::Number),
            "boolean" => Some(PrimitiveType::Boolean),
            _ => None,
        }
    }
}

impl fmt::Display for PrimitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A scalar schema: type plus the constraints the generator and validator honor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(rename = "type")]
    pub ty: PrimitiveType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    #[serde(default, rename = "enum", skip_serializing_if = "Option::is_none")]
    pub enum_values: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
}

impl Primitive {
    pub fn new(ty: PrimitiveType) -> Self {
        Primitive {
            ty,
            format: None,
            enum_values: None,
            minimum: None,
            maximum: None,
            pattern: None,
        }
    }

    pub fn with_format(mut self, format: impl Into<String>) -> Self {
        self.format = Some(format.into());
        self
    }
}

/// Recursive data schema: the subset of JSON Schema OpenAPI 2.0 documents use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSchema {
    Primitive(Primitive),
    Array {
        items: Box<DataSchema>,
    },
    Object {
        properties: BTreeMap<String, DataSchema>,
        required: Vec<String>,
    },
    Reference {
        name: String,
    },
}

impl DataSchema {
    pub fn primitive(ty: PrimitiveType) -> Self {
        DataSchema::Primitive(Primitive::new(ty))
    }

    pub fn string() -> Self {
        DataSchema::primitive(PrimitiveType::String)
    }

    pub fn integer() -> Self {
        DataSchema::primitive(PrimitiveType::Integer)
    }

    pub fn reference(name: impl Into<String>) -> Self {
        DataSchema::Reference { name: name.into() }
    }

    pub fn array(items: DataSchema) -> Self {
        DataSchema::Array {
            items: Box::new(items),
        }
    }

    pub fn object<I, K>(properties: I, required: &[&str]) -> Self
    where
        I: IntoIterator<Item = (K, DataSchema)>,
        K: Into<String>,
    {
        DataSchema::Object {
            properties: properties.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            required: required.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Visits this schema and every nested schema, depth first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a DataSchema)) {
        f(self);
        match self {
            DataSchema::Array { items } => items.walk(f),
            DataSchema::Object { properties, .. } => {
                for schema in properties.values() {
                    schema.walk(f);
                }
            }
            DataSchema::Primitive(_) | DataSchema::Reference { .. } => {}
        }
    }

    /// Renders the schema as OpenAPI 2.0 JSON Schema.
    pub fn to_json(&self) -> Value {
        match self {
            DataSchema::Primitive(p) => {
                let mut obj = serde_json::Map::new();
                obj.insert("type".into(), Value::from(p.ty.as_str()));
                if let Some(format) = &p.format {
                    obj.insert("format".into(), Value::from(format.as_str()));
                }
                if let Some(values) = &p.enum_values {
                    obj.insert("enum".into(), Value::Array(values.clone()));
                }
                if let Some(min) = p.minimum {
                    obj.insert("minimum".into(), number_value(min));
                }
                if let Some(max) = p.maximum {
                    obj.insert("maximum".into(), number_value(max));
                }
                if let Some(pattern) = &p.pattern {
                    obj.insert("pattern".into(), Value::from(pattern.as_str()));
                }
                Value::Object(obj)
            }
            DataSchema::Array { items } => serde_json::json!({
                "type": "array",
                "items": items.to_json(),
            }),
            DataSchema::Object {
                properties,
                required,
            } => {
                let props: serde_json::Map<String, Value> = properties
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json()))
                    .collect();
                let mut obj = serde_json::Map::new();
                obj.insert("type".into(), Value::from("object"));
                obj.insert("properties".into(), Value::Object(props));
                if !required.is_empty() {
                    obj.insert("required".into(), Value::from(required.clone()));
                }
                Value::Object(obj)
            }
            DataSchema::Reference { name } => {
                serde_json::json!({ "$ref": format!("#/definitions/{}", escape_pointer(name)) })
            }
        }
    }
}

fn number_value(n: f64) -> Value {
    if n.fract() == 0.0 && n.abs() < 9.0e15 {
        Value::from(n as i64)
    } else {
        Value::from(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectionFormat {
    Csv,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub location: Location,
    pub required: bool,
    pub schema: DataSchema,
    /// Only meaningful for array-valued query, header, path and form parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collection_format: Option<CollectionFormat>,
}

impl ParameterSpec {
    /// Key used for this parameter inside a generated assignment, e.g. `query.q`.
    pub fn key(&self) -> String {
        format!("{}.{}", self.location, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpec {
    pub status_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<DataSchema>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationSpec {
    pub verb: Verb,
    pub path_template: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation_id: Option<String>,
    pub parameters: Vec<ParameterSpec>,
    pub responses: BTreeMap<String, ResponseSpec>,
    pub consumes: Vec<String>,
    pub produces: Vec<String>,
}

impl OperationSpec {
    /// Stable human-readable identifier, `VERB /path/template`.
    pub fn id(&self) -> String {
        format!("{} {}", self.verb, self.path_template)
    }

    pub fn body_parameter(&self) -> Option<&ParameterSpec> {
        self.parameters
            .iter()
            .find(|p| p.location == Location::Body)
    }

    /// True when `status` is covered by an explicit key or by `default`.
    pub fn documents_status(&self, status: u16) -> bool {
        self.responses.contains_key(&status.to_string()) || self.responses.contains_key("default")
    }

    /// The response entry that governs `status`: the exact key, else `default`.
    pub fn response_for(&self, status: u16) -> Option<&ResponseSpec> {
        self.responses
            .get(&status.to_string())
            .or_else(|| self.responses.get("default"))
    }

    /// Documented numeric status codes, excluding `default`.
    pub fn documented_statuses(&self) -> Vec<u16> {
        self.responses
            .keys()
            .filter_map(|k| k.parse().ok())
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let params: Vec<Value> = self.parameters.iter().map(parameter_to_json).collect();
        let responses: serde_json::Map<String, Value> = self
            .responses
            .iter()
            .map(|(key, resp)| {
                let mut obj = serde_json::Map::new();
                obj.insert("description".into(), Value::from(""));
                if let Some(schema) = &resp.schema {
                    obj.insert("schema".into(), schema.to_json());
                }
                (key.clone(), Value::Object(obj))
            })
            .collect();
        let mut obj = serde_json::Map::new();
        if let Some(id) = &self.operation_id {
            obj.insert("operationId".into(), Value::from(id.as_str()));
        }
        obj.insert("consumes".into(), Value::from(self.consumes.clone()));
        obj.insert("produces".into(), Value::from(self.produces.clone()));
        obj.insert("parameters".into(), Value::Array(params));
        obj.insert("responses".into(), Value::Object(responses));
        Value::Object(obj)
    }
}

fn parameter_to_json(param: &ParameterSpec) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("name".into(), Value::from(param.name.as_str()));
    obj.insert("in".into(), Value::from(param.location.key()));
    obj.insert("required".into(), Value::from(param.required));
    if param.location == Location::Body {
        obj.insert("schema".into(), param.schema.to_json());
    } else if let Value::Object(fields) = param.schema.to_json() {
        obj.extend(fields);
        if let Some(cf) = param.collection_format {
            let name = match cf {
                CollectionFormat::Csv => "csv",
                CollectionFormat::Multi => "multi",
            };
            obj.insert("collectionFormat".into(), Value::from(name));
        }
    }
    Value::Object(obj)
}

/// Parsed OpenAPI 2.0 document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiDescription {
    pub scheme: Option<String>,
    pub host: Option<String>,
    pub base_path: String,
    pub paths: BTreeMap<String, BTreeMap<Verb, OperationSpec>>,
    pub definitions: BTreeMap<String, DataSchema>,
    /// Non-fatal findings, such as formats that fell back to their bare type.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ApiDescription {
    pub fn empty() -> Self {
        ApiDescription {
            scheme: None,
            host: None,
            base_path: "/".into(),
            paths: BTreeMap::new(),
            definitions: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    /// Base URL derived from scheme, host and basePath, if a host is documented.
    pub fn default_base_url(&self) -> Option<String> {
        let host = self.host.as_ref()?;
        let scheme = self.scheme.as_deref().unwrap_or("http");
        let base = self.base_path.trim_end_matches('/');
        Some(format!("{scheme}://{host}{base}"))
    }

    pub fn operation(&self, path: &str, verb: Verb) -> Option<&OperationSpec> {
        self.paths.get(path)?.get(&verb)
    }

    /// Finds an operation by its `VERB /path` identifier.
    pub fn operation_by_id(&self, id: &str) -> Option<&OperationSpec> {
        let (verb, path) = id.split_once(' ')?;
        self.operation(path, Verb::from_key(verb)?)
    }

    pub fn operation_count(&self) -> usize {
        self.paths.values().map(BTreeMap::len).sum()
    }

    /// Serializes the model back into the OpenAPI 2.0 subset it was parsed from.
    pub fn to_json(&self) -> Value {
        let mut root = serde_json::Map::new();
        root.insert("swagger".into(), Value::from("2.0"));
        root.insert(
            "info".into(),
            serde_json::json!({ "title": "", "version": "" }),
        );
        if let Some(host) = &self.host {
            root.insert("host".into(), Value::from(host.as_str()));
        }
        root.insert("basePath".into(), Value::from(self.base_path.as_str()));
        if let Some(scheme) = &self.scheme {
            root.insert("schemes".into(), serde_json::json!([scheme]));
        }
        let paths: serde_json::Map<String, Value> = self
            .paths
            .iter()
            .map(|(path, ops)| {
                let item: serde_json::Map<String, Value> = ops
                    .iter()
                    .map(|(verb, op)| (verb.key().to_string(), op.to_json()))
                    .collect();
                (path.clone(), Value::Object(item))
            })
            .collect();
        root.insert("paths".into(), Value::Object(paths));
        let defs: serde_json::Map<String, Value> = self
            .definitions
            .iter()
            .map(|(name, schema)| (name.clone(), schema.to_json()))
            .collect();
        root.insert("definitions".into(), Value::Object(defs));
        Value::Object(root)
    }
}

/// Escapes a JSON-pointer reference token.
pub fn escape_pointer(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

pub fn unescape_pointer(token: &str) -> String {
    token.replace("~1", "/").replace("~0", "~")
}
