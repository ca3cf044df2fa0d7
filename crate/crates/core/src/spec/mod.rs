//! Named specs compiled from data schemas.
//!
//! A spec pairs a validator with a generator recipe: the same compiled form is
//! walked by [`validate`] to check a JSON value and by `gen::gen_value` to
//! produce one. Specs live in a [`SpecRegistry`] under namespaced names such as
//! `definitions/ObjectInfo` (the object) and `definitions.ObjectInfo/name`
//! (one of its properties).

mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::oas::{
    list_operations, ApiDescription, DataSchema, Location, OperationSpec, ParameterSpec,
    Primitive, PrimitiveType,
};

pub use validate::{json_path_key, validate, ValidationResult, ValidationViolation};

/// Namespace used for the document's definitions.
pub const DEFINITIONS_NS: &str = "definitions";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Primitive,
    Array,
    Object,
    Enum,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpecRef {
    pub name: String,
    pub kind: SpecKind,
}

impl fmt::Display for SpecRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Uuid,
    DateTime,
    Int32,
    Int64,
    Float,
    Double,
}

impl Format {
    fn parse(ty: PrimitiveType, format: &str) -> Option<Format> {
        match (ty, format) {
            (PrimitiveType::String, "uuid") => Some(Format::Uuid),
            (PrimitiveType::String, "date-time") => Some(Format::DateTime),
            (PrimitiveType::Integer, "int32") => Some(Format::Int32),
            (PrimitiveType::Integer, "int64") => Some(Format::Int64),
            (PrimitiveType::Number, "float") => Some(Format::Float),
            (PrimitiveType::Number, "double") => Some(Format::Double),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrimitiveSpec {
    pub ty: PrimitiveType,
    pub format: Option<Format>,
    pub minimum: Option<f64>,
    pub maximum: Option<f64>,
    pub pattern: Option<Regex>,
}

impl PrimitiveSpec {
    pub fn bare(ty: PrimitiveType) -> Self {
        PrimitiveSpec {
            ty,
            format: None,
            minimum: None,
            maximum: None,
            pattern: None,
        }
    }

    /// Effective lower bound, folding in the int32 range.
    pub fn lower(&self) -> Option<f64> {
        match (self.minimum, self.format) {
            (Some(m), Some(Format::Int32)) => Some(m.max(i32::MIN as f64)),
            (None, Some(Format::Int32)) => Some(i32::MIN as f64),
            (m, _) => m,
        }
    }

    pub fn upper(&self) -> Option<f64> {
        match (self.maximum, self.format) {
            (Some(m), Some(Format::Int32)) => Some(m.min(i32::MAX as f64)),
            (None, Some(Format::Int32)) => Some(i32::MAX as f64),
            (m, _) => m,
        }
    }
}

#[derive(Debug, Clone)]
pub enum CompiledSpec {
    Primitive(PrimitiveSpec),
    Enum(Vec<Value>),
    Array {
        items: String,
    },
    Object {
        /// Property name and the spec that governs it, in key order.
        properties: Vec<(String, String)>,
        required: BTreeSet<String>,
    },
    /// Another registered spec under a second name (a property that is a reference).
    Alias(String),
}

#[derive(Debug, Clone)]
struct Entry {
    spec: CompiledSpec,
    source: DataSchema,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("spec {0:?} is already registered with a different schema")]
    Collision(String),
    #[error("reference #/definitions/{reference} (from {from}) does not resolve")]
    UnresolvableReference { from: String, reference: String },
    #[error("unknown spec {0:?}")]
    UnknownSpec(String),
    #[error("unsupported type {0:?}")]
    UnsupportedType(String),
    #[error("spec {0:?} resolves through a cycle of aliases")]
    AliasCycle(String),
}

/// Validator behavior that is not part of the schema itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Report object keys absent from the schema's properties as violations.
    pub reject_extra_keys: bool,
}

/// Compiled specs by name. Built once during setup, read-only afterwards.
#[derive(Debug, Clone, Default)]
pub struct SpecRegistry {
    entries: BTreeMap<String, Entry>,
    pub options: ValidationOptions,
}

const PREDEFINED: &[(PrimitiveType, Option<&str>)] = &[
    (PrimitiveType::String, None),
    (PrimitiveType::String, Some("uuid")),
    (PrimitiveType::String, Some("date-time")),
    (PrimitiveType::Integer, None),
    (PrimitiveType::Integer, Some("int32")),
    (PrimitiveType::Integer, Some("int64")),
    (PrimitiveType::Number, None),
    (PrimitiveType::Number, Some("float")),
    (PrimitiveType::Number, Some("double")),
    (PrimitiveType::Boolean, None),
];

fn predefined_name(ty: PrimitiveType, format: Option<&str>) -> String {
    match format {
        Some(f) => format!("primitive/{ty}-{f}"),
        None => format!("primitive/{ty}"),
    }
}

impl SpecRegistry {
    /// A registry holding only the predefined primitive specs.
    pub fn new() -> Self {
        let mut registry = SpecRegistry::default();
        for &(ty, format) in PREDEFINED {
            let mut prim = Primitive::new(ty);
            prim.format = format.map(str::to_string);
            let name = predefined_name(ty, format);
            registry
                .insert(name, DataSchema::Primitive(prim.clone()), compile_primitive(&prim))
                .expect("predefined specs are distinct");
        }
        registry
    }

    pub fn with_options(mut self, options: ValidationOptions) -> Self {
        self.options = options;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Every registered spec as a [`SpecRef`].
    pub fn spec_refs(&self) -> Vec<SpecRef> {
        self.entries
            .keys()
            .filter_map(|name| self.spec_ref(name).ok())
            .collect()
    }

    /// Looks up a spec, following aliases to the concrete compiled form.
    pub fn get(&self, name: &str) -> Result<&CompiledSpec, SpecError> {
        let mut current = name;
        for _ in 0..=self.entries.len() {
            let entry = self
                .entries
                .get(current)
                .ok_or_else(|| SpecError::UnknownSpec(current.to_string()))?;
            match &entry.spec {
                CompiledSpec::Alias(target) => current = target,
                spec => return Ok(spec),
            }
        }
        Err(SpecError::AliasCycle(name.to_string()))
    }

    pub fn spec_ref(&self, name: &str) -> Result<SpecRef, SpecError> {
        let kind = match self.get(name)? {
            CompiledSpec::Primitive(_) => SpecKind::Primitive,
            CompiledSpec::Enum(_) => SpecKind::Enum,
            CompiledSpec::Array { .. } => SpecKind::Array,
            CompiledSpec::Object { .. } => SpecKind::Object,
            CompiledSpec::Alias(_) => unreachable!("get() follows aliases"),
        };
        Ok(SpecRef {
            name: name.to_string(),
            kind,
        })
    }

    /// The schema a spec was compiled from.
    pub fn source(&self, name: &str) -> Option<&DataSchema> {
        self.entries.get(name).map(|e| &e.source)
    }

    fn insert(&mut self, name: String, source: DataSchema, spec: CompiledSpec) -> Result<bool, SpecError> {
        match self.entries.get(&name) {
            Some(existing) if existing.source == source => Ok(false),
            Some(_) => Err(SpecError::Collision(name)),
            None => {
                self.entries.insert(name, Entry { spec, source });
                Ok(true)
            }
        }
    }

    /// Compiles `schema` under `name`. References point into the
    /// definitions namespace and must already be registered there.
    pub fn register(&mut self, name: &str, schema: &DataSchema) -> Result<SpecRef, SpecError> {
        let known: BTreeSet<String> = self
            .entries
            .keys()
            .filter_map(|n| n.strip_prefix("definitions/"))
            .map(str::to_string)
            .collect();
        let mut out = Vec::new();
        let ns = children_ns(name);
        Compiler {
            registry: self,
            known_definitions: &known,
            defs_ns: DEFINITIONS_NS,
            created: &mut out,
        }
        .compile(name, &ns, schema)?;
        self.spec_ref(name)
    }
}

fn children_ns(name: &str) -> String {
    match name.rfind('/') {
        Some(i) => format!("{}.{}", &name[..i], &name[i + 1..]),
        None => name.to_string(),
    }
}

fn compile_primitive(prim: &Primitive) -> CompiledSpec {
    if let Some(values) = &prim.enum_values {
        return CompiledSpec::Enum(values.clone());
    }
    CompiledSpec::Primitive(PrimitiveSpec {
        ty: prim.ty,
        format: prim.format.as_deref().and_then(|f| Format::parse(prim.ty, f)),
        minimum: prim.minimum,
        maximum: prim.maximum,
        pattern: prim
            .pattern
            .as_deref()
            .and_then(|p| Regex::new(p).ok()),
    })
}

struct Compiler<'a> {
    registry: &'a mut SpecRegistry,
    known_definitions: &'a BTreeSet<String>,
    defs_ns: &'a str,
    created: &'a mut Vec<String>,
}

impl Compiler<'_> {
    fn reference_target(&self, from: &str, reference: &str) -> Result<String, SpecError> {
        if self.known_definitions.contains(reference) {
            Ok(format!("{}/{reference}", self.defs_ns))
        } else {
            Err(SpecError::UnresolvableReference {
                from: from.to_string(),
                reference: reference.to_string(),
            })
        }
    }

    fn add(&mut self, name: &str, source: &DataSchema, spec: CompiledSpec) -> Result<(), SpecError> {
        self.registry.insert(name.to_string(), source.clone(), spec)?;
        if !self.created.iter().any(|n| n == name) {
            self.created.push(name.to_string());
        }
        Ok(())
    }

    /// Name of the spec governing `schema` when it appears as a child at `name`.
    /// References are not re-registered; arrays of references also get a
    /// shared `array/<Name>` spec.
    fn child(&mut self, name: &str, ns: &str, schema: &DataSchema) -> Result<String, SpecError> {
        match schema {
            DataSchema::Reference { name: reference } => self.reference_target(name, reference),
            DataSchema::Array { items } if matches!(**items, DataSchema::Reference { .. }) => {
                let DataSchema::Reference { name: reference } = &**items else {
                    unreachable!()
                };
                let target = self.reference_target(name, reference)?;
                let shared = format!("array/{reference}");
                self.add(&shared, schema, CompiledSpec::Array { items: target })?;
                Ok(shared)
            }
            _ => {
                self.compile(name, ns, schema)?;
                Ok(name.to_string())
            }
        }
    }

    fn compile(&mut self, name: &str, ns: &str, schema: &DataSchema) -> Result<(), SpecError> {
        match schema {
            DataSchema::Primitive(prim) => self.add(name, schema, compile_primitive(prim)),
            DataSchema::Reference { name: reference } => {
                let target = self.reference_target(name, reference)?;
                self.add(name, schema, CompiledSpec::Alias(target))
            }
            DataSchema::Array { items } if matches!(**items, DataSchema::Reference { .. }) => {
                let shared = self.child(name, ns, schema)?;
                self.add(name, schema, CompiledSpec::Alias(shared))
            }
            DataSchema::Array { items } => {
                let items_name = self.child(&format!("{ns}/items"), &format!("{ns}.items"), items)?;
                self.add(name, schema, CompiledSpec::Array { items: items_name })
            }
            DataSchema::Object {
                properties,
                required,
            } => {
                let mut props = Vec::with_capacity(properties.len());
                for (key, prop) in properties {
                    let prop_name = format!("{ns}/{key}");
                    match prop {
                        DataSchema::Reference { name: reference } => {
                            let target = self.reference_target(&prop_name, reference)?;
                            self.add(&prop_name, prop, CompiledSpec::Alias(target))?;
                        }
                        _ => self.compile(&prop_name, &format!("{ns}.{key}"), prop)?,
                    }
                    props.push((key.clone(), prop_name));
                }
                self.add(
                    name,
                    schema,
                    CompiledSpec::Object {
                        properties: props,
                        required: required.iter().cloned().collect(),
                    },
                )
            }
        }
    }
}

/// Compiles every definition into the registry under `namespace`.
///
/// Objects yield one spec per property plus one for the object itself; arrays
/// of references additionally register a shared `array/<Name>` spec. Returns
/// the specs created or confirmed, in registration order.
pub fn definitions_to_specs(
    namespace: &str,
    definitions: &BTreeMap<String, DataSchema>,
    registry: &mut SpecRegistry,
) -> Result<Vec<SpecRef>, SpecError> {
    let known: BTreeSet<String> = definitions.keys().cloned().collect();
    let mut created = Vec::new();
    let mut compiler = Compiler {
        registry,
        known_definitions: &known,
        defs_ns: namespace,
        created: &mut created,
    };
    for (name, schema) in definitions {
        let spec_name = format!("{namespace}/{name}");
        let ns = format!("{namespace}.{name}");
        compiler.compile(&spec_name, &ns, schema)?;
    }
    created
        .iter()
        // Aliases may point at definitions compiled later in the batch, so
        // kinds are read once everything is registered.
        .map(|name| registry.spec_ref(name))
        .collect()
}

/// The predefined spec for a primitive type and optional format.
///
/// Formats without a predefined spec fall back to the bare type.
pub fn primitive_spec(
    registry: &SpecRegistry,
    ty: &str,
    format: Option<&str>,
) -> Result<SpecRef, SpecError> {
    let prim = PrimitiveType::from_name(ty).ok_or_else(|| SpecError::UnsupportedType(ty.to_string()))?;
    let known = format.filter(|f| Format::parse(prim, f).is_some());
    registry.spec_ref(&predefined_name(prim, known))
}

/// Specs attached to one operation.
#[derive(Debug, Clone)]
pub struct CompiledOperation {
    pub op: OperationSpec,
    /// Object spec whose properties are the parameters, keyed `location.name`.
    pub request: SpecRef,
    /// Each parameter with the spec of its value, in document order.
    pub params: Vec<(ParameterSpec, SpecRef)>,
    /// Status key to the spec of the documented body, if any.
    pub responses: BTreeMap<String, Option<SpecRef>>,
}

impl CompiledOperation {
    pub fn id(&self) -> String {
        self.op.id()
    }

    /// Spec for the body documented for `status`, honoring `default`.
    pub fn response_spec(&self, status: u16) -> Option<&SpecRef> {
        self.responses
            .get(&status.to_string())
            .or_else(|| self.responses.get("default"))
            .and_then(Option::as_ref)
    }

    pub fn param(&self, key: &str) -> Option<&(ParameterSpec, SpecRef)> {
        self.params.iter().find(|(p, _)| p.key() == key)
    }
}

/// A document compiled into specs: definitions, parameters and responses.
#[derive(Debug, Clone)]
pub struct CompiledApi {
    pub registry: SpecRegistry,
    pub operations: Vec<CompiledOperation>,
}

impl CompiledApi {
    pub fn operation(&self, id: &str) -> Option<&CompiledOperation> {
        self.operations.iter().find(|o| o.id() == id)
    }
}

/// Compiles a whole document: definitions first, then one request spec per
/// operation and one spec per documented response body.
pub fn compile_api(api: &ApiDescription, options: ValidationOptions) -> Result<CompiledApi, SpecError> {
    let mut registry = SpecRegistry::new().with_options(options);
    definitions_to_specs(DEFINITIONS_NS, &api.definitions, &mut registry)?;
    let known: BTreeSet<String> = api.definitions.keys().cloned().collect();
    let mut operations = Vec::new();
    for op in list_operations(api) {
        let id = op.id();
        let mut created = Vec::new();
        let mut compiler = Compiler {
            registry: &mut registry,
            known_definitions: &known,
            defs_ns: DEFINITIONS_NS,
            created: &mut created,
        };
        let request_ns = format!("request.{id}");
        let mut param_names = Vec::new();
        let mut properties = BTreeMap::new();
        let mut required = Vec::new();
        for param in &op.parameters {
            let key = param.key();
            let spec_name = compiler.child(
                &format!("{request_ns}/{key}"),
                &format!("{request_ns}.{key}"),
                &param.schema,
            )?;
            param_names.push((param.clone(), spec_name));
            properties.insert(key.clone(), param.schema.clone());
            if param.required {
                required.push(key);
            }
        }
        let request_name = format!("request/{id}");
        let request_source = DataSchema::Object {
            properties,
            required: required.clone(),
        };
        compiler.add(
            &request_name,
            &request_source,
            CompiledSpec::Object {
                properties: param_names
                    .iter()
                    .map(|(p, n)| (p.key(), n.clone()))
                    .collect(),
                required: required.into_iter().collect(),
            },
        )?;
        let mut responses = BTreeMap::new();
        for (status, resp) in &op.responses {
            let spec = match &resp.schema {
                Some(schema) => Some(compiler.child(
                    &format!("response/{id}/{status}"),
                    &format!("response.{id}.{status}"),
                    schema,
                )?),
                None => None,
            };
            responses.insert(status.clone(), spec);
        }
        let params = param_names
            .into_iter()
            .map(|(p, n)| Ok((p, registry.spec_ref(&n)?)))
            .collect::<Result<Vec<_>, SpecError>>()?;
        let responses = responses
            .into_iter()
            .map(|(k, v)| Ok((k, v.map(|n| registry.spec_ref(&n)).transpose()?)))
            .collect::<Result<BTreeMap<_, _>, SpecError>>()?;
        operations.push(CompiledOperation {
            op: op.clone(),
            request: registry.spec_ref(&request_name)?,
            params,
            responses,
        });
    }
    Ok(CompiledApi {
        registry,
        operations,
    })
}

/// Convenience: the location-qualified key for a parameter of `op`.
pub fn param_key(location: Location, name: &str) -> String {
    format!("{location}.{name}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oas::parse_document;
    use serde_json::json;

    fn object_info() -> DataSchema {
        DataSchema::object(
            [
                ("name", DataSchema::string()),
                (
                    "id",
                    DataSchema::Primitive(Primitive::new(PrimitiveType::String).with_format("uuid")),
                ),
            ],
            &[],
        )
    }

    #[test]
    fn object_definition_yields_one_spec_per_property_plus_object() {
        let mut registry = SpecRegistry::new();
        let defs = BTreeMap::from([("ObjectInfo".to_string(), object_info())]);
        let refs = definitions_to_specs("definitions", &defs, &mut registry).unwrap();
        let names: BTreeSet<&str> = refs.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            BTreeSet::from([
                "definitions.ObjectInfo/name",
                "definitions.ObjectInfo/id",
                "definitions/ObjectInfo"
            ])
        );
        assert_eq!(registry.spec_ref("definitions/ObjectInfo").unwrap().kind, SpecKind::Object);
        assert_eq!(
            registry.spec_ref("definitions.ObjectInfo/id").unwrap().kind,
            SpecKind::Primitive
        );
    }

    #[test]
    fn empty_definitions_yield_nothing() {
        let mut registry = SpecRegistry::new();
        let before = registry.len();
        let refs = definitions_to_specs("definitions", &BTreeMap::new(), &mut registry).unwrap();
        assert!(refs.is_empty());
        assert_eq!(registry.len(), before);
    }

    #[test]
    fn arrays_of_references_share_an_array_spec() {
        let mut registry = SpecRegistry::new();
        let defs = BTreeMap::from([
            ("ObjectInfo".to_string(), object_info()),
            ("Wrap".to_string(), DataSchema::array(DataSchema::reference("ObjectInfo"))),
        ]);
        let refs = definitions_to_specs("definitions", &defs, &mut registry).unwrap();
        assert!(refs.iter().any(|r| r.name == "array/ObjectInfo" && r.kind == SpecKind::Array));
        assert_eq!(registry.spec_ref("definitions/Wrap").unwrap().kind, SpecKind::Array);
        match registry.get("definitions/Wrap").unwrap() {
            CompiledSpec::Array { items } => assert_eq!(items, "definitions/ObjectInfo"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn registration_is_idempotent_and_detects_collisions() {
        let mut registry = SpecRegistry::new();
        registry.register("custom/a", &DataSchema::string()).unwrap();
        let len = registry.len();
        registry.register("custom/a", &DataSchema::string()).unwrap();
        assert_eq!(registry.len(), len);
        assert_eq!(
            registry.register("custom/a", &DataSchema::integer()),
            Err(SpecError::Collision("custom/a".into()))
        );
    }

    #[test]
    fn unresolvable_reference_is_an_error() {
        let mut registry = SpecRegistry::new();
        let defs = BTreeMap::from([(
            "A".to_string(),
            DataSchema::object([("b", DataSchema::reference("Missing"))], &[]),
        )]);
        assert!(matches!(
            definitions_to_specs("definitions", &defs, &mut registry),
            Err(SpecError::UnresolvableReference { reference, .. }) if reference == "Missing"
        ));
    }

    #[test]
    fn primitive_specs_are_predefined() {
        let registry = SpecRegistry::new();
        let uuid = primitive_spec(&registry, "string", Some("uuid")).unwrap();
        assert_eq!(uuid.name, "primitive/string-uuid");
        let email = primitive_spec(&registry, "string", Some("email")).unwrap();
        assert_eq!(email.name, "primitive/string");
        assert_eq!(
            primitive_spec(&registry, "file", None),
            Err(SpecError::UnsupportedType("file".into()))
        );
    }

    #[test]
    fn compile_fig1_document() {
        let api = parse_document(include_str!("../../tests/data/fig1.json")).unwrap();
        let compiled = compile_api(&api, ValidationOptions::default()).unwrap();
        assert_eq!(compiled.operations.len(), 2);
        let list = compiled.operation("GET /objects").unwrap();
        assert_eq!(list.request.name, "request/GET /objects");
        assert_eq!(list.params[0].0.key(), "query.q");
        assert_eq!(
            list.response_spec(200).map(|s| s.name.as_str()),
            Some("array/ObjectInfo")
        );
        assert!(list.response_spec(400).is_none());
        let one = compiled.operation("GET /objects/{objectid}").unwrap();
        assert_eq!(
            one.response_spec(200).map(|s| s.name.as_str()),
            Some("definitions/ObjectInfo")
        );
        match compiled.registry.get(&one.request.name).unwrap() {
            CompiledSpec::Object { required, .. } => {
                assert!(required.contains("path.objectid"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn recursive_definitions_compile() {
        let text = json!({
            "swagger": "2.0",
            "definitions": {"Node": {"type": "object", "properties": {
                "value": {"type": "integer"},
                "children": {"type": "array", "items": {"$ref": "#/definitions/Node"}}
            }}}
        })
        .to_string();
        let api = parse_document(&text).unwrap();
        let compiled = compile_api(&api, ValidationOptions::default()).unwrap();
        assert!(compiled.registry.contains("definitions/Node"));
        assert!(compiled.registry.contains("array/Node"));
    }
}
