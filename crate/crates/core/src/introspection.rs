//! Schema extraction: the introspective query, parsing of its reply into a
//! [`Schema`], structural validation, and the reverse rendering used by the
//! mock service and for saved schema files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::schema::{FieldDef, InputValue, Schema, TypeDef, TypeKind, TypeRef};

/// Deepest `ofType` chain the query requests and the parser accepts.
pub const MAX_WRAPPING_DEPTH: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("no query type declared at {path}")]
    MissingQueryType { path: String },
    #[error("unresolved type reference `{name}` at {path}")]
    UnresolvedTypeReference { path: String, name: String },
    #[error("malformed introspection reply at {path}: {reason}")]
    MalformedReply { path: String, reason: String },
}

fn type_ref_fragment() -> String {
    let mut body = String::from("kind name");
    for _ in 0..MAX_WRAPPING_DEPTH {
        body = format!("kind name ofType {{ {body} }}");
    }
    format!("fragment TypeRef on __Type {{ {body} }}")
}

/// The introspective query document. Deterministic.
pub fn build_introspection_query() -> String {
    let mut q = String::new();
    q.push_str("query IntrospectionQuery { __schema { ");
    q.push_str("queryType { name } mutationType { name } subscriptionType { name } ");
    q.push_str("types { ...FullType } ");
    q.push_str("directives { name locations args { ...InputValue } } } } ");
    q.push_str("fragment FullType on __Type { kind name ");
    q.push_str("fields(includeDeprecated: true) { name args { ...InputValue } type { ...TypeRef } } ");
    q.push_str("inputFields { ...InputValue } interfaces { ...TypeRef } ");
    q.push_str("enumValues(includeDeprecated: true) { name } possibleTypes { ...TypeRef } } ");
    q.push_str("fragment InputValue on __InputValue { name type { ...TypeRef } defaultValue } ");
    q.push_str(&type_ref_fragment());
    q
}

fn malformed(path: &str, reason: impl Into<String>) -> SchemaError {
    SchemaError::MalformedReply {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, SchemaError> {
    v.as_object().ok_or_else(|| malformed(path, "expected an object"))
}

fn str_member<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'a str, SchemaError> {
    obj.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(&format!("{path}.{key}"), "expected a string"))
}

/// Treats a missing member and `null` as an empty list.
fn list_member<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'a [Value], SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(&[]),
        Some(Value::Array(a)) => Ok(a),
        Some(_) => Err(malformed(&format!("{path}.{key}"), "expected a list")),
    }
}

fn root_name(schema: &Map<String, Value>, key: &str, path: &str) -> Result<Option<String>, SchemaError> {
    match schema.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            let p = format!("{path}.{key}");
            let o = as_object(v, &p)?;
            Ok(Some(str_member(o, "name", &p)?.to_string()))
        }
    }
}

fn parse_type_ref(v: &Value, path: &str, level: usize) -> Result<TypeRef, SchemaError> {
    let obj = as_object(v, path)?;
    let kind_str = str_member(obj, "kind", path)?;
    let kind = TypeKind::from_introspection(kind_str)
        .ok_or_else(|| malformed(&format!("{path}.kind"), format!("unknown kind `{kind_str}`")))?;
    match kind {
        TypeKind::List | TypeKind::NonNull => {
            let inner_path = format!("{path}.ofType");
            let inner = match obj.get("ofType") {
                Some(v) if !v.is_null() => v,
                _ => {
                    return Err(SchemaError::UnresolvedTypeReference {
                        path: inner_path,
                        name: format!("<{kind_str} wrapper without ofType>"),
                    })
                }
            };
            if level + 1 > MAX_WRAPPING_DEPTH {
                return Err(SchemaError::UnresolvedTypeReference {
                    path: inner_path,
                    name: format!("<wrapping deeper than {MAX_WRAPPING_DEPTH}>"),
                });
            }
            let inner = parse_type_ref(inner, &inner_path, level + 1)?;
            Ok(if kind == TypeKind::List {
                TypeRef::list(inner)
            } else {
                if inner.is_non_null() {
                    return Err(malformed(&inner_path, "NON_NULL directly inside NON_NULL"));
                }
                TypeRef::non_null(inner)
            })
        }
        _ => Ok(TypeRef::named(str_member(obj, "name", path)?)),
    }
}

fn parse_input_value(v: &Value, path: &str) -> Result<InputValue, SchemaError> {
    let obj = as_object(v, path)?;
    let name = str_member(obj, "name", path)?.to_string();
    let ty_path = format!("{path}.type");
    let ty = parse_type_ref(
        obj.get("type").ok_or_else(|| malformed(&ty_path, "missing"))?,
        &ty_path,
        0,
    )?;
    let has_default = matches!(obj.get("defaultValue"), Some(d) if !d.is_null());
    Ok(InputValue {
        name,
        ty,
        has_default,
    })
}

fn parse_field(v: &Value, path: &str) -> Result<FieldDef, SchemaError> {
    let obj = as_object(v, path)?;
    let name = str_member(obj, "name", path)?.to_string();
    let ty_path = format!("{path}.type");
    let ty = parse_type_ref(
        obj.get("type").ok_or_else(|| malformed(&ty_path, "missing"))?,
        &ty_path,
        0,
    )?;
    let args = list_member(obj, "args", path)?
        .iter()
        .enumerate()
        .map(|(i, a)| parse_input_value(a, &format!("{path}.args[{i}]")))
        .collect::<Result<_, _>>()?;
    Ok(FieldDef { name, ty, args })
}

fn named_list(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Vec<String>, SchemaError> {
    list_member(obj, key, path)?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let p = format!("{path}.{key}[{i}]");
            Ok(str_member(as_object(v, &p)?, "name", &p)?.to_string())
        })
        .collect()
}

fn parse_type_def(v: &Value, path: &str) -> Result<TypeDef, SchemaError> {
    let obj = as_object(v, path)?;
    let name = str_member(obj, "name", path)?.to_string();
    let kind_str = str_member(obj, "kind", path)?;
    let kind = match TypeKind::from_introspection(kind_str) {
        Some(TypeKind::List | TypeKind::NonNull) | None => {
            return Err(malformed(
                &format!("{path}.kind"),
                format!("`{kind_str}` is not a named type kind"),
            ))
        }
        Some(k) => k,
    };
    let fields = list_member(obj, "fields", path)?
        .iter()
        .enumerate()
        .map(|(i, f)| parse_field(f, &format!("{path}.fields[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let input_fields = list_member(obj, "inputFields", path)?
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let iv = parse_input_value(f, &format!("{path}.inputFields[{i}]"))?;
            Ok(FieldDef::new(iv.name, iv.ty))
        })
        .collect::<Result<Vec<_>, SchemaError>>()?;
    Ok(TypeDef {
        kind,
        name,
        fields,
        input_fields,
        enum_values: named_list(obj, "enumValues", path)?,
        possible_types: named_list(obj, "possibleTypes", path)?,
        interfaces: named_list(obj, "interfaces", path)?,
    })
}

/// Parses an introspection reply. Accepts either the full HTTP reply
/// (`{"data": {"__schema": ...}}`) or the bare `{"__schema": ...}` object.
/// System types (names starting with `__`) and directives are dropped.
pub fn parse_schema(reply: &Value) -> Result<Schema, SchemaError> {
    let (schema_v, base) = if let Some(s) = reply.pointer("/data/__schema") {
        (s, "data.__schema")
    } else if let Some(s) = reply.get("__schema") {
        (s, "__schema")
    } else {
        return Err(malformed("data.__schema", "missing"));
    };
    let obj = as_object(schema_v, base)?;

    let query_type_name = root_name(obj, "queryType", base)?.ok_or_else(|| {
        SchemaError::MissingQueryType {
            path: format!("{base}.queryType"),
        }
    })?;
    let mutation_type_name = root_name(obj, "mutationType", base)?;
    let subscription_type_name = root_name(obj, "subscriptionType", base)?;

    let mut types = BTreeMap::new();
    for (i, t) in list_member(obj, "types", base)?.iter().enumerate() {
        let path = format!("{base}.types[{i}]");
        let def = parse_type_def(t, &path)?;
        if def.name.starts_with("__") {
            continue;
        }
        if types.insert(def.name.clone(), def).is_some() {
            return Err(malformed(&path, "duplicate type name"));
        }
    }
    let schema = Schema {
        query_type_name,
        mutation_type_name,
        subscription_type_name,
        types,
    };

    for d in validate_schema(&schema) {
        if d.severity == Severity::Error {
            return Err(d.into_schema_error(base));
        }
    }
    Ok(schema)
}

/// Parses the text of an introspection reply.
pub fn parse_schema_text(text: &str) -> Result<Schema, SchemaError> {
    let v: Value = serde_json::from_str(text).map_err(|e| malformed("$", e.to_string()))?;
    parse_schema(&v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    MissingQueryType,
    RootNotObject(String),
    UnresolvedType { path: String, name: String },
    InputFieldNotInputType { path: String, name: String },
    InputFieldHasArguments(String),
    ArgumentNotInputType { path: String, name: String },
    UnionMemberNotObject { union: String, member: String },
    NestedNonNull(String),
    DuplicateField(String),
    UnknownScalar(String),
    SubscriptionIgnored(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
}

impl Diagnostic {
    fn error(kind: DiagnosticKind) -> Self {
        Diagnostic {
            severity: Severity::Error,
            kind,
        }
    }

    fn warning(kind: DiagnosticKind) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            kind,
        }
    }

    fn into_schema_error(self, base: &str) -> SchemaError {
        match self.kind {
            DiagnosticKind::MissingQueryType => SchemaError::MissingQueryType {
                path: format!("{base}.queryType"),
            },
            DiagnosticKind::UnresolvedType { path, name } => {
                SchemaError::UnresolvedTypeReference { path, name }
            }
            other => malformed(base, format!("{other:?}")),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {:?}", self.kind)
    }
}

fn has_nested_non_null(t: &TypeRef) -> bool {
    match t {
        TypeRef::Named(_) => false,
        TypeRef::NonNull(inner) => inner.is_non_null() || has_nested_non_null(inner),
        TypeRef::List(inner) => has_nested_non_null(inner),
    }
}

/// Checks the structural invariants of a schema. An empty result means the
/// schema is fully usable; warnings flag things the fuzzer handles
/// generically.
pub fn validate_schema(schema: &Schema) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    match schema.get(&schema.query_type_name) {
        None => out.push(Diagnostic::error(DiagnosticKind::MissingQueryType)),
        Some(t) if t.kind != TypeKind::Object => out.push(Diagnostic::error(
            DiagnosticKind::RootNotObject(t.name.clone()),
        )),
        Some(_) => {}
    }
    if let Some(m) = &schema.mutation_type_name {
        match schema.get(m) {
            Some(t) if t.kind == TypeKind::Object => {}
            Some(_) => out.push(Diagnostic::error(DiagnosticKind::RootNotObject(m.clone()))),
            None => out.push(Diagnostic::error(DiagnosticKind::UnresolvedType {
                path: "mutationType".into(),
                name: m.clone(),
            })),
        }
    }
    if let Some(s) = &schema.subscription_type_name {
        out.push(Diagnostic::warning(DiagnosticKind::SubscriptionIgnored(s.clone())));
    }

    let check_ref = |out: &mut Vec<Diagnostic>, path: String, ty: &TypeRef| -> Option<TypeKind> {
        if has_nested_non_null(ty) {
            out.push(Diagnostic::error(DiagnosticKind::NestedNonNull(path.clone())));
        }
        match schema.get(ty.base_name()) {
            Some(t) => Some(t.kind),
            None => {
                out.push(Diagnostic::error(DiagnosticKind::UnresolvedType {
                    path,
                    name: ty.base_name().to_string(),
                }));
                None
            }
        }
    };
    let is_input_kind = |k: TypeKind| matches!(k, TypeKind::Scalar | TypeKind::Enum | TypeKind::Input);

    for t in schema.types.values() {
        let mut seen = BTreeSet::new();
        for f in t.fields.iter().chain(&t.input_fields) {
            if !seen.insert(f.name.as_str()) {
                out.push(Diagnostic::error(DiagnosticKind::DuplicateField(format!(
                    "{}.{}",
                    t.name, f.name
                ))));
            }
        }
        for f in &t.fields {
            let path = format!("{}.{}", t.name, f.name);
            check_ref(&mut out, path.clone(), &f.ty);
            for a in &f.args {
                let apath = format!("{path}({})", a.name);
                if let Some(k) = check_ref(&mut out, apath.clone(), &a.ty) {
                    if !is_input_kind(k) {
                        out.push(Diagnostic::error(DiagnosticKind::ArgumentNotInputType {
                            path: apath,
                            name: a.ty.base_name().to_string(),
                        }));
                    }
                }
            }
        }
        for f in &t.input_fields {
            let path = format!("{}.{}", t.name, f.name);
            if let Some(k) = check_ref(&mut out, path.clone(), &f.ty) {
                if !is_input_kind(k) {
                    out.push(Diagnostic::error(DiagnosticKind::InputFieldNotInputType {
                        path: path.clone(),
                        name: f.ty.base_name().to_string(),
                    }));
                }
            }
            if !f.args.is_empty() {
                out.push(Diagnostic::error(DiagnosticKind::InputFieldHasArguments(path)));
            }
        }
        for p in &t.possible_types {
            match schema.get(p) {
                Some(m) if m.kind == TypeKind::Object => {}
                Some(_) if t.kind == TypeKind::Union => {
                    out.push(Diagnostic::error(DiagnosticKind::UnionMemberNotObject {
                        union: t.name.clone(),
                        member: p.clone(),
                    }))
                }
                Some(_) => {}
                None => out.push(Diagnostic::error(DiagnosticKind::UnresolvedType {
                    path: format!("{}.possibleTypes", t.name),
                    name: p.clone(),
                })),
            }
        }
        for i in &t.interfaces {
            if schema.get(i).is_none() {
                out.push(Diagnostic::error(DiagnosticKind::UnresolvedType {
                    path: format!("{}.interfaces", t.name),
                    name: i.clone(),
                }));
            }
        }
        if t.kind == TypeKind::Scalar && !t.is_builtin_scalar() {
            out.push(Diagnostic::warning(DiagnosticKind::UnknownScalar(t.name.clone())));
        }
    }
    out.sort();
    out
}

fn type_ref_json(t: &TypeRef) -> Value {
    match t {
        TypeRef::Named(n) => json!({"kind": Value::Null, "name": n, "ofType": Value::Null}),
        TypeRef::List(i) => json!({"kind": "LIST", "name": Value::Null, "ofType": type_ref_json(i)}),
        TypeRef::NonNull(i) => {
            json!({"kind": "NON_NULL", "name": Value::Null, "ofType": type_ref_json(i)})
        }
    }
}

/// Like [`type_ref_json`] but with the named type's kind filled in.
fn resolved_type_ref_json(schema: &Schema, t: &TypeRef) -> Value {
    let mut v = type_ref_json(t);
    let mut cur = &mut v;
    loop {
        if cur["ofType"].is_null() {
            let kind = schema
                .get(t.base_name())
                .map(|d| d.kind.as_introspection())
                .unwrap_or("SCALAR");
            cur["kind"] = json!(kind);
            break;
        }
        cur = &mut cur["ofType"];
    }
    v
}

fn input_value_json(schema: &Schema, name: &str, ty: &TypeRef, has_default: bool) -> Value {
    json!({
        "name": name,
        "type": resolved_type_ref_json(schema, ty),
        "defaultValue": if has_default { json!("null") } else { Value::Null },
    })
}

fn named_refs(schema: &Schema, names: &[String]) -> Value {
    Value::Array(
        names
            .iter()
            .map(|n| resolved_type_ref_json(schema, &TypeRef::named(n.clone())))
            .collect(),
    )
}

/// Renders a schema in the shape of an introspection reply
/// (`{"data": {"__schema": ...}}`).
pub fn schema_to_introspection(schema: &Schema) -> Value {
    let root = |n: &Option<String>| match n {
        Some(n) => json!({ "name": n }),
        None => Value::Null,
    };
    let types: Vec<Value> = schema
        .types
        .values()
        .map(|t| {
            let fields = match t.kind {
                TypeKind::Object | TypeKind::Interface => Value::Array(
                    t.fields
                        .iter()
                        .map(|f| {
                            json!({
                                "name": f.name,
                                "args": f.args.iter()
                                    .map(|a| input_value_json(schema, &a.name, &a.ty, a.has_default))
                                    .collect::<Vec<_>>(),
                                "type": resolved_type_ref_json(schema, &f.ty),
                                "isDeprecated": false,
                                "deprecationReason": Value::Null,
                            })
                        })
                        .collect(),
                ),
                _ => Value::Null,
            };
            let input_fields = if t.kind == TypeKind::Input {
                Value::Array(
                    t.input_fields
                        .iter()
                        .map(|f| input_value_json(schema, &f.name, &f.ty, false))
                        .collect(),
                )
            } else {
                Value::Null
            };
            let enum_values = if t.kind == TypeKind::Enum {
                Value::Array(
                    t.enum_values
                        .iter()
                        .map(|v| json!({"name": v, "isDeprecated": false, "deprecationReason": Value::Null}))
                        .collect(),
                )
            } else {
                Value::Null
            };
            let possible = match t.kind {
                TypeKind::Union | TypeKind::Interface => named_refs(schema, &t.possible_types),
                _ => Value::Null,
            };
            let interfaces = match t.kind {
                TypeKind::Object => named_refs(schema, &t.interfaces),
                _ => Value::Null,
            };
            json!({
                "kind": t.kind.as_introspection(),
                "name": t.name,
                "fields": fields,
                "inputFields": input_fields,
                "interfaces": interfaces,
                "enumValues": enum_values,
                "possibleTypes": possible,
            })
        })
        .collect();
    json!({
        "data": {
            "__schema": {
                "queryType": { "name": schema.query_type_name },
                "mutationType": root(&schema.mutation_type_name),
                "subscriptionType": root(&schema.subscription_type_name),
                "types": types,
                "directives": [],
            }
        }
    })
}
