//! Request handling of the mock service, independent of any transport.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::spec::{FaultScriptKind, Resolver, SpecError, SutSpec, Trigger, UnitCondition};
use crate::introspection::schema_to_introspection;
use crate::schema::{FieldDef, OperationKind, TypeKind, TypeRef};
use crate::validator::{self, Document, Field, OperationType, Selection};

/// Fragment spreads nested deeper than this are rejected.
const MAX_SPREAD_DEPTH: usize = 16;

/// Number of elements generated for every list.
const LIST_LEN: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockReply {
    pub status: u16,
    pub content_type: String,
    pub body: String,
}

impl MockReply {
    fn json(status: u16, body: &Value) -> Self {
        MockReply {
            status,
            content_type: "application/json".into(),
            body: body.to_string(),
        }
    }

    fn errors(status: u16, messages: &[String]) -> Self {
        let errors: Vec<Value> = messages.iter().map(|m| json!({ "message": m })).collect();
        MockReply::json(status, &json!({ "errors": errors }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedRequest {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

fn fnv(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.bytes().chain([0xff]) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn literal_to_json(v: &validator::Value) -> Value {
    match v {
        validator::Value::Int(s) => s.parse::<i64>().map(Value::from).unwrap_or(Value::Null),
        validator::Value::Float(s) => s.parse::<f64>().map(Value::from).unwrap_or(Value::Null),
        validator::Value::String(s) | validator::Value::Enum(s) => Value::String(s.clone()),
        validator::Value::Boolean(b) => Value::Bool(*b),
        validator::Value::Null | validator::Value::Variable(_) => Value::Null,
        validator::Value::List(items) => Value::Array(items.iter().map(literal_to_json).collect()),
        validator::Value::Object(fields) => Value::Object(
            fields
                .iter()
                .map(|(k, v)| (k.clone(), literal_to_json(v)))
                .collect(),
        ),
    }
}

fn arg_at<'v>(args: &'v Value, path: &[String]) -> Option<&'v Value> {
    path.iter()
        .try_fold(args, |v, seg| v.get(seg))
        .filter(|v| !v.is_null())
}

/// Fields of a selection set with inline fragments and spreads flattened.
fn flat_fields<'d>(set: &'d [Selection], doc: &'d Document, out: &mut Vec<&'d Field>, depth: usize) {
    for s in set {
        match s {
            Selection::Field(f) => out.push(f),
            Selection::InlineFragment { selection_set, .. } => {
                flat_fields(selection_set, doc, out, depth)
            }
            Selection::FragmentSpread { name, .. } if depth < MAX_SPREAD_DEPTH => {
                if let Some(fr) = doc.fragment(name) {
                    flat_fields(&fr.selection_set, doc, out, depth + 1);
                }
            }
            Selection::FragmentSpread { .. } => {}
        }
    }
}

fn selection_at<'d>(root: &'d Field, path: &[String], doc: &'d Document) -> Option<&'d [Selection]> {
    let mut set: &[Selection] = &root.selection_set;
    for seg in path {
        let mut fields = Vec::new();
        flat_fields(set, doc, &mut fields, 0);
        set = &fields.into_iter().find(|f| f.name == *seg)?.selection_set;
    }
    Some(set)
}

fn is_selected(root: &Field, path: &[String], doc: &Document) -> bool {
    match path.split_last() {
        None => true,
        Some((last, parent)) => selection_at(root, parent, doc).is_some_and(|set| {
            let mut fields = Vec::new();
            flat_fields(set, doc, &mut fields, 0);
            fields.iter().any(|f| f.name == *last)
        }),
    }
}

fn leaf_count(root: &Field, path: &[String], doc: &Document) -> usize {
    let Some(set) = selection_at(root, path, doc) else {
        return 0;
    };
    let mut fields = Vec::new();
    flat_fields(set, doc, &mut fields, 0);
    let mut names: Vec<&str> = fields
        .iter()
        .filter(|f| f.selection_set.is_empty() && f.name != "__typename")
        .map(|f| f.name.as_str())
        .collect();
    names.sort_unstable();
    names.dedup();
    names.len()
}

fn trigger_holds(t: &Trigger, args: &Value, root: &Field, doc: &Document) -> bool {
    match t {
        Trigger::Always => true,
        Trigger::ArgNotIn { path, values } => match arg_at(args, path) {
            Some(v) => !values.contains(v),
            None => true,
        },
        Trigger::ArgPresent { path } => arg_at(args, path).is_some(),
        Trigger::Selected { path } => is_selected(root, path, doc),
    }
}

/// Fault replies that replace the whole response.
enum Override {
    Reply(MockReply),
    NullAt(Vec<String>),
}

struct Exec<'a> {
    spec: &'a SutSpec,
    doc: &'a Document,
    errors: Vec<Value>,
    null_paths: Vec<Vec<String>>,
}

impl Exec<'_> {
    fn leaf(&self, ty: &str, name_path: &[String], seed: u64) -> Value {
        let joined = name_path.join(".");
        let h = fnv(&[&joined, &seed.to_string()]);
        let def = self.spec.schema.get(ty);
        match (ty, def.map(|d| d.kind)) {
            ("Int", _) => json!((h % 1000) as i64),
            ("Float", _) => json!((h % 100_000) as f64 / 100.0),
            ("Boolean", _) => json!(h % 2 == 0),
            ("ID", _) => json!(format!("{}", h % 1000)),
            ("String", _) => json!(format!(
                "{}-{}",
                name_path.last().map_or("", String::as_str),
                h % 1000
            )),
            (_, Some(TypeKind::Enum)) => {
                let values = &def.expect("matched").enum_values;
                json!(values[(h % values.len() as u64) as usize])
            }
            ("DateTime", _) => json!(format!("2021-{:02}-{:02}T10:00:00Z", h % 12 + 1, h % 28 + 1)),
            _ => json!(format!("{ty}-{}", h % 1000)),
        }
    }

    /// Err marks a null in a non-null position that must propagate.
    fn complete(
        &mut self,
        ty: &TypeRef,
        field: &Field,
        resp_path: &mut Vec<Value>,
        name_path: &mut Vec<String>,
        seed: u64,
    ) -> Result<Value, ()> {
        match ty {
            TypeRef::NonNull(inner) => self.complete_inner(inner, field, resp_path, name_path, seed),
            other => Ok(self
                .complete_inner(other, field, resp_path, name_path, seed)
                .unwrap_or(Value::Null)),
        }
    }

    fn complete_inner(
        &mut self,
        ty: &TypeRef,
        field: &Field,
        resp_path: &mut Vec<Value>,
        name_path: &mut Vec<String>,
        seed: u64,
    ) -> Result<Value, ()> {
        match ty {
            TypeRef::NonNull(inner) => self.complete_inner(inner, field, resp_path, name_path, seed),
            TypeRef::List(el) => {
                let mut items = Vec::with_capacity(LIST_LEN);
                for i in 0..LIST_LEN {
                    resp_path.push(json!(i));
                    let v = self.complete(el, field, resp_path, name_path, seed.wrapping_add(i as u64 + 1));
                    resp_path.pop();
                    items.push(v?);
                }
                Ok(Value::Array(items))
            }
            TypeRef::Named(name) => {
                let def = self.spec.schema.get(name).expect("validated query");
                if !def.kind.is_composite() {
                    return Ok(self.leaf(name, name_path, seed));
                }
                let concrete = match def.kind {
                    TypeKind::Object => name.clone(),
                    _ => {
                        let h = fnv(&[&name_path.join("."), &seed.to_string()]);
                        def.possible_types[(h % def.possible_types.len() as u64) as usize].clone()
                    }
                };
                self.object(&concrete, &field.selection_set, resp_path, name_path, seed)
            }
        }
    }

    fn applies(&self, condition: &Option<String>, concrete: &str) -> bool {
        match condition {
            None => true,
            Some(c) if c == concrete => true,
            Some(c) => self
                .spec
                .schema
                .get(c)
                .is_some_and(|t| t.possible_types.iter().any(|p| p == concrete)),
        }
    }

    fn collect<'d>(&self, set: &'d [Selection], concrete: &str, out: &mut Vec<&'d Field>, doc: &'d Document, depth: usize) {
        for s in set {
            match s {
                Selection::Field(f) => out.push(f),
                Selection::InlineFragment {
                    type_condition,
                    selection_set,
                    ..
                } => {
                    if self.applies(type_condition, concrete) {
                        self.collect(selection_set, concrete, out, doc, depth);
                    }
                }
                Selection::FragmentSpread { name, .. } => {
                    if let Some(fr) = doc.fragment(name) {
                        if depth < MAX_SPREAD_DEPTH
                            && self.applies(&Some(fr.type_condition.clone()), concrete)
                        {
                            self.collect(&fr.selection_set, concrete, out, doc, depth + 1);
                        }
                    }
                }
            }
        }
    }

    fn object(
        &mut self,
        concrete: &str,
        set: &[Selection],
        resp_path: &mut Vec<Value>,
        name_path: &mut Vec<String>,
        seed: u64,
    ) -> Result<Value, ()> {
        let doc = self.doc;
        let mut fields = Vec::new();
        self.collect(set, concrete, &mut fields, doc, 0);
        let mut out = Map::new();
        let mut failed = false;
        for f in fields {
            let key = f.response_key().to_string();
            if out.contains_key(&key) {
                continue;
            }
            if f.name == "__typename" {
                out.insert(key, json!(concrete));
                continue;
            }
            let def = self
                .spec
                .schema
                .get(concrete)
                .and_then(|t| t.field(&f.name))
                .expect("validated query")
                .clone();
            resp_path.push(json!(key));
            name_path.push(f.name.clone());
            let r = self.resolve_field(concrete, &def, f, resp_path, name_path, seed);
            name_path.pop();
            resp_path.pop();
            match r {
                Ok(v) => {
                    out.insert(key, v);
                }
                Err(()) => failed = true,
            }
        }
        if failed {
            Err(())
        } else {
            Ok(Value::Object(out))
        }
    }

    fn resolve_field(
        &mut self,
        parent: &str,
        def: &FieldDef,
        f: &Field,
        resp_path: &mut Vec<Value>,
        name_path: &mut Vec<String>,
        seed: u64,
    ) -> Result<Value, ()> {
        if self.null_paths.iter().any(|p| p == name_path) {
            if def.ty.is_non_null() {
                self.errors.push(json!({
                    "message": format!("Cannot return null for non-nullable field {parent}.{}.", def.name),
                    "path": resp_path.clone(),
                }));
                return Err(());
            }
            return Ok(Value::Null);
        }
        let args: Map<String, Value> = f
            .arguments
            .iter()
            .map(|(k, v)| (k.clone(), literal_to_json(v)))
            .collect();
        let seed = if args.is_empty() {
            seed
        } else {
            fnv(&[&seed.to_string(), &Value::Object(args).to_string()])
        };
        self.complete(&def.ty, f, resp_path, name_path, seed)
    }
}

/// Transport-independent state of one mock service: the spec, the coverage
/// units hit since the last poll and the request log.
#[derive(Debug, Clone)]
pub struct MockEngine {
    spec: SutSpec,
    pending: Vec<String>,
    log: Vec<LoggedRequest>,
}

impl MockEngine {
    pub fn new(spec: SutSpec) -> Result<Self, SpecError> {
        spec.check()?;
        Ok(MockEngine {
            spec,
            pending: Vec::new(),
            log: Vec::new(),
        })
    }

    pub fn spec(&self) -> &SutSpec {
        &self.spec
    }

    /// Fault units use the form `op/fault/label`.
    pub fn known_units(&self) -> Vec<String> {
        let mut units = self.spec.units();
        for f in &self.spec.faults {
            let u = fault_unit(&f.kind);
            if !units.contains(&u) {
                units.push(u);
            }
        }
        units
    }

    /// Units hit since the previous poll, in first-hit order.
    pub fn poll_coverage(&mut self) -> Vec<String> {
        std::mem::take(&mut self.pending)
    }

    pub fn record(&mut self, req: LoggedRequest) {
        self.log.push(req);
    }

    pub fn log(&self) -> &[LoggedRequest] {
        &self.log
    }

    fn hit(&mut self, unit: String) {
        if !self.pending.contains(&unit) {
            self.pending.push(unit);
        }
    }

    /// Answers one `/graphql` POST body.
    pub fn handle_graphql(&mut self, body: &[u8]) -> MockReply {
        let query = match serde_json::from_slice::<Value>(body) {
            Ok(v) => match v.get("query").and_then(Value::as_str) {
                Some(q) => q.to_string(),
                None => return MockReply::errors(400, &["Must provide query string.".into()]),
            },
            Err(e) => return MockReply::errors(400, &[format!("Malformed request body: {e}")]),
        };
        let doc = match validator::parse_document(&query) {
            Ok(d) => d,
            Err(d) => {
                return MockReply::json(
                    400,
                    &json!({"errors": [{
                        "message": format!("Syntax Error: {}", d.message),
                        "locations": [{"line": d.line, "column": d.column}],
                    }]}),
                )
            }
        };
        let Some(op) = doc.operations.first() else {
            return MockReply::errors(400, &["Document contains no operation.".into()]);
        };
        let kind = match op.kind {
            OperationType::Query => OperationKind::Query,
            OperationType::Mutation => OperationKind::Mutation,
            OperationType::Subscription => {
                return MockReply::errors(400, &["Subscriptions are not supported.".into()])
            }
        };
        let mut roots = Vec::new();
        flat_fields(&op.selection_set, &doc, &mut roots, 0);
        if roots.iter().any(|f| f.name == "__schema") {
            return MockReply::json(200, &schema_to_introspection(&self.spec.schema));
        }
        let problems = Validation::new(&self.spec, &doc).operation(kind, &op.selection_set);
        if !problems.is_empty() {
            return MockReply::errors(400, &problems);
        }
        self.execute(kind, &doc, &roots)
    }

    fn execute(&mut self, kind: OperationKind, doc: &Document, roots: &[&Field]) -> MockReply {
        let spec = self.spec.clone();
        let root_type = spec.schema.root_type(kind).expect("validated").name.clone();
        let mut data = Map::new();
        let mut errors = Vec::new();
        let mut data_null = false;
        for f in roots {
            let key = f.response_key().to_string();
            if data.contains_key(&key) {
                continue;
            }
            if f.name == "__typename" {
                data.insert(key, json!(root_type));
                continue;
            }
            let def = spec.schema.operation(kind, &f.name).expect("validated").clone();
            let args: Value = Value::Object(
                f.arguments
                    .iter()
                    .map(|(k, v)| (k.clone(), literal_to_json(v)))
                    .collect(),
            );
            for rule in spec.coverage.iter().filter(|r| r.op == f.name) {
                let hit = match &rule.condition {
                    UnitCondition::Called => true,
                    UnitCondition::Selected { path } => is_selected(f, path, doc),
                    UnitCondition::LeafCountAtLeast { path, min } => leaf_count(f, path, doc) >= *min,
                    UnitCondition::Trigger(t) => trigger_holds(t, &args, f, doc),
                };
                if hit {
                    self.hit(rule.unit.clone());
                }
            }
            let mut null_paths = Vec::new();
            for fault in spec.faults.iter().filter(|s| s.kind.op() == f.name) {
                if !trigger_holds(&fault.trigger, &args, f, doc) {
                    continue;
                }
                // A null is only observable when its field is selected.
                if let FaultScriptKind::NullForNonNull { path } = &fault.kind {
                    if !is_selected(f, &path[1..], doc) {
                        continue;
                    }
                }
                self.hit(fault_unit(&fault.kind));
                match fault_reply(&fault.kind, f) {
                    Override::Reply(r) => return r,
                    Override::NullAt(p) => null_paths.push(p),
                }
            }
            let value = match spec.resolver(&f.name) {
                Resolver::UserError { message } => {
                    errors.push(json!({"message": message, "path": [key]}));
                    Err(())
                }
                Resolver::Generate => {
                    let mut exec = Exec {
                        spec: &spec,
                        doc,
                        errors: Vec::new(),
                        null_paths,
                    };
                    let seed = fnv(&[&f.name, &args.to_string()]);
                    let mut resp_path = vec![json!(key)];
                    let mut name_path = vec![f.name.clone()];
                    let r = exec.resolve_field(&root_type, &def, f, &mut resp_path, &mut name_path, seed);
                    errors.extend(exec.errors);
                    r
                }
            };
            match value {
                Ok(v) => {
                    data.insert(key, v);
                }
                Err(()) if def.ty.is_non_null() => data_null = true,
                Err(()) => {
                    data.insert(key, Value::Null);
                }
            }
        }
        let mut body = Map::new();
        if !errors.is_empty() {
            body.insert("errors".into(), Value::Array(errors));
        }
        body.insert(
            "data".into(),
            if data_null { Value::Null } else { Value::Object(data) },
        );
        MockReply::json(200, &Value::Object(body))
    }
}

fn fault_unit(kind: &FaultScriptKind) -> String {
    format!("{}/fault/{}", kind.op(), kind.label())
}

fn fault_reply(kind: &FaultScriptKind, f: &Field) -> Override {
    let key = f.response_key();
    match kind {
        FaultScriptKind::NullForNonNull { path } => Override::NullAt(path.clone()),
        FaultScriptKind::CrashOnMissingId { .. } => Override::Reply(MockReply::json(
            200,
            &json!({
                "data": null,
                "errors": [{"message": "Internal Server Error(s) while executing query"}],
            }),
        )),
        FaultScriptKind::Status500OnUserError { message, .. } => Override::Reply(MockReply::json(
            500,
            &json!({
                "errors": [{
                    "message": message,
                    "locations": [{"line": 1, "column": 2}],
                    "path": [key],
                }],
                "data": null,
            }),
        )),
        FaultScriptKind::StackTraceLeak { .. } => Override::Reply(MockReply::json(
            200,
            &json!({
                "errors": [{
                    "message": "Unexpected failure while resolving the request",
                    "path": [key],
                    "extensions": {"exception": {"stacktrace": [
                        "TypeError: Cannot read properties of undefined (reading 'visits')",
                        "    at resolveVisits (/srv/app/resolvers/pet.js:41:17)",
                    ]}},
                }],
                "data": null,
            }),
        )),
        FaultScriptKind::HtmlErrorPage { .. } => Override::Reply(MockReply {
            status: 503,
            content_type: "text/html; charset=utf-8".into(),
            body: "<!DOCTYPE html>\n<html><head><title>Application Error</title></head>\
                   <body>Application Error</body></html>"
                .into(),
        }),
    }
}

/// Checks a parsed document against the schema.
struct Validation<'a> {
    spec: &'a SutSpec,
    doc: &'a Document,
    problems: Vec<String>,
}

impl<'a> Validation<'a> {
    fn new(spec: &'a SutSpec, doc: &'a Document) -> Self {
        Validation {
            spec,
            doc,
            problems: Vec::new(),
        }
    }

    fn operation(mut self, kind: OperationKind, set: &[Selection]) -> Vec<String> {
        match self.spec.schema.root_type(kind) {
            Some(root) => self.selection(&root.name.clone(), set, 0),
            None => self.problems.push(format!("Schema is not configured for {kind}s.")),
        }
        self.problems
    }

    fn selection(&mut self, type_name: &str, set: &[Selection], depth: usize) {
        for s in set {
            match s {
                Selection::Field(f) => self.field(type_name, f, depth),
                Selection::InlineFragment {
                    type_condition,
                    selection_set,
                    ..
                } => {
                    let target = type_condition.as_deref().unwrap_or(type_name);
                    if self.overlaps(type_name, target) {
                        self.selection(target, selection_set, depth);
                    } else {
                        self.problems.push(format!(
                            "Fragment cannot be spread here as objects of type \"{type_name}\" can never be of type \"{target}\"."
                        ));
                    }
                }
                Selection::FragmentSpread { name, .. } => match self.doc.fragment(name) {
                    Some(fr) if depth < MAX_SPREAD_DEPTH => {
                        let (tc, set) = (fr.type_condition.clone(), &fr.selection_set);
                        if self.overlaps(type_name, &tc) {
                            self.selection(&tc, set, depth + 1);
                        } else {
                            self.problems.push(format!("Fragment \"{name}\" cannot be spread here."));
                        }
                    }
                    Some(_) => self.problems.push(format!("Fragment \"{name}\" nests too deeply.")),
                    None => self.problems.push(format!("Unknown fragment \"{name}\".")),
                },
            }
        }
    }

    fn overlaps(&self, a: &str, b: &str) -> bool {
        let schema = &self.spec.schema;
        if schema.get(b).map_or(true, |t| !t.kind.is_composite()) {
            return false;
        }
        let ca = schema.concrete_types(a);
        schema.concrete_types(b).iter().any(|t| ca.contains(t))
    }

    fn field(&mut self, type_name: &str, f: &Field, depth: usize) {
        if f.name == "__typename" {
            if !f.selection_set.is_empty() || !f.arguments.is_empty() {
                self.problems.push("Field \"__typename\" takes no arguments or subfields.".into());
            }
            return;
        }
        let Some(def) = self.spec.schema.get(type_name).and_then(|t| t.field(&f.name)) else {
            self.problems.push(format!(
                "Cannot query field \"{}\" on type \"{type_name}\".",
                f.name
            ));
            return;
        };
        for (name, value) in &f.arguments {
            match def.args.iter().find(|a| a.name == *name) {
                Some(a) => {
                    if let Err(e) = self.value(value, &a.ty) {
                        self.problems
                            .push(format!("Argument \"{name}\" of field \"{}\" has invalid value: {e}", f.name));
                    }
                }
                None => self.problems.push(format!(
                    "Unknown argument \"{name}\" on field \"{type_name}.{}\".",
                    f.name
                )),
            }
        }
        for a in &def.args {
            if a.ty.is_non_null() && !a.has_default && f.argument(&a.name).is_none() {
                self.problems.push(format!(
                    "Field \"{}\" argument \"{}\" of type \"{}\" is required but not provided.",
                    f.name, a.name, a.ty
                ));
            }
        }
        let composite = self
            .spec
            .schema
            .kind_of(&def.ty)
            .is_some_and(TypeKind::is_composite);
        match (composite, f.selection_set.is_empty()) {
            (true, true) => self.problems.push(format!(
                "Field \"{}\" of type \"{}\" must have a selection of subfields.",
                f.name, def.ty
            )),
            (false, false) => self.problems.push(format!(
                "Field \"{}\" must not have a selection since type \"{}\" has no subfields.",
                f.name, def.ty
            )),
            (true, false) => {
                let base = def.ty.base_name().to_string();
                self.selection(&base, &f.selection_set, depth);
            }
            (false, true) => {}
        }
    }

    fn value(&self, v: &validator::Value, ty: &TypeRef) -> Result<(), String> {
        use validator::Value as V;
        match (ty, v) {
            (_, V::Variable(n)) => Err(format!("variable ${n} is not supported")),
            (TypeRef::NonNull(_), V::Null) => Err("null for a non-null type".into()),
            (TypeRef::NonNull(inner), v) => self.value(v, inner),
            (_, V::Null) => Ok(()),
            (TypeRef::List(el), V::List(items)) => items.iter().try_for_each(|i| self.value(i, el)),
            (TypeRef::List(el), v) => self.value(v, el),
            (TypeRef::Named(name), v) => {
                let def = self
                    .spec
                    .schema
                    .get(name)
                    .ok_or_else(|| format!("unknown type {name}"))?;
                let ok = match (def.kind, name.as_str(), v) {
                    (TypeKind::Scalar, "Int", V::Int(s)) => s.parse::<i32>().is_ok(),
                    (TypeKind::Scalar, "Float", V::Int(_) | V::Float(_)) => true,
                    (TypeKind::Scalar, "String", V::String(_)) => true,
                    (TypeKind::Scalar, "Boolean", V::Boolean(_)) => true,
                    (TypeKind::Scalar, "ID", V::String(_) | V::Int(_)) => true,
                    (TypeKind::Scalar, "Int" | "Float" | "String" | "Boolean" | "ID", _) => false,
                    (TypeKind::Scalar, _, V::List(_) | V::Object(_)) => false,
                    (TypeKind::Scalar, _, _) => true,
                    (TypeKind::Enum, _, V::Enum(e)) => def.enum_values.contains(e),
                    (TypeKind::Input, _, V::Object(fields)) => {
                        for (k, fv) in fields {
                            let fd = def
                                .input_field(k)
                                .ok_or_else(|| format!("unknown field {name}.{k}"))?;
                            self.value(fv, &fd.ty)?;
                        }
                        for fd in &def.input_fields {
                            if fd.ty.is_non_null() && !fields.iter().any(|(k, _)| *k == fd.name) {
                                return Err(format!("missing required field {name}.{}", fd.name));
                            }
                        }
                        true
                    }
                    _ => false,
                };
                if ok {
                    Ok(())
                } else {
                    Err(format!("expected {name}"))
                }
            }
        }
    }
}
