//! Testing targets, reply classification and fault detection.
//!
//! A target is a boolean objective; a test covers it or not. Every
//! operation gets five static targets (three status classes plus the
//! data and errors outcomes). A coverage feed adds one target per covered
//! unit and one per (operation with errors, last unit) pair.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use indexmap::IndexSet;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::executor::{CoverageFeed, Executor};
use crate::gene::GeneTree;
use crate::printer::{print, RequestBody};
use crate::schema::{OperationKind, Schema, TypeKind, TypeRef};

/// An operation identity, printed as `query.pets` or `mutation.addPet`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpRef {
    pub kind: OperationKind,
    pub name: String,
}

impl OpRef {
    pub fn new(kind: OperationKind, name: impl Into<String>) -> Self {
        OpRef {
            kind,
            name: name.into(),
        }
    }

    pub fn of(action: &GeneTree) -> Self {
        OpRef::new(action.operation_kind, action.operation_name.clone())
    }
}

impl fmt::Display for OpRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.kind, self.name)
    }
}

impl FromStr for OpRef {
    type Err = TargetParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TargetParseError(s.to_string());
        let (kind, name) = s.split_once('.').ok_or_else(bad)?;
        let kind = match kind {
            "query" => OperationKind::Query,
            "mutation" => OperationKind::Mutation,
            _ => return Err(bad()),
        };
        if name.is_empty() {
            return Err(bad());
        }
        Ok(OpRef::new(kind, name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatusClass {
    Success,
    ClientError,
    ServerError,
}

impl StatusClass {
    /// Class of an HTTP status; `None` for codes outside 2xx/4xx/5xx.
    pub fn of(status: u16) -> Option<StatusClass> {
        match status {
            200..=299 => Some(StatusClass::Success),
            400..=499 => Some(StatusClass::ClientError),
            500..=599 => Some(StatusClass::ServerError),
            _ => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            StatusClass::Success => "2xx",
            StatusClass::ClientError => "4xx",
            StatusClass::ServerError => "5xx",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TargetId {
    Status(OpRef, StatusClass),
    Data(OpRef),
    Errors(OpRef),
    ErrorAt(OpRef, String),
    /// A distinct fault class observed on an operation, keyed by
    /// [`FaultKind::label`].
    Fault(OpRef, String),
    Coverage(String),
}

impl TargetId {
    pub fn operation(&self) -> Option<&OpRef> {
        match self {
            TargetId::Status(op, _)
            | TargetId::Data(op)
            | TargetId::Errors(op)
            | TargetId::ErrorAt(op, _)
            | TargetId::Fault(op, _) => Some(op),
            TargetId::Coverage(_) => None,
        }
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetId::Status(op, c) => write!(f, "status_{}:{op}", c.label()),
            TargetId::Data(op) => write!(f, "data:{op}"),
            TargetId::Errors(op) => write!(f, "errors:{op}"),
            TargetId::ErrorAt(op, unit) => write!(f, "error_at:{op}@{unit}"),
            TargetId::Fault(op, label) => write!(f, "fault:{op}@{label}"),
            TargetId::Coverage(unit) => write!(f, "cov:{unit}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed target id `{0}`")]
pub struct TargetParseError(pub String);

impl FromStr for TargetId {
    type Err = TargetParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TargetParseError(s.to_string());
        let (tag, rest) = s.split_once(':').ok_or_else(bad)?;
        Ok(match tag {
            "status_2xx" => TargetId::Status(rest.parse()?, StatusClass::Success),
            "status_4xx" => TargetId::Status(rest.parse()?, StatusClass::ClientError),
            "status_5xx" => TargetId::Status(rest.parse()?, StatusClass::ServerError),
            "data" => TargetId::Data(rest.parse()?),
            "errors" => TargetId::Errors(rest.parse()?),
            "error_at" => {
                let (op, unit) = rest.split_once('@').ok_or_else(bad)?;
                TargetId::ErrorAt(op.parse()?, unit.to_string())
            }
            "fault" => {
                let (op, label) = rest.split_once('@').ok_or_else(bad)?;
                TargetId::Fault(op.parse()?, label.to_string())
            }
            "cov" if !rest.is_empty() => TargetId::Coverage(rest.to_string()),
            _ => return Err(bad()),
        })
    }
}

impl From<TargetId> for String {
    fn from(t: TargetId) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for TargetId {
    type Error = TargetParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// The five static targets of one operation.
pub fn targets_for(op: &OpRef) -> [TargetId; 5] {
    [
        TargetId::Status(op.clone(), StatusClass::Success),
        TargetId::Status(op.clone(), StatusClass::ClientError),
        TargetId::Status(op.clone(), StatusClass::ServerError),
        TargetId::Data(op.clone()),
        TargetId::Errors(op.clone()),
    ]
}

/// Registry of every target known so far, in discovery order. It only
/// grows.
#[derive(Debug, Default)]
pub struct TargetRegistry {
    inner: RwLock<IndexSet<TargetId>>,
}

impl TargetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry seeded with the static targets of every schema operation.
    pub fn for_schema(schema: &Schema) -> Self {
        let r = Self::new();
        for (kind, f) in schema.operations() {
            for t in targets_for(&OpRef::new(kind, f.name.clone())) {
                r.register(t);
            }
        }
        r
    }

    /// Returns true when the target was not known before.
    pub fn register(&self, t: TargetId) -> bool {
        self.inner.write().expect("registry lock").insert(t)
    }

    pub fn contains(&self, t: &TargetId) -> bool {
        self.inner.read().expect("registry lock").contains(t)
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<TargetId> {
        self.inner.read().expect("registry lock").iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    ServerStatus5xx,
    ErrorsEntry,
    NonNullViolation { path: String },
    SchemaConformance { path: String },
    MalformedBody,
    /// An error message matched the named internal-failure pattern.
    SuspiciousInternalMessage { pattern: String },
}

impl FaultKind {
    /// Stable text form, e.g. `non_null_violation/pets.owner.lastName`.
    pub fn label(&self) -> String {
        match self {
            FaultKind::ServerStatus5xx => "server_status_5xx".into(),
            FaultKind::ErrorsEntry => "errors_entry".into(),
            FaultKind::NonNullViolation { path } => format!("non_null_violation/{path}"),
            FaultKind::SchemaConformance { path } => format!("schema_conformance/{path}"),
            FaultKind::MalformedBody => "malformed_body".into(),
            FaultKind::SuspiciousInternalMessage { pattern } => {
                format!("suspicious_internal_message/{pattern}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseClassification {
    pub status: u16,
    pub has_data: bool,
    pub has_errors: bool,
    pub error_messages: Vec<String>,
    pub faults: Vec<FaultKind>,
    pub covered_targets: BTreeSet<TargetId>,
}

impl ResponseClassification {
    fn push_fault(&mut self, f: FaultKind) {
        if !self.faults.contains(&f) {
            self.faults.push(f);
        }
    }

    /// Status and errors-entry faults already have their own targets.
    fn add_fault_targets(&mut self, op: &OpRef) {
        for f in &self.faults {
            if !matches!(f, FaultKind::ServerStatus5xx | FaultKind::ErrorsEntry) {
                self.covered_targets
                    .insert(TargetId::Fault(op.clone(), f.label()));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("pattern `{name}` does not compile: {reason}")]
    InvalidPattern { name: String, reason: String },
    #[error("line {line}: expected `name = regex`")]
    MalformedLine { line: usize },
}

/// Default internal-failure markers as `(name, regex)` pairs.
pub const DEFAULT_PATTERNS: [(&str, &str); 5] = [
    ("internal_server_error", r"(?i)internal server error"),
    ("jvm_stack_frame", r"\bat [\w$.<>]+\([\w$]+\.(?:java|kt|scala):\d+\)"),
    ("node_stack_frame", r"\bat [^\n]*\(?[^\s()]+\.(?:js|mjs|cjs|ts):\d+:\d+\)?"),
    ("python_traceback", r"Traceback \(most recent call last\)"),
    ("sql_failure", r"QueryFailedError|invalid input syntax"),
];

/// Name reported when an error carries `extensions.exception.stacktrace`.
pub const STACKTRACE_EXTENSION: &str = "extensions_stacktrace";

fn non_null_message() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"Cannot return null for non-nullable field ([A-Za-z_]\w*)\.([A-Za-z_]\w*)")
            .expect("static regex")
    })
}

/// Turns raw replies into classifications. The internal-message pattern
/// list is configurable; everything else is fixed.
#[derive(Debug, Clone)]
pub struct Classifier {
    patterns: Vec<(String, Regex)>,
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier::with_patterns(DEFAULT_PATTERNS.iter().map(|(n, p)| (*n, *p)))
            .expect("default patterns compile")
    }
}

impl Classifier {
    pub fn with_patterns<'a>(
        patterns: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, PatternError> {
        let patterns = patterns
            .into_iter()
            .map(|(name, src)| {
                Regex::new(src)
                    .map(|re| (name.to_string(), re))
                    .map_err(|e| PatternError::InvalidPattern {
                        name: name.to_string(),
                        reason: e.to_string(),
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(Classifier { patterns })
    }

    /// Parses `name = regex` lines; blank lines and `#` comments are skipped.
    pub fn from_pattern_file(text: &str) -> Result<Self, PatternError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, re) = line
                .split_once('=')
                .ok_or(PatternError::MalformedLine { line: i + 1 })?;
            let name = name.trim();
            if name.is_empty() {
                return Err(PatternError::MalformedLine { line: i + 1 });
            }
            pairs.push((name, re.trim()));
        }
        Classifier::with_patterns(pairs)
    }

    pub fn pattern_names(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(|(n, _)| n.as_str())
    }

    /// Classification of a call that never produced an HTTP reply.
    pub fn transport_failure(&self) -> ResponseClassification {
        ResponseClassification {
            status: 0,
            has_data: false,
            has_errors: false,
            error_messages: Vec::new(),
            faults: vec![FaultKind::MalformedBody],
            covered_targets: BTreeSet::new(),
        }
    }

    /// Pure function of its inputs.
    pub fn classify(
        &self,
        status: u16,
        body: &[u8],
        schema: &Schema,
        op: &OpRef,
    ) -> ResponseClassification {
        let mut c = ResponseClassification {
            status,
            has_data: false,
            has_errors: false,
            error_messages: Vec::new(),
            faults: Vec::new(),
            covered_targets: BTreeSet::new(),
        };
        if let Some(class) = StatusClass::of(status) {
            c.covered_targets.insert(TargetId::Status(op.clone(), class));
        }
        if class_is_5xx(status) {
            c.push_fault(FaultKind::ServerStatus5xx);
        }

        let parsed: Option<serde_json::Map<String, Value>> =
            match serde_json::from_slice::<Value>(body) {
                Ok(Value::Object(m)) if m.contains_key("data") || m.contains_key("errors") => {
                    Some(m)
                }
                _ => None,
            };
        let Some(obj) = parsed else {
            c.push_fault(FaultKind::MalformedBody);
            c.add_fault_targets(op);
            return c;
        };

        let errors = match obj.get("errors") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(a)) => a.clone(),
            Some(_) => {
                c.push_fault(FaultKind::MalformedBody);
                Vec::new()
            }
        };
        let data = obj.get("data").filter(|d| !d.is_null());
        c.has_data = data.is_some();
        c.has_errors = !errors.is_empty();
        if c.has_errors {
            c.push_fault(FaultKind::ErrorsEntry);
            c.covered_targets.insert(TargetId::Errors(op.clone()));
        } else if c.has_data {
            c.covered_targets.insert(TargetId::Data(op.clone()));
        }

        for e in &errors {
            let message = e.get("message").and_then(Value::as_str).unwrap_or("");
            c.error_messages.push(message.to_string());
            for (name, re) in &self.patterns {
                if re.is_match(message) {
                    c.push_fault(FaultKind::SuspiciousInternalMessage {
                        pattern: name.clone(),
                    });
                }
            }
            let trace = e
                .pointer("/extensions/exception/stacktrace")
                .or_else(|| e.pointer("/extensions/stacktrace"));
            if trace.is_some_and(|t| !t.is_null()) {
                c.push_fault(FaultKind::SuspiciousInternalMessage {
                    pattern: STACKTRACE_EXTENSION.to_string(),
                });
            }
            if let Some(path) = non_null_path(e, message, schema, op) {
                c.push_fault(FaultKind::NonNullViolation { path });
            }
        }

        if let Some(data) = data {
            for f in conformance_faults(data, schema, op) {
                c.push_fault(f);
            }
        }
        c.add_fault_targets(op);
        c
    }
}

fn class_is_5xx(status: u16) -> bool {
    StatusClass::of(status) == Some(StatusClass::ServerError)
}

/// Field path of a "Cannot return null" error, when the schema marks that
/// field non-null.
fn non_null_path(error: &Value, message: &str, schema: &Schema, op: &OpRef) -> Option<String> {
    let caps = non_null_message().captures(message)?;
    let (type_name, field_name) = (&caps[1], &caps[2]);
    let declared = schema.get(type_name)?.field(field_name)?;
    if !declared.ty.is_non_null() {
        return None;
    }
    let segments: Vec<&str> = error
        .get("path")
        .and_then(Value::as_array)
        .map(|p| p.iter().filter_map(Value::as_str).collect())
        .unwrap_or_default();
    if segments.last() == Some(&field_name) && resolves_non_null(schema, op, &segments) {
        Some(segments.join("."))
    } else {
        Some(format!("{type_name}.{field_name}"))
    }
}

fn resolves_non_null(schema: &Schema, op: &OpRef, segments: &[&str]) -> bool {
    let Some(root) = schema.root_type(op.kind) else {
        return false;
    };
    let mut type_name = root.name.as_str();
    let mut last = None;
    for seg in segments {
        let Some(field) = lookup_field(schema, type_name, seg) else {
            return false;
        };
        type_name = field.ty.base_name();
        last = Some(&field.ty);
    }
    last.is_some_and(TypeRef::is_non_null)
}

/// A field of a composite type; abstract types also search their
/// concrete types.
fn lookup_field<'s>(
    schema: &'s Schema,
    type_name: &str,
    field: &str,
) -> Option<&'s crate::schema::FieldDef> {
    let def = schema.get(type_name)?;
    def.field(field).or_else(|| {
        def.possible_types
            .iter()
            .find_map(|p| schema.get(p).and_then(|t| t.field(field)))
    })
}

/// Walks the `data` member against the schema. List indices are not part
/// of reported paths.
pub fn conformance_faults(data: &Value, schema: &Schema, op: &OpRef) -> Vec<FaultKind> {
    let mut out = Vec::new();
    let Some(root) = schema.root_type(op.kind) else {
        return out;
    };
    walk_object(data, &root.name, schema, "", &mut out);
    out
}

fn join(prefix: &str, seg: &str) -> String {
    if prefix.is_empty() {
        seg.to_string()
    } else {
        format!("{prefix}.{seg}")
    }
}

fn walk_object(v: &Value, type_name: &str, schema: &Schema, path: &str, out: &mut Vec<FaultKind>) {
    let Value::Object(map) = v else {
        out.push(FaultKind::SchemaConformance {
            path: path.to_string(),
        });
        return;
    };
    for (key, child) in map {
        let p = join(path, key);
        if key == "__typename" {
            if !child.is_string() {
                out.push(FaultKind::SchemaConformance { path: p });
            }
            continue;
        }
        match lookup_field(schema, type_name, key) {
            Some(f) => walk_value(child, &f.ty, schema, &p, out),
            None => out.push(FaultKind::SchemaConformance { path: p }),
        }
    }
}

fn walk_value(v: &Value, ty: &TypeRef, schema: &Schema, path: &str, out: &mut Vec<FaultKind>) {
    let conformance = |out: &mut Vec<FaultKind>| {
        out.push(FaultKind::SchemaConformance {
            path: path.to_string(),
        })
    };
    match ty {
        TypeRef::NonNull(inner) => {
            if v.is_null() {
                out.push(FaultKind::NonNullViolation {
                    path: path.to_string(),
                });
            } else {
                walk_value(v, inner, schema, path, out);
            }
        }
        _ if v.is_null() => {}
        TypeRef::List(el) => match v {
            Value::Array(items) => items.iter().for_each(|i| walk_value(i, el, schema, path, out)),
            _ => conformance(out),
        },
        TypeRef::Named(name) => {
            let Some(def) = schema.get(name) else {
                return conformance(out);
            };
            let ok = match def.kind {
                TypeKind::Scalar => match name.as_str() {
                    "Int" => v
                        .as_i64()
                        .is_some_and(|i| i32::try_from(i).is_ok()),
                    "Float" => v.is_number(),
                    "String" => v.is_string(),
                    "Boolean" => v.is_boolean(),
                    "ID" => v.is_string() || v.is_i64() || v.is_u64(),
                    _ => true,
                },
                TypeKind::Enum => v
                    .as_str()
                    .is_some_and(|s| def.enum_values.iter().any(|e| e == s)),
                TypeKind::Object | TypeKind::Interface | TypeKind::Union => {
                    return walk_object(v, name, schema, path, out)
                }
                _ => false,
            };
            if !ok {
                conformance(out);
            }
        }
    }
}

/// One executed call of a test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub request: RequestBody,
    pub classification: ResponseClassification,
    /// Units reported by the coverage feed right after this call.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Evaluation {
    pub calls: Vec<CallRecord>,
    pub covered: BTreeSet<TargetId>,
}

/// Everything needed to run and score tests against one SUT.
pub struct EvalContext<'a> {
    pub schema: &'a Schema,
    pub classifier: &'a Classifier,
    pub executor: &'a mut dyn Executor,
    pub feed: Option<&'a mut dyn CoverageFeed>,
    pub registry: &'a TargetRegistry,
}

impl EvalContext<'_> {
    /// Discards units reported before the campaign starts.
    pub fn flush_feed(&mut self) {
        if let Some(feed) = self.feed.as_mut() {
            let _ = feed.poll();
        }
    }
}

/// Executes the actions in order and returns the union of covered targets.
/// Newly seen targets are registered. Transport failures become
/// classifications, never errors.
pub fn evaluate(actions: &[GeneTree], ctx: &mut EvalContext<'_>) -> Evaluation {
    let mut out = Evaluation::default();
    for action in actions {
        let request = print(action).expect("actions are repaired before printing");
        let op = OpRef::of(action);
        let mut classification = match ctx.executor.execute(&request) {
            Ok(reply) => ctx.classifier.classify(reply.status, &reply.body, ctx.schema, &op),
            Err(e) => {
                log::debug!("{op}: {e}");
                ctx.classifier.transport_failure()
            }
        };
        let units = match ctx.feed.as_mut() {
            Some(feed) => feed.poll().unwrap_or_else(|e| {
                log::warn!("coverage feed: {e}");
                Vec::new()
            }),
            None => Vec::new(),
        };
        for u in &units {
            classification
                .covered_targets
                .insert(TargetId::Coverage(u.clone()));
        }
        if classification.has_errors {
            if let Some(last) = units.last() {
                classification
                    .covered_targets
                    .insert(TargetId::ErrorAt(op.clone(), last.clone()));
            }
        }
        for t in &classification.covered_targets {
            ctx.registry.register(t.clone());
        }
        out.covered.extend(classification.covered_targets.iter().cloned());
        out.calls.push(CallRecord {
            request,
            classification,
            units,
        });
    }
    out
}
