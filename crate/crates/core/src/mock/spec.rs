//! Declarative description of a mock GraphQL service.

use serde_json::Value;

use crate::schema::{OperationKind, Schema};
use crate::targets::FaultKind;

/// How an operation's root field produces its value.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolver {
    /// Deterministic fixture data derived from the schema.
    Generate,
    /// A business-logic error: `data` is null and one error is returned.
    UserError { message: String },
}

/// Selects a value inside the arguments of a call, e.g. `["input",
/// "specialtyId"]`.
pub type ArgPath = Vec<String>;

#[derive(Debug, Clone, PartialEq)]
pub enum Trigger {
    Always,
    /// The argument is absent or not one of the listed values.
    ArgNotIn { path: ArgPath, values: Vec<Value> },
    /// The argument is present (and not null).
    ArgPresent { path: ArgPath },
    /// The field at this selection path (relative to the root field) is
    /// selected.
    Selected { path: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultScriptKind {
    /// The field at `path` (starting with the root field) resolves to null
    /// although the schema marks it non-null.
    NullForNonNull { path: Vec<String> },
    /// An internal crash reported as a 200 reply with a generic message.
    CrashOnMissingId { op: String },
    /// A user error reported with status 500.
    Status500OnUserError { op: String, message: String },
    /// An error entry leaking a stack trace in its extensions.
    StackTraceLeak { op: String },
    /// An HTML error page from a proxy in front of the service.
    HtmlErrorPage { op: String },
}

impl FaultScriptKind {
    pub fn op(&self) -> &str {
        match self {
            FaultScriptKind::NullForNonNull { path } => &path[0],
            FaultScriptKind::CrashOnMissingId { op }
            | FaultScriptKind::Status500OnUserError { op, .. }
            | FaultScriptKind::StackTraceLeak { op }
            | FaultScriptKind::HtmlErrorPage { op } => op,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FaultScriptKind::NullForNonNull { .. } => "null_for_non_null",
            FaultScriptKind::CrashOnMissingId { .. } => "crash_on_missing_id",
            FaultScriptKind::Status500OnUserError { .. } => "status500_on_user_error",
            FaultScriptKind::StackTraceLeak { .. } => "stack_trace_leak",
            FaultScriptKind::HtmlErrorPage { .. } => "html_error_page",
        }
    }

    /// The exact fault list the classifier must report for this script's
    /// reply under the default pattern list.
    pub fn expected_faults(&self) -> Vec<FaultKind> {
        match self {
            FaultScriptKind::NullForNonNull { path } => vec![
                FaultKind::ErrorsEntry,
                FaultKind::NonNullViolation {
                    path: path.join("."),
                },
            ],
            FaultScriptKind::CrashOnMissingId { .. } => vec![
                FaultKind::ErrorsEntry,
                FaultKind::SuspiciousInternalMessage {
                    pattern: "internal_server_error".into(),
                },
            ],
            FaultScriptKind::Status500OnUserError { .. } => {
                vec![FaultKind::ServerStatus5xx, FaultKind::ErrorsEntry]
            }
            FaultScriptKind::StackTraceLeak { .. } => vec![
                FaultKind::ErrorsEntry,
                FaultKind::SuspiciousInternalMessage {
                    pattern: crate::targets::STACKTRACE_EXTENSION.into(),
                },
            ],
            FaultScriptKind::HtmlErrorPage { .. } => {
                vec![FaultKind::ServerStatus5xx, FaultKind::MalformedBody]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultScript {
    pub kind: FaultScriptKind,
    pub trigger: Trigger,
}

/// When a coverage unit is hit during a call of its operation.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitCondition {
    Called,
    Selected { path: Vec<String> },
    /// At least `min` leaf fields are selected directly under `path`
    /// (an empty path is the root field's own selection set).
    LeafCountAtLeast { path: Vec<String>, min: usize },
    Trigger(Trigger),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRule {
    pub unit: String,
    pub op: String,
    pub condition: UnitCondition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SutSpec {
    pub name: String,
    pub schema: Schema,
    pub resolvers: Vec<(String, Resolver)>,
    pub faults: Vec<FaultScript>,
    /// Rules are checked in declaration order; that order is the order in
    /// which units are reported.
    pub coverage: Vec<CoverageRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("spec references unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("fault path `{0}` does not resolve to a non-null field")]
    BadFaultPath(String),
}

impl SutSpec {
    pub fn new(name: impl Into<String>, schema: Schema) -> Self {
        SutSpec {
            name: name.into(),
            schema,
            resolvers: Vec::new(),
            faults: Vec::new(),
            coverage: Vec::new(),
        }
    }

    pub fn resolver(&self, op: &str) -> &Resolver {
        self.resolvers
            .iter()
            .find(|(n, _)| n == op)
            .map_or(&Resolver::Generate, |(_, r)| r)
    }

    pub fn operation_kind(&self, op: &str) -> Option<OperationKind> {
        [OperationKind::Query, OperationKind::Mutation]
            .into_iter()
            .find(|k| self.schema.operation(*k, op).is_some())
    }

    pub fn units(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.coverage {
            if !out.contains(&r.unit) {
                out.push(r.unit.clone());
            }
        }
        out
    }

    /// Every fault and rule must reference an existing operation, and
    /// null-for-non-null paths must end at a non-null field.
    pub fn check(&self) -> Result<(), SpecError> {
        let known = |op: &str| {
            self.operation_kind(op)
                .map(|_| ())
                .ok_or_else(|| SpecError::UnknownOperation(op.to_string()))
        };
        for (op, _) in &self.resolvers {
            known(op)?;
        }
        for r in &self.coverage {
            known(&r.op)?;
        }
        for f in &self.faults {
            known(f.kind.op())?;
            if let FaultScriptKind::NullForNonNull { path } = &f.kind {
                let kind = self.operation_kind(&path[0]).expect("checked");
                let mut ty = &self.schema.operation(kind, &path[0]).expect("checked").ty;
                for seg in &path[1..] {
                    ty = &self
                        .schema
                        .get(ty.base_name())
                        .and_then(|t| t.field(seg))
                        .ok_or_else(|| SpecError::BadFaultPath(path.join(".")))?
                        .ty;
                }
                if !ty.is_non_null() || path.len() < 2 {
                    return Err(SpecError::BadFaultPath(path.join(".")));
                }
            }
        }
        Ok(())
    }
}
