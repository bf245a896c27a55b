//! Typed model of a GraphQL schema as reported by introspection.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Names of the scalars every GraphQL server provides.
pub const BUILTIN_SCALARS: [&str; 5] = ["Int", "Float", "String", "Boolean", "ID"];

/// The `kind` of a type as reported by `__Type.kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeKind {
    Object,
    Scalar,
    Enum,
    Input,
    Interface,
    Union,
    List,
    NonNull,
}

impl TypeKind {
    pub fn from_introspection(s: &str) -> Option<TypeKind> {
        Some(match s {
            "OBJECT" => TypeKind::Object,
            "SCALAR" => TypeKind::Scalar,
            "ENUM" => TypeKind::Enum,
            "INPUT_OBJECT" => TypeKind::Input,
            "INTERFACE" => TypeKind::Interface,
            "UNION" => TypeKind::Union,
            "LIST" => TypeKind::List,
            "NON_NULL" => TypeKind::NonNull,
            _ => return None,
        })
    }

    pub fn as_introspection(self) -> &'static str {
        match self {
            TypeKind::Object => "OBJECT",
            TypeKind::Scalar => "SCALAR",
            TypeKind::Enum => "ENUM",
            TypeKind::Input => "INPUT_OBJECT",
            TypeKind::Interface => "INTERFACE",
            TypeKind::Union => "UNION",
            TypeKind::List => "LIST",
            TypeKind::NonNull => "NON_NULL",
        }
    }

    /// Whether values of this kind are leaves (no selection set).
    pub fn is_leaf(self) -> bool {
        matches!(self, TypeKind::Scalar | TypeKind::Enum)
    }

    /// Whether this kind can be selected into (needs a selection set).
    pub fn is_composite(self) -> bool {
        matches!(
            self,
            TypeKind::Object | TypeKind::Interface | TypeKind::Union
        )
    }
}

/// A reference to a type, possibly wrapped in list and non-null markers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeRef {
    Named(String),
    List(Box<TypeRef>),
    NonNull(Box<TypeRef>),
}

impl TypeRef {
    pub fn named(name: impl Into<String>) -> TypeRef {
        TypeRef::Named(name.into())
    }

    pub fn list(inner: TypeRef) -> TypeRef {
        TypeRef::List(Box::new(inner))
    }

    pub fn non_null(inner: TypeRef) -> TypeRef {
        TypeRef::NonNull(Box::new(inner))
    }

    /// The named type at the bottom of the wrappers.
    pub fn base_name(&self) -> &str {
        match self {
            TypeRef::Named(n) => n,
            TypeRef::List(t) | TypeRef::NonNull(t) => t.base_name(),
        }
    }

    pub fn is_non_null(&self) -> bool {
        matches!(self, TypeRef::NonNull(_))
    }

    /// Strips one outer non-null wrapper, if any.
    pub fn nullable(&self) -> &TypeRef {
        match self {
            TypeRef::NonNull(t) => t,
            other => other,
        }
    }

    /// Number of wrapper levels above the named type.
    pub fn wrapping_depth(&self) -> usize {
        match self {
            TypeRef::Named(_) => 0,
            TypeRef::List(t) | TypeRef::NonNull(t) => 1 + t.wrapping_depth(),
        }
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Named(n) => f.write_str(n),
            TypeRef::List(t) => write!(f, "[{t}]"),
            TypeRef::NonNull(t) => write!(f, "{t}!"),
        }
    }
}

/// An argument of a field, or a field of an input object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputValue {
    pub name: String,
    pub ty: TypeRef,
    pub has_default: bool,
}

impl InputValue {
    pub fn new(name: impl Into<String>, ty: TypeRef) -> Self {
        InputValue {
            name: name.into(),
            ty,
            has_default: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub ty: TypeRef,
    pub args: Vec<InputValue>,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, ty: TypeRef) -> Self {
        FieldDef {
            name: name.into(),
            ty,
            args: Vec::new(),
        }
    }

    pub fn with_args(mut self, args: Vec<InputValue>) -> Self {
        self.args = args;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDef {
    pub kind: TypeKind,
    pub name: String,
    /// Fields of objects and interfaces.
    pub fields: Vec<FieldDef>,
    /// Fields of input objects. These never carry arguments.
    pub input_fields: Vec<FieldDef>,
    pub enum_values: Vec<String>,
    /// Members of a union, or implementors of an interface.
    pub possible_types: Vec<String>,
    /// Interfaces implemented by an object type.
    pub interfaces: Vec<String>,
}

impl TypeDef {
    fn empty(kind: TypeKind, name: impl Into<String>) -> Self {
        TypeDef {
            kind,
            name: name.into(),
            fields: Vec::new(),
            input_fields: Vec::new(),
            enum_values: Vec::new(),
            possible_types: Vec::new(),
            interfaces: Vec::new(),
        }
    }

    pub fn scalar(name: impl Into<String>) -> Self {
        Self::empty(TypeKind::Scalar, name)
    }

    pub fn object(name: impl Into<String>, fields: Vec<FieldDef>) -> Self {
        TypeDef {
            fields,
            ..Self::empty(TypeKind::Object, name)
        }
    }

    pub fn interface(
        name: impl Into<String>,
        fields: Vec<FieldDef>,
        implementors: Vec<String>,
    ) -> Self {
        TypeDef {
            fields,
            possible_types: implementors,
            ..Self::empty(TypeKind::Interface, name)
        }
    }

    pub fn union(name: impl Into<String>, members: Vec<String>) -> Self {
        TypeDef {
            possible_types: members,
            ..Self::empty(TypeKind::Union, name)
        }
    }

    pub fn input(name: impl Into<String>, fields: Vec<FieldDef>) -> Self {
        TypeDef {
            input_fields: fields,
            ..Self::empty(TypeKind::Input, name)
        }
    }

    pub fn enumeration(name: impl Into<String>, values: Vec<String>) -> Self {
        TypeDef {
            enum_values: values,
            ..Self::empty(TypeKind::Enum, name)
        }
    }

    pub fn implementing(mut self, interfaces: Vec<String>) -> Self {
        self.interfaces = interfaces;
        self
    }

    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn input_field(&self, name: &str) -> Option<&FieldDef> {
        self.input_fields.iter().find(|f| f.name == name)
    }

    pub fn is_builtin_scalar(&self) -> bool {
        self.kind == TypeKind::Scalar && BUILTIN_SCALARS.contains(&self.name.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperationKind {
    Query,
    Mutation,
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperationKind::Query => "query",
            OperationKind::Mutation => "mutation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub query_type_name: String,
    pub mutation_type_name: Option<String>,
    /// Subscriptions are recorded but never exercised.
    pub subscription_type_name: Option<String>,
    pub types: BTreeMap<String, TypeDef>,
}

impl Schema {
    /// Builds a schema from a list of type definitions.
    pub fn new(
        query_type_name: impl Into<String>,
        mutation_type_name: Option<String>,
        types: impl IntoIterator<Item = TypeDef>,
    ) -> Self {
        Schema {
            query_type_name: query_type_name.into(),
            mutation_type_name,
            subscription_type_name: None,
            types: types.into_iter().map(|t| (t.name.clone(), t)).collect(),
        }
    }

    /// Adds the built-in scalars that are not already declared.
    pub fn with_builtin_scalars(mut self) -> Self {
        for s in BUILTIN_SCALARS {
            self.types
                .entry(s.to_string())
                .or_insert_with(|| TypeDef::scalar(s));
        }
        self
    }

    pub fn get(&self, name: &str) -> Option<&TypeDef> {
        self.types.get(name)
    }

    pub fn kind_of(&self, ty: &TypeRef) -> Option<TypeKind> {
        self.get(ty.base_name()).map(|t| t.kind)
    }

    pub fn root_type(&self, kind: OperationKind) -> Option<&TypeDef> {
        match kind {
            OperationKind::Query => self.get(&self.query_type_name),
            OperationKind::Mutation => self.mutation_type_name.as_deref().and_then(|n| self.get(n)),
        }
    }

    /// All queries followed by all mutations, in declaration order.
    pub fn operations(&self) -> Vec<(OperationKind, &FieldDef)> {
        let mut out = Vec::new();
        for kind in [OperationKind::Query, OperationKind::Mutation] {
            if let Some(root) = self.root_type(kind) {
                out.extend(root.fields.iter().map(|f| (kind, f)));
            }
        }
        out
    }

    pub fn operation(&self, kind: OperationKind, name: &str) -> Option<&FieldDef> {
        self.root_type(kind).and_then(|t| t.field(name))
    }

    /// Concrete object types a value of the named composite type can have.
    pub fn concrete_types(&self, name: &str) -> Vec<&str> {
        match self.get(name) {
            Some(t) if t.kind == TypeKind::Object => vec![t.name.as_str()],
            Some(t) => t.possible_types.iter().map(String::as_str).collect(),
            None => Vec::new(),
        }
    }
}
