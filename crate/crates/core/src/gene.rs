//! Chromosome representation of GraphQL calls.
//!
//! Every query and mutation of a schema gets an [`ActionTemplate`]: the
//! operation name plus a tree of [`Gene`]s for its arguments and for the
//! selection set of its return value. Sampling instantiates a template with
//! random values; internal mutation then changes one gene at a time.
//!
//! Selection sets are [`ObjectGene`]s whose entries are all
//! [`OptionalGene`]s, so a field is selected when its optional is present.
//! Two post-processing steps keep trees printable:
//!
//! * [`exclude_cycles`] deselects and locks every cycle/limit placeholder;
//! * [`repair_selection`] forces at least one selected field in every
//!   active selection set.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::schema::{FieldDef, OperationKind, Schema, TypeKind, TypeRef};

/// Printable basic-Latin characters used for string values.
const PRINTABLE: std::ops::RangeInclusive<u8> = 0x20..=0x7e;

/// Fresh strings are drawn with at most this many characters; mutation can
/// still grow them up to the gene's `max_len`.
const FRESH_STRING_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneError {
    #[error("type `{0}` cannot be modeled as a gene")]
    UnsupportedType(String),
    #[error("selection on `{0}` has no selectable field")]
    NoSelectableField(String),
    #[error("build limits must all be at least 1")]
    InvalidLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildLimits {
    /// Deepest selection-set nesting; the operation's own selection is level 1.
    pub depth_limit: usize,
    pub max_string_len: usize,
    pub max_array_size: usize,
}

impl Default for BuildLimits {
    fn default() -> Self {
        BuildLimits {
            depth_limit: 4,
            max_string_len: 100,
            max_array_size: 5,
        }
    }
}

impl BuildLimits {
    pub fn new(
        depth_limit: usize,
        max_string_len: usize,
        max_array_size: usize,
    ) -> Result<Self, GeneError> {
        if depth_limit == 0 || max_string_len == 0 || max_array_size == 0 {
            return Err(GeneError::InvalidLimits);
        }
        Ok(BuildLimits {
            depth_limit,
            max_string_len,
            max_array_size,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StringGene {
    pub value: String,
    pub max_len: usize,
    /// Values for `ID` arguments favor short digit strings.
    pub id_like: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumGene {
    pub options: Vec<String>,
    pub index: usize,
}

impl EnumGene {
    pub fn active(&self) -> &str {
        &self.options[self.index]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGene {
    pub template: Box<Gene>,
    pub elements: Vec<Gene>,
    pub max_size: usize,
    /// Locked arrays stay empty.
    pub locked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectRole {
    /// An input-object literal in an argument.
    Input,
    /// A selection set on an output type.
    Selection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectGene {
    pub type_name: String,
    pub role: ObjectRole,
    pub fields: Vec<(String, Gene)>,
    /// Inline fragments of an interface or union selection, keyed by the
    /// concrete type name. Each is an optional wrapping a selection.
    pub fragments: Vec<(String, Gene)>,
}

impl ObjectGene {
    fn entries(&self) -> impl Iterator<Item = &Gene> {
        self.fields.iter().chain(&self.fragments).map(|(_, g)| g)
    }

    fn entries_mut(&mut self) -> impl Iterator<Item = &mut Gene> {
        self.fields
            .iter_mut()
            .chain(self.fragments.iter_mut())
            .map(|(_, g)| g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Presence {
    Absent,
    /// Explicit `null`; only for nullable arguments.
    Null,
    Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptionalGene {
    pub presence: Presence,
    /// Whether [`Presence::Null`] is allowed.
    pub nullable: bool,
    /// Locked optionals stay absent.
    pub locked: bool,
    pub inner: Box<Gene>,
}

impl OptionalGene {
    pub fn is_present(&self) -> bool {
        self.presence == Presence::Value
    }
}

/// A field with arguments: the argument genes followed, when the field
/// returns an object, by its selection.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleGene {
    pub elements: Vec<(String, Gene)>,
    pub last_is_selection: bool,
}

impl TupleGene {
    pub fn arguments(&self) -> &[(String, Gene)] {
        if self.last_is_selection {
            &self.elements[..self.elements.len() - 1]
        } else {
            &self.elements
        }
    }

    pub fn selection(&self) -> Option<&Gene> {
        self.last_is_selection
            .then(|| self.elements.last().map(|(_, g)| g))
            .flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gene {
    String(StringGene),
    Enum(EnumGene),
    Int(i32),
    Float(f64),
    Boolean(bool),
    Array(ArrayGene),
    Object(ObjectGene),
    Optional(OptionalGene),
    /// Placeholder for an object type already on the current path.
    Cycle(String),
    /// Placeholder for an object nested deeper than the depth limit.
    Limit(String),
    Tuple(TupleGene),
    /// A scalar or enum field inside a selection set.
    Leaf,
}

impl Gene {
    pub fn is_placeholder(&self) -> bool {
        matches!(self, Gene::Cycle(_) | Gene::Limit(_))
    }

    fn optional(inner: Gene, nullable: bool) -> Gene {
        Gene::Optional(OptionalGene {
            presence: Presence::Absent,
            nullable,
            locked: false,
            inner: Box::new(inner),
        })
    }

    /// Whether a forced selection may choose this selection entry.
    fn can_be_selected(&self) -> bool {
        match self {
            Gene::Optional(o) => !o.locked && selectable(&o.inner),
            _ => false,
        }
    }
}

/// Whether a selection entry's content can produce a non-empty selection.
fn selectable(g: &Gene) -> bool {
    match g {
        Gene::Leaf => true,
        Gene::Cycle(_) | Gene::Limit(_) => false,
        Gene::Object(o) => o.entries().any(Gene::can_be_selected),
        Gene::Tuple(t) => t.selection().map_or(true, selectable),
        Gene::Optional(o) => !o.locked && selectable(&o.inner),
        _ => true,
    }
}

/// Per-operation chromosome; an instantiated copy is a gene tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTemplate {
    pub operation_kind: OperationKind,
    pub operation_name: String,
    pub argument_genes: Vec<(String, Gene)>,
    /// Absent when the operation returns a scalar or enum.
    pub selection_gene: Option<Gene>,
}

/// An instantiated action template.
pub type GeneTree = ActionTemplate;

struct Builder<'a> {
    schema: &'a Schema,
    limits: BuildLimits,
}

impl Builder<'_> {
    fn kind(&self, ty: &TypeRef) -> Result<TypeKind, GeneError> {
        self.schema
            .kind_of(ty)
            .ok_or_else(|| GeneError::UnsupportedType(ty.base_name().to_string()))
    }

    fn arguments(
        &self,
        args: &[crate::schema::InputValue],
    ) -> Result<Vec<(String, Gene)>, GeneError> {
        args.iter()
            .map(|a| {
                let mut ancestors = Vec::new();
                let g = self.input(&a.ty, &mut ancestors)?;
                if g.is_placeholder() {
                    return Err(GeneError::UnsupportedType(a.ty.base_name().to_string()));
                }
                Ok((a.name.clone(), g))
            })
            .collect()
    }

    fn input(&self, ty: &TypeRef, ancestors: &mut Vec<String>) -> Result<Gene, GeneError> {
        match ty {
            TypeRef::NonNull(inner) => self.input_value(inner, ancestors),
            other => Ok(Gene::optional(self.input_value(other, ancestors)?, true)),
        }
    }

    fn input_value(&self, ty: &TypeRef, ancestors: &mut Vec<String>) -> Result<Gene, GeneError> {
        match ty {
            TypeRef::NonNull(inner) => self.input_value(inner, ancestors),
            TypeRef::List(el) => {
                // list elements are never null in generated values
                let template = self.input_value(el.nullable(), ancestors)?;
                Ok(Gene::Array(ArrayGene {
                    template: Box::new(template),
                    elements: Vec::new(),
                    max_size: self.limits.max_array_size,
                    locked: false,
                }))
            }
            TypeRef::Named(name) => {
                let def = self
                    .schema
                    .get(name)
                    .ok_or_else(|| GeneError::UnsupportedType(name.clone()))?;
                match def.kind {
                    TypeKind::Scalar => Ok(match name.as_str() {
                        "Int" => Gene::Int(0),
                        "Float" => Gene::Float(0.0),
                        "Boolean" => Gene::Boolean(false),
                        _ => Gene::String(StringGene {
                            value: String::new(),
                            max_len: self.limits.max_string_len,
                            id_like: name == "ID",
                        }),
                    }),
                    TypeKind::Enum if !def.enum_values.is_empty() => Ok(Gene::Enum(EnumGene {
                        options: def.enum_values.clone(),
                        index: 0,
                    })),
                    TypeKind::Input => {
                        if ancestors.contains(name) {
                            return Ok(Gene::Cycle(name.clone()));
                        }
                        ancestors.push(name.clone());
                        let mut fields = Vec::with_capacity(def.input_fields.len());
                        for f in &def.input_fields {
                            let g = self.input(&f.ty, ancestors)?;
                            if g.is_placeholder() {
                                // a mandatory field that recurses can never be built
                                return Err(GeneError::UnsupportedType(name.clone()));
                            }
                            fields.push((f.name.clone(), g));
                        }
                        ancestors.pop();
                        Ok(Gene::Object(ObjectGene {
                            type_name: name.clone(),
                            role: ObjectRole::Input,
                            fields,
                            fragments: Vec::new(),
                        }))
                    }
                    _ => Err(GeneError::UnsupportedType(name.clone())),
                }
            }
        }
    }

    /// Selection set for a composite type at the given nesting depth.
    fn selection(
        &self,
        type_name: &str,
        depth: usize,
        ancestors: &mut Vec<String>,
    ) -> Result<Gene, GeneError> {
        if depth > self.limits.depth_limit {
            return Ok(Gene::Limit(type_name.to_string()));
        }
        if ancestors.iter().any(|a| a == type_name) {
            return Ok(Gene::Cycle(type_name.to_string()));
        }
        let def = self
            .schema
            .get(type_name)
            .ok_or_else(|| GeneError::UnsupportedType(type_name.to_string()))?;
        if !def.kind.is_composite() {
            return Err(GeneError::UnsupportedType(type_name.to_string()));
        }
        ancestors.push(type_name.to_string());
        let fields = def
            .fields
            .iter()
            .map(|f| Ok((f.name.clone(), self.field(f, depth, ancestors)?)))
            .collect::<Result<Vec<_>, GeneError>>()?;
        let mut fragments = Vec::new();
        if matches!(def.kind, TypeKind::Interface | TypeKind::Union) {
            for concrete in &def.possible_types {
                let inner = if ancestors.contains(concrete) {
                    Gene::Cycle(concrete.clone())
                } else {
                    self.fragment(concrete, &def.fields, depth, ancestors)?
                };
                fragments.push((concrete.clone(), Gene::optional(inner, false)));
            }
        }
        ancestors.pop();

        let obj = ObjectGene {
            type_name: type_name.to_string(),
            role: ObjectRole::Selection,
            fields,
            fragments,
        };
        if !obj.entries().any(Gene::can_be_selected) {
            let cyclic = obj.entries().any(|g| {
                matches!(g, Gene::Optional(o) if matches!(*o.inner, Gene::Cycle(_)))
            });
            return Ok(if cyclic {
                Gene::Cycle(type_name.to_string())
            } else {
                Gene::Limit(type_name.to_string())
            });
        }
        Ok(Gene::Object(obj))
    }

    /// Selection of a concrete type inside `... on T`, minus the fields the
    /// abstract type already offers.
    fn fragment(
        &self,
        concrete: &str,
        shared: &[FieldDef],
        depth: usize,
        ancestors: &mut Vec<String>,
    ) -> Result<Gene, GeneError> {
        let def = self
            .schema
            .get(concrete)
            .ok_or_else(|| GeneError::UnsupportedType(concrete.to_string()))?;
        ancestors.push(concrete.to_string());
        let fields = def
            .fields
            .iter()
            .filter(|f| !shared.iter().any(|s| s.name == f.name))
            .map(|f| Ok((f.name.clone(), self.field(f, depth, ancestors)?)))
            .collect::<Result<Vec<_>, GeneError>>()?;
        ancestors.pop();
        let obj = ObjectGene {
            type_name: concrete.to_string(),
            role: ObjectRole::Selection,
            fields,
            fragments: Vec::new(),
        };
        if !obj.entries().any(Gene::can_be_selected) {
            return Ok(Gene::Limit(concrete.to_string()));
        }
        Ok(Gene::Object(obj))
    }

    /// One entry of a selection set, always wrapped in an optional.
    fn field(
        &self,
        f: &FieldDef,
        depth: usize,
        ancestors: &mut Vec<String>,
    ) -> Result<Gene, GeneError> {
        let kind = self.kind(&f.ty)?;
        let selection = if kind.is_composite() {
            Some(self.selection(f.ty.base_name(), depth + 1, ancestors)?)
        } else {
            None
        };
        let inner = match (f.args.is_empty(), selection) {
            (true, Some(sel)) => sel,
            (true, None) => Gene::Leaf,
            (false, Some(sel)) if sel.is_placeholder() => sel,
            (false, sel) => {
                let mut elements = self.arguments(&f.args)?;
                let last_is_selection = sel.is_some();
                if let Some(sel) = sel {
                    elements.push((String::new(), sel));
                }
                Gene::Tuple(TupleGene {
                    elements,
                    last_is_selection,
                })
            }
        };
        Ok(Gene::optional(inner, false))
    }
}

/// One template per query followed by one per mutation. Operations that
/// cannot be modeled under the limits are skipped with a warning; the call
/// fails only when no operation remains.
pub fn build_action_templates(
    schema: &Schema,
    limits: BuildLimits,
) -> Result<Vec<ActionTemplate>, GeneError> {
    let builder = Builder { schema, limits };
    let mut out = Vec::new();
    let mut first_error = None;
    for (kind, op) in schema.operations() {
        match builder.template(kind, op) {
            Ok(t) => out.push(t),
            Err(e) => {
                log::warn!("skipping {kind} {}: {e}", op.name);
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) if out.is_empty() => Err(e),
        _ => Ok(out),
    }
}

impl Builder<'_> {
    fn template(&self, kind: OperationKind, op: &FieldDef) -> Result<ActionTemplate, GeneError> {
        let root = self.schema.root_type(kind).map(|t| t.name.clone());
        let argument_genes = self.arguments(&op.args)?;
        let selection_gene = if self.kind(&op.ty)?.is_composite() {
            let mut ancestors: Vec<String> = root.into_iter().collect();
            let sel = self.selection(op.ty.base_name(), 1, &mut ancestors)?;
            if sel.is_placeholder() {
                return Err(GeneError::UnsupportedType(op.ty.base_name().to_string()));
            }
            Some(sel)
        } else {
            None
        };
        Ok(ActionTemplate {
            operation_kind: kind,
            operation_name: op.name.clone(),
            argument_genes,
            selection_gene,
        })
    }
}

fn random_char<R: Rng + ?Sized>(rng: &mut R) -> char {
    char::from(rng.gen_range(PRINTABLE))
}

fn fresh_string<R: Rng + ?Sized>(g: &StringGene, rng: &mut R) -> String {
    let cap = g.max_len.min(FRESH_STRING_LEN);
    if g.id_like && rng.gen_bool(0.5) {
        let len = rng.gen_range(1..=cap.min(4));
        return (0..len)
            .map(|_| char::from(b'0' + rng.gen_range(0..10u8)))
            .collect();
    }
    let len = rng.gen_range(0..=cap);
    (0..len).map(|_| random_char(rng)).collect()
}

fn fresh_int<R: Rng + ?Sized>(rng: &mut R) -> i32 {
    if rng.gen_bool(0.5) {
        rng.gen_range(-100..=1000)
    } else {
        rng.gen()
    }
}

fn fresh_float<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.5) {
        rng.gen_range(-1000.0..1000.0)
    } else {
        rng.gen_range(-1.0e9..1.0e9)
    }
}

fn randomize<R: Rng + ?Sized>(g: &mut Gene, rng: &mut R) {
    match g {
        Gene::String(s) => s.value = fresh_string(s, rng),
        Gene::Enum(e) => e.index = rng.gen_range(0..e.options.len()),
        Gene::Int(v) => *v = fresh_int(rng),
        Gene::Float(v) => *v = fresh_float(rng),
        Gene::Boolean(b) => *b = rng.gen(),
        Gene::Array(a) => {
            a.elements.clear();
            if !a.locked {
                let n = rng.gen_range(0..=a.max_size);
                for _ in 0..n {
                    let mut el = (*a.template).clone();
                    randomize(&mut el, rng);
                    a.elements.push(el);
                }
            }
        }
        Gene::Object(o) => o.entries_mut().for_each(|g| randomize(g, rng)),
        Gene::Optional(o) => {
            o.presence = if o.locked {
                Presence::Absent
            } else if rng.gen_bool(0.5) {
                Presence::Value
            } else if o.nullable && rng.gen_bool(0.5) {
                Presence::Null
            } else {
                Presence::Absent
            };
            randomize(&mut o.inner, rng);
        }
        Gene::Tuple(t) => t.elements.iter_mut().for_each(|(_, g)| randomize(g, rng)),
        Gene::Cycle(_) | Gene::Limit(_) | Gene::Leaf => {}
    }
}

fn tree_genes_mut(tree: &mut ActionTemplate) -> impl Iterator<Item = &mut Gene> {
    tree.argument_genes
        .iter_mut()
        .map(|(_, g)| g)
        .chain(tree.selection_gene.iter_mut())
}

/// Instantiates a template with random values. The result has its
/// placeholders excluded and its selections repaired.
pub fn sample<R: Rng + ?Sized>(template: &ActionTemplate, rng: &mut R) -> GeneTree {
    let mut tree = template.clone();
    tree_genes_mut(&mut tree).for_each(|g| randomize(g, rng));
    exclude_cycles(&mut tree);
    repair_selection(&mut tree, rng).expect("templates only hold selectable objects");
    tree
}

fn exclude_gene(g: &mut Gene) {
    match g {
        Gene::Optional(o) => {
            if o.inner.is_placeholder() {
                o.presence = Presence::Absent;
                o.locked = true;
            } else {
                exclude_gene(&mut o.inner);
            }
        }
        Gene::Array(a) => {
            if a.template.is_placeholder() {
                a.elements.clear();
                a.locked = true;
            } else {
                exclude_gene(&mut a.template);
                a.elements.iter_mut().for_each(exclude_gene);
            }
        }
        Gene::Object(o) => o.entries_mut().for_each(exclude_gene),
        Gene::Tuple(t) => t.elements.iter_mut().for_each(|(_, g)| exclude_gene(g)),
        _ => {}
    }
}

/// Deselects and locks every optional wrapping a cycle or limit placeholder,
/// and empties and locks every array of placeholders.
pub fn exclude_cycles(tree: &mut GeneTree) {
    tree_genes_mut(tree).for_each(exclude_gene);
}

fn repair_object<R: Rng + ?Sized>(o: &mut ObjectGene, rng: &mut R) -> Result<(), GeneError> {
    for g in o.entries_mut() {
        if let Gene::Optional(opt) = g {
            if opt.inner.is_placeholder() {
                opt.presence = Presence::Absent;
            }
        }
    }
    let any_selected = o
        .entries()
        .any(|g| matches!(g, Gene::Optional(opt) if opt.is_present()));
    if !any_selected {
        let candidates: Vec<usize> = o
            .entries()
            .enumerate()
            .filter(|(_, g)| g.can_be_selected())
            .map(|(i, _)| i)
            .collect();
        let &pick = candidates
            .choose(rng)
            .ok_or_else(|| GeneError::NoSelectableField(o.type_name.clone()))?;
        if let Some(Gene::Optional(opt)) = o.entries_mut().nth(pick) {
            opt.presence = Presence::Value;
        }
    }
    for g in o.entries_mut() {
        if let Gene::Optional(opt) = g {
            if opt.is_present() {
                repair_selection_content(&mut opt.inner, rng)?;
            }
        }
    }
    Ok(())
}

fn repair_selection_content<R: Rng + ?Sized>(
    g: &mut Gene,
    rng: &mut R,
) -> Result<(), GeneError> {
    match g {
        Gene::Object(o) if o.role == ObjectRole::Selection => repair_object(o, rng),
        Gene::Tuple(t) if t.last_is_selection => match t.elements.last_mut() {
            Some((_, sel)) => repair_selection_content(sel, rng),
            None => Ok(()),
        },
        _ => Ok(()),
    }
}

/// Forces at least one selected field in every active selection set,
/// recursively. Forced picks never choose a placeholder or locked entry.
pub fn repair_selection<R: Rng + ?Sized>(
    tree: &mut GeneTree,
    rng: &mut R,
) -> Result<(), GeneError> {
    match &mut tree.selection_gene {
        Some(sel) => repair_selection_content(sel, rng),
        None => Ok(()),
    }
}

fn is_mutable(g: &Gene) -> bool {
    match g {
        Gene::String(_) | Gene::Int(_) | Gene::Float(_) | Gene::Boolean(_) => true,
        Gene::Enum(e) => e.options.len() > 1,
        Gene::Array(a) => !a.locked,
        Gene::Optional(o) => !o.locked,
        _ => false,
    }
}

/// Children that currently influence the printed call.
fn active_children(g: &mut Gene) -> Vec<&mut Gene> {
    match g {
        Gene::Optional(o) if o.is_present() => vec![&mut *o.inner],
        Gene::Array(a) => a.elements.iter_mut().collect(),
        Gene::Object(o) => o.entries_mut().collect(),
        Gene::Tuple(t) => t.elements.iter_mut().map(|(_, g)| g).collect(),
        _ => Vec::new(),
    }
}

fn count_mutable(g: &Gene) -> usize {
    let own = usize::from(is_mutable(g));
    let children: usize = match g {
        Gene::Optional(o) if o.is_present() => count_mutable(&o.inner),
        Gene::Array(a) => a.elements.iter().map(count_mutable).sum(),
        Gene::Object(o) => o.entries().map(count_mutable).sum(),
        Gene::Tuple(t) => t.elements.iter().map(|(_, g)| count_mutable(g)).sum(),
        _ => 0,
    };
    own + children
}

fn nth_mutable<'a>(g: &'a mut Gene, n: &mut usize) -> Option<&'a mut Gene> {
    if is_mutable(g) {
        if *n == 0 {
            return Some(g);
        }
        *n -= 1;
    }
    for c in active_children(g) {
        if let Some(found) = nth_mutable(c, n) {
            return Some(found);
        }
    }
    None
}

/// Number of genes an internal mutation could currently change.
pub fn mutable_gene_count(tree: &GeneTree) -> usize {
    tree.argument_genes
        .iter()
        .map(|(_, g)| g)
        .chain(tree.selection_gene.iter())
        .map(count_mutable)
        .sum()
}

fn mutate_string<R: Rng + ?Sized>(s: &mut StringGene, rng: &mut R) {
    let len = s.value.chars().count();
    let mut ops = vec![3u8];
    if len > 0 {
        ops.extend([0, 2]);
    }
    if len < s.max_len {
        ops.push(1);
    }
    let mut chars: Vec<char> = s.value.chars().collect();
    match *ops.choose(rng).unwrap() {
        0 => {
            let i = rng.gen_range(0..len);
            let old = chars[i];
            while chars[i] == old {
                chars[i] = random_char(rng);
            }
        }
        1 => {
            let i = rng.gen_range(0..=len);
            chars.insert(i, random_char(rng));
        }
        2 => {
            chars.remove(rng.gen_range(0..len));
        }
        _ => {
            let old = s.value.clone();
            for _ in 0..8 {
                s.value = fresh_string(s, rng);
                if s.value != old {
                    return;
                }
            }
            // fall back to a guaranteed change
            chars = if old.is_empty() {
                vec![random_char(rng)]
            } else {
                old.chars().skip(1).collect()
            };
        }
    }
    s.value = chars.into_iter().collect();
}

fn mutate_gene<R: Rng + ?Sized>(g: &mut Gene, rng: &mut R) {
    match g {
        Gene::Boolean(b) => *b = !*b,
        Gene::Int(v) => {
            let old = *v;
            *v = match rng.gen_range(0..5) {
                0 => old.wrapping_add(1),
                1 => old.wrapping_sub(1),
                2 => old.wrapping_add(10),
                3 => old.wrapping_sub(10),
                _ => fresh_int(rng),
            };
            if *v == old {
                *v = old.wrapping_add(1);
            }
        }
        Gene::Float(v) => {
            let old = *v;
            *v = match rng.gen_range(0..5) {
                0 => old + 1.0,
                1 => old - 1.0,
                2 => old + 10.0,
                3 => old - 10.0,
                _ => fresh_float(rng),
            };
            while *v == old || !v.is_finite() {
                *v = fresh_float(rng);
            }
        }
        Gene::String(s) => mutate_string(s, rng),
        Gene::Enum(e) => {
            let old = e.index;
            while e.index == old {
                e.index = rng.gen_range(0..e.options.len());
            }
        }
        Gene::Array(a) => {
            let can_add = a.elements.len() < a.max_size;
            let can_remove = !a.elements.is_empty();
            if can_add && (!can_remove || rng.gen_bool(0.5)) {
                let mut el = (*a.template).clone();
                randomize(&mut el, rng);
                exclude_gene(&mut el);
                let i = rng.gen_range(0..=a.elements.len());
                a.elements.insert(i, el);
            } else if can_remove {
                let i = rng.gen_range(0..a.elements.len());
                a.elements.remove(i);
            }
        }
        Gene::Optional(o) => {
            let options: Vec<Presence> = [Presence::Absent, Presence::Null, Presence::Value]
                .into_iter()
                .filter(|p| *p != o.presence && (o.nullable || *p != Presence::Null))
                .collect();
            o.presence = *options.choose(rng).unwrap();
        }
        _ => {}
    }
}

/// Changes the value of exactly one uniformly chosen mutable gene, then
/// repairs selections. Returns false when the tree has no mutable gene.
pub fn mutate_internal<R: Rng + ?Sized>(tree: &mut GeneTree, rng: &mut R) -> bool {
    let original = tree.clone();
    for _ in 0..16 {
        let total = mutable_gene_count(tree);
        if total == 0 {
            return false;
        }
        let mut n = rng.gen_range(0..total);
        let target = tree_genes_mut(tree).find_map(|g| nth_mutable(g, &mut n));
        if let Some(g) = target {
            mutate_gene(g, rng);
        }
        repair_selection(tree, rng).expect("mutation keeps selections repairable");
        if *tree != original {
            return true;
        }
    }
    true
}

/// Checks every gene invariant and the selection rule over the active
/// parts of a tree. Returns a description of the first violation.
pub fn check_tree(tree: &GeneTree) -> Result<(), String> {
    fn check(g: &Gene, path: &str, active: bool) -> Result<(), String> {
        match g {
            Gene::String(s) if s.value.chars().count() > s.max_len => {
                Err(format!("{path}: string longer than {}", s.max_len))
            }
            Gene::String(s) if !s.value.bytes().all(|b| PRINTABLE.contains(&b)) => {
                Err(format!("{path}: non-printable string"))
            }
            Gene::Enum(e) if e.index >= e.options.len() => Err(format!("{path}: enum index")),
            Gene::Float(v) if !v.is_finite() => Err(format!("{path}: non-finite float")),
            Gene::Array(a) => {
                if a.elements.len() > a.max_size {
                    return Err(format!("{path}: array larger than {}", a.max_size));
                }
                if a.locked && !a.elements.is_empty() {
                    return Err(format!("{path}: locked array not empty"));
                }
                for (i, e) in a.elements.iter().enumerate() {
                    check(e, &format!("{path}[{i}]"), active)?;
                }
                Ok(())
            }
            Gene::Optional(o) => {
                if o.locked && o.presence != Presence::Absent {
                    return Err(format!("{path}: locked optional selected"));
                }
                if !o.nullable && o.presence == Presence::Null {
                    return Err(format!("{path}: null in non-nullable optional"));
                }
                if o.is_present() && o.inner.is_placeholder() {
                    return Err(format!("{path}: placeholder selected"));
                }
                check(&o.inner, path, active && o.is_present())
            }
            Gene::Object(o) => {
                if active && o.role == ObjectRole::Selection {
                    let n = o
                        .entries()
                        .filter(|g| matches!(g, Gene::Optional(opt) if opt.is_present()))
                        .count();
                    if n == 0 {
                        return Err(format!("{path}: empty selection on {}", o.type_name));
                    }
                }
                for (name, g) in o.fields.iter() {
                    if o.role == ObjectRole::Selection && !matches!(g, Gene::Optional(_)) {
                        return Err(format!("{path}.{name}: selection entry not optional"));
                    }
                    check(g, &format!("{path}.{name}"), active)?;
                }
                for (name, g) in o.fragments.iter() {
                    check(g, &format!("{path}...{name}"), active)?;
                }
                Ok(())
            }
            Gene::Tuple(t) => {
                if t.last_is_selection {
                    match t.elements.last() {
                        Some((_, Gene::Object(o))) if o.role == ObjectRole::Selection => {}
                        _ => return Err(format!("{path}: tuple without trailing selection")),
                    }
                }
                for (name, g) in &t.elements {
                    check(g, &format!("{path}({name})"), active)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
    let op = &tree.operation_name;
    for (name, g) in &tree.argument_genes {
        check(g, &format!("{op}({name})"), true)?;
    }
    if let Some(sel) = &tree.selection_gene {
        check(sel, op, true)?;
    }
    Ok(())
}

/// Dotted paths of selection entries that are locked placeholders, e.g.
/// `pets.owner.pets`. Fragment entries use `...Type`.
pub fn locked_field_paths(tree: &GeneTree) -> Vec<String> {
    fn walk(g: &Gene, path: &str, out: &mut Vec<String>) {
        match g {
            Gene::Object(o) if o.role == ObjectRole::Selection => {
                let named = o
                    .fields
                    .iter()
                    .map(|(n, g)| (n.clone(), g))
                    .chain(o.fragments.iter().map(|(n, g)| (format!("...{n}"), g)));
                for (name, g) in named {
                    let p = format!("{path}.{name}");
                    if let Gene::Optional(opt) = g {
                        if opt.locked {
                            out.push(p);
                        } else {
                            walk(&opt.inner, &p, out);
                        }
                    }
                }
            }
            Gene::Tuple(t) => {
                if let Some(sel) = t.selection() {
                    walk(sel, path, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    if let Some(sel) = &tree.selection_gene {
        walk(sel, &tree.operation_name, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{InputValue, TypeDef};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nn(t: TypeRef) -> TypeRef {
        TypeRef::non_null(t)
    }

    fn named(n: &str) -> TypeRef {
        TypeRef::named(n)
    }

    fn petclinic() -> Schema {
        Schema::new(
            "Query",
            None,
            [
                TypeDef::object(
                    "Query",
                    vec![FieldDef::new("pets", nn(TypeRef::list(nn(named("Pet")))))],
                ),
                TypeDef::object(
                    "Pet",
                    vec![
                        FieldDef::new("id", nn(named("Int"))),
                        FieldDef::new("name", nn(named("String"))),
                        FieldDef::new("owner", nn(named("Owner"))),
                        FieldDef::new("visits", nn(named("VisitConnection"))),
                    ],
                ),
                TypeDef::object(
                    "Owner",
                    vec![
                        FieldDef::new("id", nn(named("Int"))),
                        FieldDef::new("firstName", nn(named("String"))),
                        FieldDef::new("lastName", nn(named("String"))),
                        FieldDef::new("pets", nn(TypeRef::list(nn(named("Pet"))))),
                    ],
                )
                .implementing(vec!["Person".into()]),
                TypeDef::object(
                    "VisitConnection",
                    vec![FieldDef::new("totalCount", nn(named("Int")))],
                ),
            ],
        )
        .with_builtin_scalars()
    }

    fn entry<'a>(g: &'a Gene, name: &str) -> &'a OptionalGene {
        match g {
            Gene::Object(o) => match o.fields.iter().find(|(n, _)| n == name) {
                Some((_, Gene::Optional(opt))) => opt,
                other => panic!("{name}: {other:?}"),
            },
            other => panic!("not an object: {other:?}"),
        }
    }

    fn sel(opt: &Presence) -> Gene {
        Gene::Optional(OptionalGene {
            presence: *opt,
            nullable: false,
            locked: false,
            inner: Box::new(Gene::Leaf),
        })
    }

    #[test]
    fn petclinic_template_has_cycle_back_to_pet() {
        let t = build_action_templates(&petclinic(), BuildLimits::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].operation_name, "pets");
        assert!(t[0].argument_genes.is_empty());
        let root = t[0].selection_gene.as_ref().unwrap();
        let Gene::Object(o) = root else { panic!() };
        let names: Vec<_> = o.fields.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["id", "name", "owner", "visits"]);
        let owner = entry(root, "owner");
        assert_eq!(*entry(&owner.inner, "pets").inner, Gene::Cycle("Pet".into()));
    }

    #[test]
    fn scalar_operation_has_no_selection() {
        let s = Schema::new(
            "Query",
            None,
            [TypeDef::object("Query", vec![FieldDef::new("ping", named("String"))])],
        )
        .with_builtin_scalars();
        let t = build_action_templates(&s, BuildLimits::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t[0].selection_gene.is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tree = sample(&t[0], &mut rng);
        assert!(tree.argument_genes.is_empty());
        assert!(!mutate_internal(&mut tree, &mut rng));
    }

    #[test]
    fn depth_limit_places_limit_gene_at_third_level() {
        let s = Schema::new(
            "Query",
            None,
            [
                TypeDef::object("Query", vec![FieldDef::new("a", named("A"))]),
                TypeDef::object(
                    "A",
                    vec![FieldDef::new("id", named("ID")), FieldDef::new("b", named("B"))],
                ),
                TypeDef::object(
                    "B",
                    vec![FieldDef::new("id", named("ID")), FieldDef::new("a", named("A"))],
                ),
            ],
        )
        .with_builtin_scalars();
        let limits = BuildLimits::new(2, 100, 5).unwrap();
        let t = build_action_templates(&s, limits).unwrap();
        let a = t[0].selection_gene.as_ref().unwrap();
        let b = entry(a, "b");
        assert_eq!(*entry(&b.inner, "a").inner, Gene::Limit("A".into()));
        // with room to spare the same position is a cycle
        let t = build_action_templates(&s, BuildLimits::default()).unwrap();
        let b = entry(t[0].selection_gene.as_ref().unwrap(), "b");
        assert_eq!(*entry(&b.inner, "a").inner, Gene::Cycle("A".into()));
    }

    #[test]
    fn arguments_become_tuples_and_optionals() {
        let s = Schema::new(
            "Query",
            None,
            [
                TypeDef::object(
                    "Query",
                    vec![FieldDef::new("owner", named("Owner")).with_args(vec![
                        InputValue::new("id", nn(named("Int"))),
                        InputValue::new("filter", named("String")),
                    ])],
                ),
                TypeDef::object(
                    "Owner",
                    vec![
                        FieldDef::new("name", named("String")),
                        FieldDef::new("pets", TypeRef::list(named("Owner")))
                            .with_args(vec![InputValue::new("first", named("Int"))]),
                        FieldDef::new("tag", named("String"))
                            .with_args(vec![InputValue::new("upper", nn(named("Boolean")))]),
                    ],
                ),
            ],
        )
        .with_builtin_scalars();
        let t = build_action_templates(&s, BuildLimits::default()).unwrap();
        let args = &t[0].argument_genes;
        assert_eq!(args[0], ("id".into(), Gene::Int(0)));
        assert!(matches!(&args[1].1, Gene::Optional(o) if o.nullable));
        let root = t[0].selection_gene.as_ref().unwrap();
        // pets returns the type being selected: its whole tuple is a cycle
        assert!(entry(root, "pets").inner.is_placeholder());
        match &*entry(root, "tag").inner {
            Gene::Tuple(t) => {
                assert!(!t.last_is_selection);
                assert_eq!(t.elements, vec![("upper".into(), Gene::Boolean(false))]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn object_arguments_are_unsupported() {
        let s = Schema::new(
            "Query",
            None,
            [
                TypeDef::object(
                    "Query",
                    vec![FieldDef::new("x", named("Int"))
                        .with_args(vec![InputValue::new("o", named("Query"))])],
                ),
            ],
        )
        .with_builtin_scalars();
        assert_eq!(
            build_action_templates(&s, BuildLimits::default()),
            Err(GeneError::UnsupportedType("Query".into()))
        );
        assert_eq!(BuildLimits::new(0, 1, 1), Err(GeneError::InvalidLimits));
    }

    #[test]
    fn unbuildable_operations_are_skipped() {
        let s = Schema::new(
            "Query",
            None,
            [TypeDef::object(
                "Query",
                vec![
                    FieldDef::new("bad", named("Int"))
                        .with_args(vec![InputValue::new("o", named("Query"))]),
                    FieldDef::new("good", named("Int")),
                ],
            )],
        )
        .with_builtin_scalars();
        let t = build_action_templates(&s, BuildLimits::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].operation_name, "good");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let t = build_action_templates(&petclinic(), BuildLimits::default()).unwrap();
        let a = sample(&t[0], &mut ChaCha8Rng::seed_from_u64(7));
        let b = sample(&t[0], &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn boolean_mutation_flips() {
        let mut tree = ActionTemplate {
            operation_kind: OperationKind::Query,
            operation_name: "x".into(),
            argument_genes: vec![("b".into(), Gene::Boolean(true))],
            selection_gene: None,
        };
        assert!(mutate_internal(&mut tree, &mut ChaCha8Rng::seed_from_u64(0)));
        assert_eq!(tree.argument_genes[0].1, Gene::Boolean(false));
    }

    #[test]
    fn repair_forces_one_field() {
        let mut tree = ActionTemplate {
            operation_kind: OperationKind::Query,
            operation_name: "pets".into(),
            argument_genes: vec![],
            selection_gene: Some(Gene::Object(ObjectGene {
                type_name: "Pet".into(),
                role: ObjectRole::Selection,
                fields: vec![
                    ("id".into(), sel(&Presence::Absent)),
                    ("name".into(), sel(&Presence::Absent)),
                ],
                fragments: vec![],
            })),
        };
        let before = tree.clone();
        repair_selection(&mut tree, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let root = tree.selection_gene.as_ref().unwrap();
        let on = ["id", "name"]
            .iter()
            .filter(|n| entry(root, n).is_present())
            .count();
        assert_eq!(on, 1);
        let fixed = tree.clone();
        repair_selection(&mut tree, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(tree, fixed);
        assert_ne!(before, fixed);
    }

    #[test]
    fn repair_never_picks_placeholders() {
        let owner = Gene::Object(ObjectGene {
            type_name: "Owner".into(),
            role: ObjectRole::Selection,
            fields: vec![
                ("firstName".into(), sel(&Presence::Absent)),
                ("lastName".into(), sel(&Presence::Absent)),
                (
                    "pets".into(),
                    Gene::Optional(OptionalGene {
                        presence: Presence::Absent,
                        nullable: false,
                        locked: true,
                        inner: Box::new(Gene::Cycle("Pet".into())),
                    }),
                ),
            ],
            fragments: vec![],
        });
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..50 {
            let mut tree = ActionTemplate {
                operation_kind: OperationKind::Query,
                operation_name: "pets".into(),
                argument_genes: vec![],
                selection_gene: Some(Gene::Object(ObjectGene {
                    type_name: "Pet".into(),
                    role: ObjectRole::Selection,
                    fields: vec![(
                        "owner".into(),
                        Gene::Optional(OptionalGene {
                            presence: Presence::Value,
                            nullable: false,
                            locked: false,
                            inner: Box::new(owner.clone()),
                        }),
                    )],
                    fragments: vec![],
                })),
            };
            repair_selection(&mut tree, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let o = &entry(tree.selection_gene.as_ref().unwrap(), "owner").inner;
            let picked: Vec<_> = ["firstName", "lastName", "pets"]
                .into_iter()
                .filter(|n| entry(o, n).is_present())
                .collect();
            assert_eq!(picked.len(), 1);
            seen.insert(picked[0]);
        }
        // both legal outcomes occur, the cycle never does
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), ["firstName", "lastName"]);
    }

    #[test]
    fn repair_fails_without_selectable_field() {
        let mut tree = ActionTemplate {
            operation_kind: OperationKind::Query,
            operation_name: "a".into(),
            argument_genes: vec![],
            selection_gene: Some(Gene::Object(ObjectGene {
                type_name: "A".into(),
                role: ObjectRole::Selection,
                fields: vec![(
                    "self".into(),
                    Gene::Optional(OptionalGene {
                        presence: Presence::Absent,
                        nullable: false,
                        locked: false,
                        inner: Box::new(Gene::Cycle("A".into())),
                    }),
                )],
                fragments: vec![],
            })),
        };
        assert_eq!(
            repair_selection(&mut tree, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(GeneError::NoSelectableField("A".into()))
        );
    }

    #[test]
    fn exclusion_locks_cycle_branches() {
        let t = build_action_templates(&petclinic(), BuildLimits::default()).unwrap();
        let mut tree = t[0].clone();
        // force owner.pets on before exclusion
        if let Some(Gene::Object(o)) = &mut tree.selection_gene {
            if let Gene::Optional(owner) = &mut o.fields[2].1 {
                owner.presence = Presence::Value;
                if let Gene::Object(oo) = &mut *owner.inner {
                    if let Gene::Optional(p) = &mut oo.fields[3].1 {
                        p.presence = Presence::Value;
                    }
                }
            }
        }
        exclude_cycles(&mut tree);
        let owner = entry(tree.selection_gene.as_ref().unwrap(), "owner");
        let pets = entry(&owner.inner, "pets");
        assert!(pets.locked);
        assert_eq!(pets.presence, Presence::Absent);
        assert_eq!(locked_field_paths(&tree), vec!["pets.owner.pets"]);

        let mut plain = ActionTemplate {
            operation_kind: OperationKind::Query,
            operation_name: "x".into(),
            argument_genes: vec![("n".into(), Gene::Int(4))],
            selection_gene: None,
        };
        let before = plain.clone();
        exclude_cycles(&mut plain);
        assert_eq!(plain, before);
    }

    #[test]
    fn arrays_of_cycles_are_locked_empty() {
        let mut tree = ActionTemplate {
            operation_kind: OperationKind::Mutation,
            operation_name: "m".into(),
            argument_genes: vec![(
                "xs".into(),
                Gene::Array(ArrayGene {
                    template: Box::new(Gene::Cycle("In".into())),
                    elements: vec![Gene::Cycle("In".into())],
                    max_size: 5,
                    locked: false,
                }),
            )],
            selection_gene: None,
        };
        exclude_cycles(&mut tree);
        let Gene::Array(a) = &tree.argument_genes[0].1 else { panic!() };
        assert!(a.locked && a.elements.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(!mutate_internal(&mut tree, &mut rng));
    }

    #[test]
    fn mutation_chains_keep_invariants() {
        let t = build_action_templates(&petclinic(), BuildLimits::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut tree = sample(&t[0], &mut rng);
            check_tree(&tree).unwrap();
            let locked = locked_field_paths(&tree);
            for _ in 0..100 {
                let before = tree.clone();
                assert!(mutate_internal(&mut tree, &mut rng));
                assert_ne!(tree, before);
                check_tree(&tree).unwrap();
                assert_eq!(locked_field_paths(&tree), locked);
            }
        }
    }

    #[test]
    fn string_mutation_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = StringGene {
            value: String::new(),
            max_len: 3,
            id_like: false,
        };
        for _ in 0..500 {
            let old = s.value.clone();
            mutate_string(&mut s, &mut rng);
            assert_ne!(s.value, old);
            assert!(s.value.chars().count() <= 3);
        }
    }
}
