//! Renders gene trees as compact GraphQL documents with inlined literals.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gene::{Gene, GeneTree, ObjectGene, Presence};
use crate::schema::OperationKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestBody {
    pub query_text: String,
    pub operation_kind: OperationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrintError {
    #[error("selection on `{0}` has no selected field")]
    EmptySelection(String),
}

/// Quotes a string as a GraphQL string literal.
pub fn string_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn float_literal(v: f64) -> String {
    // Debug output round-trips and always has a `.` or an exponent
    let s = format!("{v:?}");
    if s.contains(['.', 'e']) {
        s
    } else {
        format!("{s}.0")
    }
}

/// Writes an input value; returns false when the gene renders nothing.
fn value(g: &Gene, out: &mut String) -> bool {
    match g {
        Gene::String(s) => out.push_str(&string_literal(&s.value)),
        Gene::Enum(e) => out.push_str(e.active()),
        Gene::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Gene::Float(v) => out.push_str(&float_literal(*v)),
        Gene::Boolean(b) => out.push_str(if *b { "true" } else { "false" }),
        Gene::Array(a) => {
            out.push('[');
            let mut first = true;
            for el in &a.elements {
                let mark = out.len();
                if !first {
                    out.push(',');
                }
                if value(el, out) {
                    first = false;
                } else {
                    out.truncate(mark);
                }
            }
            out.push(']');
        }
        Gene::Object(o) => {
            out.push('{');
            arguments_body(&o.fields, out);
            out.push('}');
        }
        Gene::Optional(o) => match o.presence {
            Presence::Absent => return false,
            Presence::Null => out.push_str("null"),
            Presence::Value => return value(&o.inner, out),
        },
        Gene::Cycle(_) | Gene::Limit(_) | Gene::Leaf | Gene::Tuple(_) => return false,
    }
    true
}

/// `name:value` pairs separated by commas, skipping absent optionals.
fn arguments_body(args: &[(String, Gene)], out: &mut String) -> usize {
    let mut n = 0;
    for (name, g) in args {
        let mark = out.len();
        if n > 0 {
            out.push(',');
        }
        let _ = write!(out, "{name}:");
        if value(g, out) {
            n += 1;
        } else {
            out.truncate(mark);
        }
    }
    n
}

fn arguments(args: &[(String, Gene)], out: &mut String) {
    let mark = out.len();
    out.push('(');
    if arguments_body(args, out) == 0 {
        out.truncate(mark);
    } else {
        out.push(')');
    }
}

fn selection_set(o: &ObjectGene, out: &mut String) -> Result<(), PrintError> {
    out.push('{');
    let mut n = 0;
    for (name, g) in &o.fields {
        let Gene::Optional(opt) = g else { continue };
        if !opt.is_present() {
            continue;
        }
        if n > 0 {
            out.push(',');
        }
        out.push_str(name);
        field_content(&opt.inner, out)?;
        n += 1;
    }
    for (type_name, g) in &o.fragments {
        let Gene::Optional(opt) = g else { continue };
        if !opt.is_present() {
            continue;
        }
        if n > 0 {
            out.push(',');
        }
        let _ = write!(out, "... on {type_name}");
        field_content(&opt.inner, out)?;
        n += 1;
    }
    if n == 0 {
        return Err(PrintError::EmptySelection(o.type_name.clone()));
    }
    out.push('}');
    Ok(())
}

/// Whatever follows a field name: arguments and/or a selection set.
fn field_content(g: &Gene, out: &mut String) -> Result<(), PrintError> {
    match g {
        Gene::Object(o) => selection_set(o, out),
        Gene::Tuple(t) => {
            arguments(t.arguments(), out);
            match t.selection() {
                Some(sel) => field_content(sel, out),
                None => Ok(()),
            }
        }
        _ => Ok(()),
    }
}

/// Renders the operation call for one action.
pub fn print(action: &GeneTree) -> Result<RequestBody, PrintError> {
    let mut out = String::new();
    if action.operation_kind == OperationKind::Mutation {
        out.push_str("mutation");
    }
    out.push('{');
    out.push_str(&action.operation_name);
    arguments(&action.argument_genes, &mut out);
    if let Some(sel) = &action.selection_gene {
        field_content(sel, &mut out)?;
    }
    out.push('}');
    Ok(RequestBody {
        query_text: out,
        operation_kind: action.operation_kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gene::{ArrayGene, EnumGene, ObjectRole, OptionalGene, StringGene, TupleGene};
    use crate::validator::{parse_string_literal, validate_query_text};

    fn present(inner: Gene) -> Gene {
        Gene::Optional(OptionalGene {
            presence: Presence::Value,
            nullable: false,
            locked: false,
            inner: Box::new(inner),
        })
    }

    fn absent(inner: Gene) -> Gene {
        Gene::Optional(OptionalGene {
            presence: Presence::Absent,
            nullable: true,
            locked: false,
            inner: Box::new(inner),
        })
    }

    fn selection(type_name: &str, fields: Vec<(&str, Gene)>) -> Gene {
        Gene::Object(ObjectGene {
            type_name: type_name.into(),
            role: ObjectRole::Selection,
            fields: fields.into_iter().map(|(n, g)| (n.into(), g)).collect(),
            fragments: vec![],
        })
    }

    #[test]
    fn remove_specialty_mutation() {
        let tree = GeneTree {
            operation_kind: OperationKind::Mutation,
            operation_name: "removeSpecialty".into(),
            argument_genes: vec![(
                "input".into(),
                Gene::Object(ObjectGene {
                    type_name: "RemoveSpecialtyInput".into(),
                    role: ObjectRole::Input,
                    fields: vec![("specialtyId".into(), Gene::Int(643))],
                    fragments: vec![],
                }),
            )],
            selection_gene: Some(selection(
                "RemoveSpecialtyPayload",
                vec![(
                    "specialties",
                    present(selection(
                        "Specialty",
                        vec![("id", present(Gene::Leaf)), ("name", absent(Gene::Leaf))],
                    )),
                )],
            )),
        };
        assert_eq!(
            print(&tree).unwrap().query_text,
            "mutation{removeSpecialty(input:{specialtyId:643}){specialties{id}}}"
        );
    }

    #[test]
    fn scalar_query_has_no_braces() {
        let tree = GeneTree {
            operation_kind: OperationKind::Query,
            operation_name: "ping".into(),
            argument_genes: vec![],
            selection_gene: None,
        };
        assert_eq!(print(&tree).unwrap().query_text, "{ping}");
    }

    #[test]
    fn literals_nulls_tuples_and_fragments() {
        let mut null = absent(Gene::Int(1));
        if let Gene::Optional(o) = &mut null {
            o.presence = Presence::Null;
        }
        let tree = GeneTree {
            operation_kind: OperationKind::Query,
            operation_name: "search".into(),
            argument_genes: vec![
                (
                    "s".into(),
                    Gene::String(StringGene {
                        value: "a\"b\\".into(),
                        max_len: 10,
                        id_like: false,
                    }),
                ),
                ("skip".into(), absent(Gene::Int(3))),
                ("n".into(), null),
                (
                    "c".into(),
                    Gene::Enum(EnumGene {
                        options: vec!["RED".into(), "BLUE".into()],
                        index: 1,
                    }),
                ),
                (
                    "xs".into(),
                    Gene::Array(ArrayGene {
                        template: Box::new(Gene::Float(0.0)),
                        elements: vec![Gene::Float(1.0), Gene::Float(-2.5e300)],
                        max_size: 5,
                        locked: false,
                    }),
                ),
            ],
            selection_gene: Some(Gene::Object(ObjectGene {
                type_name: "Item".into(),
                role: ObjectRole::Selection,
                fields: vec![
                    ("id".into(), present(Gene::Leaf)),
                    (
                        "tag".into(),
                        present(Gene::Tuple(TupleGene {
                            elements: vec![("upper".into(), Gene::Boolean(true))],
                            last_is_selection: false,
                        })),
                    ),
                    (
                        "owner".into(),
                        present(Gene::Tuple(TupleGene {
                            elements: vec![
                                ("first".into(), absent(Gene::Int(2))),
                                ("".into(), selection("Owner", vec![("name", present(Gene::Leaf))])),
                            ],
                            last_is_selection: true,
                        })),
                    ),
                ],
                fragments: vec![(
                    "Book".into(),
                    present(selection("Book", vec![("isbn", present(Gene::Leaf))])),
                )],
            })),
        };
        let text = print(&tree).unwrap().query_text;
        assert_eq!(
            text,
            r#"{search(s:"a\"b\\",n:null,c:BLUE,xs:[1.0,-2.5e300]){id,tag(upper:true),owner{name},... on Book{isbn}}}"#
        );
        assert_eq!(validate_query_text(&text), Ok(()));
    }

    #[test]
    fn empty_selection_is_an_error() {
        let tree = GeneTree {
            operation_kind: OperationKind::Query,
            operation_name: "pets".into(),
            argument_genes: vec![],
            selection_gene: Some(selection("Pet", vec![("id", absent(Gene::Leaf))])),
        };
        assert_eq!(print(&tree), Err(PrintError::EmptySelection("Pet".into())));
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.0, -0.0, 1.0, 0.1, 1e21, 1.5e-7, f64::MAX, f64::MIN_POSITIVE] {
            let s = float_literal(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            assert_eq!(validate_query_text(&format!("{{a(f:{s})}}")), Ok(()), "{s}");
        }
    }

    #[test]
    fn control_characters_are_escaped() {
        let s = "\u{1}\u{7f}\t\n";
        assert_eq!(parse_string_literal(&string_literal(s)).unwrap(), s);
    }
}
