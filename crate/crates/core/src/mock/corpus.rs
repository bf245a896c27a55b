//! The built-in mock services.

use serde_json::json;

use super::spec::{CoverageRule, FaultScript, FaultScriptKind, Resolver, SutSpec, Trigger, UnitCondition};
use crate::schema::{FieldDef, InputValue, Schema, TypeDef, TypeRef};

fn named(n: &str) -> TypeRef {
    TypeRef::named(n)
}

fn nn(t: TypeRef) -> TypeRef {
    TypeRef::non_null(t)
}

fn nn_named(n: &str) -> TypeRef {
    nn(named(n))
}

fn nn_list(n: &str) -> TypeRef {
    nn(TypeRef::list(nn_named(n)))
}

fn field(name: &str, ty: TypeRef) -> FieldDef {
    FieldDef::new(name, ty)
}

fn arg(name: &str, ty: TypeRef) -> InputValue {
    InputValue::new(name, ty)
}

fn path(segments: &[&str]) -> Vec<String> {
    segments.iter().map(|s| s.to_string()).collect()
}

fn strings(names: &[&str]) -> Vec<String> {
    path(names)
}

fn rule(unit: &str, op: &str, condition: UnitCondition) -> CoverageRule {
    CoverageRule {
        unit: unit.into(),
        op: op.into(),
        condition,
    }
}

fn called(op: &str) -> CoverageRule {
    rule(&format!("{op}/called"), op, UnitCondition::Called)
}

fn selected(op: &str, segments: &[&str]) -> CoverageRule {
    rule(
        &format!("{op}/sel/{}", segments.join(".")),
        op,
        UnitCondition::Selected { path: path(segments) },
    )
}

/// The pet clinic schema exactly as in the introductory listing.
pub fn petclinic_schema() -> Schema {
    let person_fields = || {
        vec![
            field("id", nn_named("Int")),
            field("firstName", nn_named("String")),
            field("lastName", nn_named("String")),
        ]
    };
    let mut owner_fields = person_fields();
    owner_fields.push(field("pets", nn_list("Pet")));
    Schema::new(
        "Query",
        None,
        [
            TypeDef::object("Query", vec![field("pets", nn_list("Pet"))]),
            TypeDef::object(
                "Pet",
                vec![
                    field("id", nn_named("Int")),
                    field("name", nn_named("String")),
                    field("owner", nn_named("Owner")),
                    field("visits", nn_named("VisitConnection")),
                ],
            ),
            TypeDef::object("Owner", owner_fields).implementing(strings(&["Person"])),
            TypeDef::object("VisitConnection", vec![field("totalCount", nn_named("Int"))]),
            TypeDef::interface("Person", person_fields(), strings(&["Owner"])),
        ],
    )
    .with_builtin_scalars()
}

/// Pet clinic with two seeded faults on `pets`: a stack trace leak whenever
/// visits are selected, and a null owner last name.
pub fn petclinic() -> SutSpec {
    let mut spec = SutSpec::new("petclinic", petclinic_schema());
    spec.faults = vec![
        FaultScript {
            kind: FaultScriptKind::StackTraceLeak { op: "pets".into() },
            trigger: Trigger::Selected { path: path(&["visits"]) },
        },
        FaultScript {
            kind: FaultScriptKind::NullForNonNull {
                path: path(&["pets", "owner", "lastName"]),
            },
            trigger: Trigger::Selected {
                path: path(&["owner", "lastName"]),
            },
        },
    ];
    spec.coverage = vec![
        called("pets"),
        selected("pets", &["owner"]),
        selected("pets", &["visits"]),
        selected("pets", &["owner", "pets"]),
    ];
    spec
}

/// Levels of the deep-nesting service; the last level has no `next`.
pub const DEEP_LEVELS: usize = 4;
/// Scalar fields per level.
pub const DEEP_WIDTH: usize = 12;

/// `explore` returns a chain of levels. Unit `explore/d{d}/k{k}` is hit when
/// at least `k` scalar fields are selected at depth `d`, so the hard units
/// need wide selections deep in the tree.
pub fn deep_nesting() -> SutSpec {
    let mut types = vec![TypeDef::object("Query", vec![field("explore", nn_named("Level1"))])];
    for level in 1..=DEEP_LEVELS {
        let mut fields: Vec<FieldDef> = (1..=DEEP_WIDTH)
            .map(|i| field(&format!("f{i}"), nn_named("Int")))
            .collect();
        if level < DEEP_LEVELS {
            fields.push(field("next", nn_named(&format!("Level{}", level + 1))));
        }
        types.push(TypeDef::object(format!("Level{level}"), fields));
    }
    let mut spec = SutSpec::new("deep-nesting", Schema::new("Query", None, types).with_builtin_scalars());
    for d in 1..=DEEP_LEVELS {
        for k in 1..=DEEP_WIDTH {
            spec.coverage.push(rule(
                &format!("explore/d{d}/k{k}"),
                "explore",
                UnitCondition::LeafCountAtLeast {
                    path: vec!["next".to_string(); d - 1],
                    min: k,
                },
            ));
        }
    }
    spec
}

/// Mutually recursive `A` and `B` objects plus a recursive `Filter` input.
pub fn recursive() -> SutSpec {
    let schema = Schema::new(
        "Query",
        None,
        [
            TypeDef::object(
                "Query",
                vec![
                    field("a", named("A")).with_args(vec![arg("where", named("Filter"))]),
                    field("b", nn_named("B")),
                ],
            ),
            TypeDef::object(
                "A",
                vec![
                    field("id", nn_named("ID")),
                    field("name", named("String")),
                    field("b", named("B")),
                    field("bs", TypeRef::list(nn_named("B"))),
                ],
            ),
            TypeDef::object(
                "B",
                vec![
                    field("id", nn_named("ID")),
                    field("a", nn_named("A")),
                    field("as", nn_list("A")),
                ],
            ),
            TypeDef::input(
                "Filter",
                vec![
                    field("and", TypeRef::list(nn_named("Filter"))),
                    field("not", named("Filter")),
                    field("name", named("String")),
                ],
            ),
        ],
    )
    .with_builtin_scalars();
    let mut spec = SutSpec::new("recursive", schema);
    spec.coverage = vec![
        called("a"),
        called("b"),
        selected("a", &["b"]),
        selected("b", &["a"]),
        selected("b", &["a", "bs"]),
        rule(
            "a/arg/where.not",
            "a",
            UnitCondition::Trigger(Trigger::ArgPresent {
                path: path(&["where", "not"]),
            }),
        ),
    ];
    spec
}

/// Enum, union, interface, input objects, fields with arguments and a custom
/// scalar, with three seeded faults.
pub fn kitchen_sink() -> SutSpec {
    let node_fields = || vec![field("id", nn_named("ID"))];
    let schema = Schema::new(
        "Query",
        Some("Mutation".into()),
        [
            TypeDef::object(
                "Query",
                vec![
                    field("book", named("Book")).with_args(vec![arg("id", nn_named("ID"))]),
                    field("node", named("Node")).with_args(vec![arg("id", nn_named("ID"))]),
                    field("search", nn_list("SearchResult")).with_args(vec![
                        arg("filter", named("BookFilter")),
                        arg("first", named("Int")),
                    ]),
                    field("theme", named("Theme"))
                        .with_args(vec![arg("conferenceId", nn_named("String"))]),
                ],
            ),
            TypeDef::object(
                "Mutation",
                vec![
                    field("addBook", nn_named("Book"))
                        .with_args(vec![arg("input", nn_named("BookInput"))]),
                    field("removeSpecialty", named("RemoveSpecialtyPayload"))
                        .with_args(vec![arg("input", nn_named("RemoveSpecialtyInput"))]),
                    field("rejectBook", named("Book")).with_args(vec![arg("id", nn_named("ID"))]),
                ],
            ),
            TypeDef::scalar("DateTime"),
            TypeDef::enumeration("Color", strings(&["RED", "GREEN", "BLUE"])),
            TypeDef::interface("Node", node_fields(), strings(&["Book", "Author"])),
            TypeDef::union("SearchResult", strings(&["Book", "Author"])),
            TypeDef::object(
                "Book",
                vec![
                    field("id", nn_named("ID")),
                    field("title", nn_named("String")),
                    field("color", named("Color")),
                    field("published", named("DateTime")),
                    field("author", nn_named("Author")),
                    field("related", nn_list("Book")).with_args(vec![arg("limit", named("Int"))]),
                    field("summary", named("String"))
                        .with_args(vec![arg("maxLength", nn_named("Int"))]),
                ],
            )
            .implementing(strings(&["Node"])),
            TypeDef::object(
                "Author",
                vec![
                    field("id", nn_named("ID")),
                    field("name", nn_named("String")),
                    field("books", nn_list("Book")),
                ],
            )
            .implementing(strings(&["Node"])),
            TypeDef::object(
                "Theme",
                vec![
                    field("name", nn_named("String")),
                    field("conferenceId", nn_named("String")),
                ],
            ),
            TypeDef::input(
                "BookFilter",
                vec![
                    field("color", named("Color")),
                    field("titleContains", named("String")),
                    field("publishedAfter", named("DateTime")),
                ],
            ),
            TypeDef::input(
                "BookInput",
                vec![
                    field("title", nn_named("String")),
                    field("color", nn_named("Color")),
                    field("authorId", nn_named("ID")),
                ],
            ),
            TypeDef::input("RemoveSpecialtyInput", vec![field("specialtyId", nn_named("Int"))]),
            TypeDef::object(
                "RemoveSpecialtyPayload",
                vec![field("specialties", nn_list("Specialty"))],
            ),
            TypeDef::object(
                "Specialty",
                vec![field("id", nn_named("Int")), field("name", nn_named("String"))],
            ),
        ],
    )
    .with_builtin_scalars();
    let mut spec = SutSpec::new("kitchen-sink", schema);
    spec.resolvers = vec![(
        "rejectBook".into(),
        Resolver::UserError {
            message: "Book cannot be rejected".into(),
        },
    )];
    spec.faults = vec![
        FaultScript {
            kind: FaultScriptKind::Status500OnUserError {
                op: "theme".into(),
                message: "Conference id did not match series".into(),
            },
            trigger: Trigger::ArgNotIn {
                path: path(&["conferenceId"]),
                values: vec![json!("react-finland-2019")],
            },
        },
        FaultScript {
            kind: FaultScriptKind::HtmlErrorPage { op: "search".into() },
            trigger: Trigger::ArgPresent { path: path(&["filter"]) },
        },
        FaultScript {
            kind: FaultScriptKind::CrashOnMissingId {
                op: "removeSpecialty".into(),
            },
            trigger: Trigger::ArgNotIn {
                path: path(&["input", "specialtyId"]),
                values: vec![json!(1), json!(2), json!(3)],
            },
        },
    ];
    spec.coverage = vec![
        called("book"),
        called("node"),
        called("search"),
        called("theme"),
        called("addBook"),
        called("removeSpecialty"),
        called("rejectBook"),
        selected("book", &["related"]),
        selected("book", &["summary"]),
        selected("book", &["author", "books"]),
        rule(
            "search/arg/first",
            "search",
            UnitCondition::Trigger(Trigger::ArgPresent { path: path(&["first"]) }),
        ),
    ];
    spec
}

/// A public-transport shaped service whose parking space location latitude
/// comes back null for unknown ids.
pub fn bahnql() -> SutSpec {
    let schema = Schema::new(
        "Query",
        None,
        [
            TypeDef::object(
                "Query",
                vec![
                    field("parkingSpace", named("ParkingSpace"))
                        .with_args(vec![arg("id", nn_named("Int"))]),
                    field("stationWithEvaId", named("Station"))
                        .with_args(vec![arg("evaId", nn_named("Int"))]),
                ],
            ),
            TypeDef::object(
                "ParkingSpace",
                vec![
                    field("id", nn_named("Int")),
                    field("name", named("String")),
                    field("location", nn_named("Location")),
                ],
            ),
            TypeDef::object(
                "Location",
                vec![
                    field("latitude", nn_named("Float")),
                    field("longitude", nn_named("Float")),
                ],
            ),
            TypeDef::object(
                "Station",
                vec![
                    field("name", nn_named("String")),
                    field("city", named("String")),
                    field("location", named("Location")),
                ],
            ),
        ],
    )
    .with_builtin_scalars();
    let mut spec = SutSpec::new("bahnql", schema);
    spec.faults = vec![FaultScript {
        kind: FaultScriptKind::NullForNonNull {
            path: path(&["parkingSpace", "location", "latitude"]),
        },
        trigger: Trigger::ArgNotIn {
            path: path(&["id"]),
            values: vec![json!(1), json!(2), json!(3)],
        },
    }];
    spec.coverage = vec![
        called("parkingSpace"),
        called("stationWithEvaId"),
        selected("parkingSpace", &["location"]),
        selected("stationWithEvaId", &["location"]),
    ];
    spec
}

/// Every built-in service, in a fixed order.
pub fn corpus() -> Vec<SutSpec> {
    vec![petclinic(), deep_nesting(), recursive(), kitchen_sink(), bahnql()]
}

/// Looks up a built-in service by its name.
pub fn by_name(name: &str) -> Option<SutSpec> {
    corpus().into_iter().find(|s| s.name == name)
}

pub fn names() -> Vec<String> {
    corpus().into_iter().map(|s| s.name).collect()
}
