//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gqlfuzz::executor::{CoverageFeed, ExecConfig, Executor, HttpExecutor, RawReply, TransportError};
use gqlfuzz::gene::{
    build_action_templates, check_tree, mutate_internal, sample, BuildLimits, Gene, GeneTree,
};
use gqlfuzz::mock::{corpus, InProcessMock, MockServer, SutSpec};
use gqlfuzz::printer::{print, RequestBody};
use gqlfuzz::report::{endpoint_stats, read_suite, replay, write_suite, EndpointStats, SuiteArchive};
use gqlfuzz::schema::{FieldDef, OperationKind, Schema, TypeDef, TypeRef};
use gqlfuzz::search::{run, Algorithm, Archive, ArchivedTest, Problem, SearchConfig, TestCase};
use gqlfuzz::targets::{
    CallRecord, Classifier, EvalContext, FaultKind, OpRef, ResponseClassification, TargetId,
    TargetRegistry,
};
use gqlfuzz::validator::{parse_document, selection_depth, validate_query_text, Document, Selection};

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("query validity", criterion_1),
        ("selection, cycle and depth invariants", criterion_2),
        ("fault-oracle fidelity", criterion_3),
        ("MIO vs random on deep nesting", criterion_4),
        ("black-box fault discovery", criterion_5),
        ("endpoint statistics exactness", criterion_6),
        ("determinism and replay", criterion_7),
        ("budget accounting", criterion_8),
        ("rate limiter", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} [{name}]: PASS ({detail}; {secs:.1} s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} [{name}]: FAIL ({detail}; {secs:.1} s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1 and 2

const GENOTYPES: usize = 10_000;

/// `GENOTYPES` sampled-then-mutated genotypes spread evenly over the corpus.
fn corpus_genotypes(limits: BuildLimits) -> Vec<(Schema, GeneTree)> {
    let specs = corpus::corpus();
    let per_spec = GENOTYPES / specs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::with_capacity(GENOTYPES);
    for spec in &specs {
        let templates = build_action_templates(&spec.schema, limits).expect("corpus builds");
        for i in 0..per_spec {
            let mut tree = sample(&templates[i % templates.len()], &mut rng);
            for _ in 0..rng.gen_range(1..=5) {
                mutate_internal(&mut tree, &mut rng);
            }
            out.push((spec.schema.clone(), tree));
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let genotypes = corpus_genotypes(BuildLimits::default());
    let mut valid = 0;
    let mut first_bad = None;
    for (_, tree) in &genotypes {
        let ok = print(tree)
            .ok()
            .is_some_and(|b| validate_query_text(&b.query_text).is_ok());
        if ok {
            valid += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!("{:?}", print(tree)));
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("{valid}/{} valid", genotypes.len());
    if genotypes.len() != GENOTYPES || valid != GENOTYPES {
        return Err(format!("{detail}; first invalid: {first_bad:?}"));
    }
    if elapsed >= Duration::from_secs(60) {
        return Err(format!("{detail} but took {elapsed:?}"));
    }
    Ok(detail)
}

/// Object types entered along every printed field path, starting with the
/// root type. A repeated type means a cycle was followed.
fn repeated_type(schema: &Schema, doc: &Document, kind: OperationKind) -> Option<String> {
    fn walk(
        schema: &Schema,
        type_name: &str,
        set: &[Selection],
        path: &mut Vec<String>,
    ) -> Option<String> {
        for s in set {
            match s {
                Selection::Field(f) if !f.selection_set.is_empty() => {
                    let field_type = schema
                        .get(type_name)
                        .and_then(|t| t.field(&f.name))
                        .map(|d| d.ty.base_name().to_string())?;
                    if path.contains(&field_type) {
                        return Some(format!("{} -> {field_type}", path.join(".")));
                    }
                    path.push(field_type.clone());
                    let r = walk(schema, &field_type, &f.selection_set, path);
                    path.pop();
                    if r.is_some() {
                        return r;
                    }
                }
                Selection::InlineFragment {
                    type_condition,
                    selection_set,
                    ..
                } => {
                    let t = type_condition.as_deref().unwrap_or(type_name);
                    if let Some(r) = walk(schema, t, selection_set, path) {
                        return Some(r);
                    }
                }
                _ => {}
            }
        }
        None
    }
    let root = schema.root_type(kind)?.name.clone();
    walk(schema, &root, &doc.operations[0].selection_set, &mut vec![root.clone()])
}

fn has_empty_selection(set: &[Selection]) -> bool {
    set.is_empty()
        || set.iter().any(|s| match s {
            Selection::Field(f) => {
                !f.selection_set.is_empty() && has_empty_selection(&f.selection_set)
            }
            Selection::InlineFragment { selection_set, .. } => has_empty_selection(selection_set),
            Selection::FragmentSpread { .. } => false,
        })
}

fn criterion_2() -> Outcome {
    let limits = BuildLimits::default();
    let genotypes = corpus_genotypes(limits);
    let mut violations: BTreeMap<&str, usize> = BTreeMap::new();
    let mut example = None;
    for (schema, tree) in &genotypes {
        let mut flag = |what: &'static str, text: String| {
            *violations.entry(what).or_default() += 1;
            example.get_or_insert(format!("{what}: {text}"));
        };
        if let Err(e) = check_tree(tree) {
            flag("gene invariant", e);
        }
        let Ok(body) = print(tree) else {
            flag("unprintable", String::new());
            continue;
        };
        let Ok(doc) = parse_document(&body.query_text) else {
            flag("unparsable", body.query_text.clone());
            continue;
        };
        if has_empty_selection(&doc.operations[0].selection_set) {
            flag("empty selection", body.query_text.clone());
        }
        if let Some(c) = repeated_type(schema, &doc, body.operation_kind) {
            flag("cycle followed", c);
        }
        // the depth limit counts the root field's selection as level 1, one
        // below the document's own braces
        if selection_depth(&doc) > limits.depth_limit + 1 {
            flag("too deep", body.query_text.clone());
        }
    }
    if violations.is_empty() {
        Ok(format!("{} genotypes, 0 violations", genotypes.len()))
    } else {
        Err(format!("{violations:?}; e.g. {}", example.unwrap_or_default()))
    }
}

// ---------------------------------------------------------------------- 3

fn send(mock: &mut InProcessMock, kind: OperationKind, query: &str) -> RawReply {
    mock.execute(&RequestBody {
        query_text: query.into(),
        operation_kind: kind,
    })
    .expect("in-process mock never fails")
}

fn criterion_3() -> Outcome {
    let suspicious = |p: &str| FaultKind::SuspiciousInternalMessage { pattern: p.into() };
    // (spec, kind, op, document, script label, expected faults in order)
    let cases: Vec<(SutSpec, OperationKind, &str, &str, &str, Vec<FaultKind>)> = vec![
        (
            corpus::bahnql(),
            OperationKind::Query,
            "parkingSpace",
            "{parkingSpace(id:9){name,location{latitude}}}",
            "null_for_non_null",
            vec![
                FaultKind::ErrorsEntry,
                FaultKind::NonNullViolation {
                    path: "parkingSpace.location.latitude".into(),
                },
            ],
        ),
        (
            corpus::kitchen_sink(),
            OperationKind::Mutation,
            "removeSpecialty",
            "mutation{removeSpecialty(input:{specialtyId:643}){specialties{id}}}",
            "crash_on_missing_id",
            vec![FaultKind::ErrorsEntry, suspicious("internal_server_error")],
        ),
        (
            corpus::kitchen_sink(),
            OperationKind::Query,
            "theme",
            "{theme(conferenceId:\"graphql-finland-2020\"){name}}",
            "status500_on_user_error",
            vec![FaultKind::ServerStatus5xx, FaultKind::ErrorsEntry],
        ),
        (
            corpus::petclinic(),
            OperationKind::Query,
            "pets",
            "{pets{id,visits{totalCount}}}",
            "stack_trace_leak",
            vec![FaultKind::ErrorsEntry, suspicious("extensions_stacktrace")],
        ),
        (
            corpus::kitchen_sink(),
            OperationKind::Query,
            "search",
            "{search(filter:{color:RED}){...on Book{title}}}",
            "html_error_page",
            vec![FaultKind::ServerStatus5xx, FaultKind::MalformedBody],
        ),
    ];
    let seeded: BTreeSet<&str> = corpus::corpus()
        .iter()
        .flat_map(|s| s.faults.iter().map(|f| f.kind.label()))
        .collect();
    if seeded.len() != 5 {
        return Err(format!("corpus seeds {} fault kinds, expected 5", seeded.len()));
    }
    let classifier = Classifier::default();
    for (spec, kind, op, query, label, expected) in cases {
        let mut mock = InProcessMock::new(spec.clone()).unwrap();
        let reply = send(&mut mock, kind, query);
        let units = mock.poll().unwrap();
        if units.last().map(String::as_str) != Some(format!("{op}/fault/{label}").as_str()) {
            return Err(format!("{label} did not fire for {query}: {units:?}"));
        }
        let c = classifier.classify(reply.status, &reply.body, &spec.schema, &OpRef::new(kind, op));
        if c.faults != expected {
            return Err(format!("{label}: expected {expected:?}, got {:?}", c.faults));
        }
        if label == "null_for_non_null" {
            let v: serde_json::Value = serde_json::from_slice(&reply.body).unwrap();
            let msg = v["errors"][0]["message"].as_str().unwrap_or("");
            if reply.status != 200
                || msg != "Cannot return null for non-nullable field Location.latitude."
                || v["data"] != serde_json::json!({"parkingSpace": null})
            {
                return Err(format!("unexpected null-for-non-null reply {v}"));
            }
        }
    }
    Ok("5/5 fault kinds classified exactly".into())
}

// ---------------------------------------------------------------------- 4

const ARENA_BUDGET: u64 = 10_000;
const ARENA_SEEDS: u64 = 10;

/// Distribution of `(leaf fields selected, next selected)` for one level
/// of the deep-nesting selection, by enumerating every presence pattern of
/// its entries (each present with probability 1/2) and applying the
/// forced-selection repair: an empty pattern gets one entry chosen
/// uniformly.
fn level_distribution(leaves: usize, has_next: bool) -> BTreeMap<(usize, bool), f64> {
    let entries = leaves + usize::from(has_next);
    let mut dist = BTreeMap::new();
    let p_pattern = 0.5f64.powi(entries as i32);
    for mask in 0u32..(1 << entries) {
        let patterns: Vec<(u32, f64)> = if mask == 0 {
            (0..entries).map(|j| (1 << j, p_pattern / entries as f64)).collect()
        } else {
            vec![(mask, p_pattern)]
        };
        for (m, p) in patterns {
            let leaf_count = (0..leaves).filter(|j| m & (1 << j) != 0).count();
            let next = has_next && m & (1 << leaves) != 0;
            *dist.entry((leaf_count, next)).or_insert(0.0) += p;
        }
    }
    dist
}

/// Probability that one fresh sample hits each `explore/d{d}/k{k}` unit.
fn deep_unit_probabilities() -> BTreeMap<String, f64> {
    let levels = corpus::DEEP_LEVELS;
    let width = corpus::DEEP_WIDTH;
    let mut out = BTreeMap::new();
    let mut reach = 1.0;
    for d in 1..=levels {
        let dist = level_distribution(width, d < levels);
        for k in 1..=width {
            let p: f64 = dist
                .iter()
                .filter(|((n, _), _)| *n >= k)
                .map(|(_, p)| p)
                .sum();
            out.insert(format!("explore/d{d}/k{k}"), reach * p);
        }
        reach *= dist.iter().filter(|((_, next), _)| *next).map(|(_, p)| p).sum::<f64>();
    }
    out
}

fn campaign(spec: &SutSpec, config: &SearchConfig, with_feed: bool) -> (Archive, Schema) {
    let templates = build_action_templates(&spec.schema, BuildLimits::default()).unwrap();
    let mut mock = InProcessMock::new(spec.clone()).unwrap();
    let mut feed = mock.clone();
    let classifier = Classifier::default();
    let registry = TargetRegistry::new();
    let mut problem = Problem {
        templates: &templates,
        ctx: EvalContext {
            schema: &spec.schema,
            classifier: &classifier,
            executor: &mut mock,
            feed: if with_feed {
                Some(&mut feed as &mut dyn CoverageFeed)
            } else {
                None
            },
            registry: &registry,
        },
    };
    (run(config, &mut problem).unwrap(), spec.schema.clone())
}

fn criterion_4() -> Outcome {
    let probs = deep_unit_probabilities();
    let archive_only: Vec<TargetId> = probs
        .iter()
        .filter(|(_, p)| 1.0 - (1.0 - **p).powi(ARENA_BUDGET as i32) < 0.99)
        .map(|(u, _)| TargetId::Coverage(u.clone()))
        .collect();
    // frozen oracle outcome
    let expected: Vec<TargetId> = ["d1/k12", "d2/k12", "d3/k12", "d4/k11", "d4/k12"]
        .iter()
        .map(|s| TargetId::Coverage(format!("explore/{s}")))
        .collect();
    if archive_only != expected {
        return Err(format!("oracle changed: {archive_only:?}"));
    }
    let spec = corpus::deep_nesting();
    let mut totals = [0usize; 2];
    let mut misses = Vec::new();
    let mut per_run = Vec::new();
    for seed in 0..ARENA_SEEDS {
        for (i, algorithm) in [Algorithm::Mio, Algorithm::Random].into_iter().enumerate() {
            let config = SearchConfig {
                budget_calls: ARENA_BUDGET,
                seed,
                algorithm,
                ..SearchConfig::default()
            };
            let (archive, _) = campaign(&spec, &config, true);
            totals[i] += archive.covered_count();
            per_run.push(archive.covered_count());
            if algorithm == Algorithm::Mio {
                for t in &archive_only {
                    if !archive.is_covered(t) {
                        misses.push(format!("seed {seed}: {t}"));
                    }
                }
            }
        }
    }
    let mean = |t: usize| t as f64 / ARENA_SEEDS as f64;
    let detail = format!(
        "mean covered MIO {:.1} vs random {:.1}; archive-only units {}",
        mean(totals[0]),
        mean(totals[1]),
        archive_only.len()
    );
    if totals[0] <= totals[1] {
        return Err(format!("{detail}; runs {per_run:?}"));
    }
    if !misses.is_empty() {
        return Err(format!("{detail}; MIO missed {misses:?}"));
    }
    Ok(format!("{detail}, all covered by MIO in every run"))
}

// ---------------------------------------------------------------------- 5

fn selection_shape(g: &Gene) -> Vec<(String, &'static str)> {
    let Gene::Object(o) = g else {
        return Vec::new();
    };
    o.fields
        .iter()
        .map(|(n, e)| {
            let inner = match e {
                Gene::Optional(opt) => &*opt.inner,
                other => other,
            };
            let kind = match inner {
                Gene::Leaf => "leaf",
                Gene::Object(_) => "object",
                Gene::Cycle(_) => "cycle",
                Gene::Limit(_) => "limit",
                _ => "other",
            };
            (n.clone(), kind)
        })
        .collect()
}

/// Probability that some entry in `wanted` ends up selected among `free`
/// entries, by enumeration with forced-selection repair.
fn p_selected(free: usize, wanted: impl Fn(u32) -> bool) -> f64 {
    let p_pattern = 0.5f64.powi(free as i32);
    let mut p = 0.0;
    for mask in 0u32..(1 << free) {
        if mask == 0 {
            p += (0..free)
                .filter(|j| wanted(1 << j))
                .map(|_| p_pattern / free as f64)
                .sum::<f64>();
        } else if wanted(mask) {
            p += p_pattern;
        }
    }
    p
}

fn criterion_5() -> Outcome {
    let spec = corpus::petclinic();
    let templates = build_action_templates(&spec.schema, BuildLimits::default()).unwrap();
    let sel = templates[0].selection_gene.as_ref().unwrap();
    let pet = selection_shape(sel);
    let expect_pet = [("id", "leaf"), ("name", "leaf"), ("owner", "object"), ("visits", "object")];
    if pet.iter().map(|(n, k)| (n.as_str(), *k)).collect::<Vec<_>>() != expect_pet {
        return Err(format!("oracle assumes Pet selection {expect_pet:?}, got {pet:?}"));
    }
    let Gene::Object(pet_obj) = sel else { unreachable!() };
    let Gene::Optional(owner) = &pet_obj.fields[2].1 else { unreachable!() };
    let owner_shape = selection_shape(&owner.inner);
    let expect_owner = [("id", "leaf"), ("firstName", "leaf"), ("lastName", "leaf"), ("pets", "cycle")];
    if owner_shape.iter().map(|(n, k)| (n.as_str(), *k)).collect::<Vec<_>>() != expect_owner {
        return Err(format!("oracle assumes Owner selection {expect_owner:?}, got {owner_shape:?}"));
    }
    // bits: id, name, owner, visits; the stack trace leak wins when visits
    // is selected
    let p_stack = p_selected(4, |m| m & 0b1000 != 0);
    let p_owner_no_visits = p_selected(4, |m| m & 0b0100 != 0 && m & 0b1000 == 0);
    // the cycle entry never counts; bits: id, firstName, lastName
    let p_last_name = p_selected(3, |m| m & 0b100 != 0);
    let classes = [
        (
            "stack_trace_leak",
            p_stack,
            FaultKind::SuspiciousInternalMessage {
                pattern: "extensions_stacktrace".into(),
            },
        ),
        (
            "null_for_non_null",
            p_owner_no_visits * p_last_name,
            FaultKind::NonNullViolation {
                path: "pets.owner.lastName".into(),
            },
        ),
    ];
    let calls = 1000;
    let reachable: Vec<_> = classes
        .iter()
        .filter(|(_, p, _)| 1.0 - (1.0 - p).powi(calls) >= 0.99)
        .collect();
    let mut found_runs: BTreeMap<&str, usize> = BTreeMap::new();
    for seed in 0..3 {
        let config = SearchConfig {
            budget_calls: calls as u64,
            seed,
            algorithm: Algorithm::Random,
            ..SearchConfig::default()
        };
        let (archive, _) = campaign(&spec, &config, false);
        let seen: BTreeSet<&FaultKind> = archive
            .tests
            .iter()
            .flat_map(|t| &t.calls)
            .flat_map(|c| &c.classification.faults)
            .collect();
        for (name, _, fault) in &reachable {
            if seen.contains(fault) {
                *found_runs.entry(name).or_default() += 1;
            }
        }
    }
    let summary = format!(
        "reachable classes {:?} (p/call {:.3}, {:.3}); found in runs {found_runs:?}",
        reachable.iter().map(|(n, _, _)| *n).collect::<Vec<_>>(),
        classes[0].1,
        classes[1].1
    );
    if reachable.iter().all(|(n, _, _)| found_runs.get(n).copied().unwrap_or(0) >= 2) {
        Ok(summary)
    } else {
        Err(summary)
    }
}

// ---------------------------------------------------------------------- 6

fn n_endpoint_schema(n: usize) -> Schema {
    let fields = (0..n)
        .map(|i| FieldDef::new(format!("op{i}"), TypeRef::named("Int")))
        .collect();
    Schema::new("Query", None, [TypeDef::object("Query", fields)]).with_builtin_scalars()
}

/// An archive holding one single-call test per `(endpoint, has_data,
/// has_errors)` outcome.
fn synthetic_archive(schema: &Schema, outcomes: &[(usize, bool, bool)]) -> Archive {
    let templates = build_action_templates(schema, BuildLimits::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut archive = Archive::default();
    for &(i, has_data, has_errors) in outcomes {
        let action = sample(&templates[i], &mut rng);
        let call = CallRecord {
            request: print(&action).unwrap(),
            classification: ResponseClassification {
                status: 200,
                has_data,
                has_errors,
                error_messages: Vec::new(),
                faults: Vec::new(),
                covered_targets: BTreeSet::new(),
            },
            units: Vec::new(),
        };
        archive.tests.push(ArchivedTest {
            test: TestCase { actions: vec![action] },
            calls: vec![call],
            covered: BTreeSet::new(),
            new_targets: Vec::new(),
            admitted_at: 0,
        });
    }
    archive
}

/// Each share lies in [0, 1], so together they never exceed 2, and neither
/// count exceeds the endpoint count.
fn shares_within_bounds(s: &EndpointStats) -> bool {
    let unit = |p: f64| (0.0..=100.0).contains(&p);
    unit(s.pct_no_errors)
        && unit(s.pct_with_errors)
        && s.pct_no_errors / 100.0 + s.pct_with_errors / 100.0 <= 2.0
        && s.no_errors <= s.endpoints
        && s.with_errors <= s.endpoints
}

fn criterion_6() -> Outcome {
    let seven = n_endpoint_schema(7);
    let both: Vec<(usize, bool, bool)> =
        (0..7).flat_map(|i| [(i, true, false), (i, false, true)]).collect();
    let a = endpoint_stats(&synthetic_archive(&seven, &both), &seven);

    let ten = n_endpoint_schema(10);
    let mut mixed = Vec::new();
    mixed.extend((0..4).map(|i| (i, true, false)));
    mixed.extend((4..7).map(|i| (i, false, true)));
    mixed.extend((7..10).flat_map(|i| [(i, true, false), (i, true, true)]));
    let b = endpoint_stats(&synthetic_archive(&ten, &mixed), &ten);

    let empty = n_endpoint_schema(0);
    let c = endpoint_stats(&Archive::default(), &empty);

    let got = |s: &EndpointStats| (s.endpoints, s.no_errors, s.with_errors, s.pct_no_errors, s.pct_with_errors);
    if got(&a) != (7, 7, 7, 100.0, 100.0) {
        return Err(format!("both-outcomes case gave {:?}", got(&a)));
    }
    if got(&b) != (10, 7, 6, 70.0, 60.0) {
        return Err(format!("hand-counted case gave {:?}", got(&b)));
    }
    if got(&c) != (0, 0, 0, 0.0, 0.0) || c.diagnostic.is_none() {
        return Err(format!("zero-endpoint case gave {c:?}"));
    }
    if ![&a, &b, &c].iter().all(|s| shares_within_bounds(s)) {
        return Err("share bound violated".into());
    }
    Ok("(7, 100.0, 100.0) and (10, 70.0, 60.0) reproduced; bound holds on all records".into())
}

// ---------------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let spec = corpus::kitchen_sink();
    let config = SearchConfig {
        budget_calls: 2_000,
        seed: 7,
        ..SearchConfig::default()
    };
    let suite_of = || {
        let (archive, schema) = campaign(&spec, &config, true);
        SuiteArchive::from_archive(&archive, &schema, &config)
    };
    let first = suite_of();
    let second = suite_of();
    if first.to_json() != second.to_json() {
        return Err("two identical campaigns wrote different suites".into());
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_suite(&first, dir.path()).map_err(|e| e.to_string())?;
    let written = std::fs::read(dir.path().join("suite.json")).map_err(|e| e.to_string())?;
    let reread = read_suite(dir.path()).map_err(|e| e.to_string())?;
    if written != first.to_json().as_bytes() || reread.to_json().as_bytes() != written {
        return Err("suite round trip is not byte-identical".into());
    }
    let mut mock = InProcessMock::new(spec.clone()).unwrap();
    let outcomes = replay(&reread, &mut mock, &Classifier::default(), &spec.schema)
        .map_err(|e| e.to_string())?;
    let mismatches: Vec<_> = outcomes.iter().filter(|o| !o.matches()).collect();
    if !mismatches.is_empty() {
        return Err(format!("{} replay mismatches, first {:?}", mismatches.len(), mismatches[0]));
    }
    Ok(format!(
        "{} bytes identical across runs; {} replayed calls all match",
        written.len(),
        outcomes.len()
    ))
}

// ---------------------------------------------------------------------- 8

struct Counting<E> {
    inner: E,
    calls: u64,
}

impl<E: Executor> Executor for Counting<E> {
    fn execute(&mut self, body: &RequestBody) -> Result<RawReply, TransportError> {
        self.calls += 1;
        self.inner.execute(body)
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let specs = corpus::corpus();
    for i in 0..20 {
        let spec = &specs[rng.gen_range(0..specs.len())];
        let config = SearchConfig {
            budget_calls: rng.gen_range(0..=2_500),
            p_sample_random: rng.gen_range(0.0..=1.0),
            population_cap: rng.gen_range(1..=10),
            max_actions: rng.gen_range(1..=10),
            seed: rng.gen(),
            algorithm: if rng.gen_bool(0.5) { Algorithm::Mio } else { Algorithm::Random },
        };
        let with_feed = rng.gen_bool(0.5);
        let templates = build_action_templates(&spec.schema, BuildLimits::default()).unwrap();
        let mock = InProcessMock::new(spec.clone()).unwrap();
        let mut feed = mock.clone();
        let mut exec = Counting { inner: mock, calls: 0 };
        let classifier = Classifier::default();
        let registry = TargetRegistry::new();
        let mut problem = Problem {
            templates: &templates,
            ctx: EvalContext {
                schema: &spec.schema,
                classifier: &classifier,
                executor: &mut exec,
                feed: with_feed.then_some(&mut feed as &mut dyn CoverageFeed),
                registry: &registry,
            },
        };
        let archive = run(&config, &mut problem).map_err(|e| e.to_string())?;
        let last = archive.timeline.last().map_or(0, |(c, _)| *c);
        if exec.calls != config.budget_calls
            || archive.calls_used != config.budget_calls
            || last != config.budget_calls
        {
            return Err(format!(
                "config {i} ({config:?}): executed {}, accounted {}, timeline {last}",
                exec.calls, archive.calls_used
            ));
        }
    }
    Ok("20/20 configurations executed exactly their budget".into())
}

// ---------------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let server = MockServer::start(corpus::petclinic()).unwrap();
    let exec = HttpExecutor::new(
        ExecConfig::new(&server.base_url())
            .and_then(|c| c.with_rate_limit(10))
            .map_err(|e| e.to_string())?,
    );
    let mut done = Vec::new();
    for _ in 0..5 {
        exec.post_json(r#"{"query":"{pets{id}}"}"#)
            .map_err(|e| e.to_string())?;
        done.push(Instant::now());
    }
    let gaps: Vec<u128> = done.windows(2).map(|w| (w[1] - w[0]).as_millis()).collect();
    let min = *gaps.iter().min().unwrap();
    let detail = format!("gaps {gaps:?} ms");
    if min + 50 >= 6_000 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
