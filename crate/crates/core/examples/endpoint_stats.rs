//! Computes endpoint statistics from hand-written call outcomes.
//!
//! cargo run --example endpoint_stats

use gqlfuzz::mock::corpus;
use gqlfuzz::report::EndpointStats;
use gqlfuzz::schema::OperationKind;
use gqlfuzz::targets::OpRef;

fn main() {
    let spec = corpus::kitchen_sink();
    let q = |n: &str| OpRef::new(OperationKind::Query, n);
    let m = |n: &str| OpRef::new(OperationKind::Mutation, n);
    // (operation, returned data without errors, returned errors)
    let outcomes = [
        (q("book"), true, false),
        (q("book"), false, true),
        (q("search"), false, true),
        (q("theme"), false, true),
        (m("addBook"), true, false),
    ];
    let stats = EndpointStats::from_outcomes(&spec.schema, outcomes.iter().map(|(o, c, e)| (o, *c, *e)));
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());
}
