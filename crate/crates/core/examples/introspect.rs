//! Introspects a mock server over HTTP and lists its operations.
//!
//! cargo run --example introspect -- [petclinic|deep-nesting|recursive|kitchen-sink|bahnql]

use gqlfuzz::executor::{ExecConfig, HttpExecutor};
use gqlfuzz::introspection::{build_introspection_query, parse_schema_text, validate_schema};
use gqlfuzz::mock::{corpus, MockServer};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "kitchen-sink".into());
    let spec = corpus::by_name(&name).expect("unknown corpus spec");
    let server = MockServer::start(spec).unwrap();
    let exec = HttpExecutor::new(ExecConfig::new(&server.base_url()).unwrap());
    let body = serde_json::json!({ "query": build_introspection_query() }).to_string();
    let reply = exec.post_json(&body).unwrap();
    let schema = parse_schema_text(&String::from_utf8_lossy(&reply.body)).unwrap();
    for d in validate_schema(&schema) {
        println!("diagnostic: {d:?}");
    }
    for (kind, field) in schema.operations() {
        let args: Vec<String> = field.args.iter().map(|a| a.name.clone()).collect();
        println!("{kind} {}({}) -> {}", field.name, args.join(", "), field.ty.base_name());
    }
}
