//! Runs a black-box random-search campaign over HTTP against a mock server
//! and writes the test suite.
//!
//! cargo run --example blackbox_campaign -- [spec] [budget] [out_dir]

use gqlfuzz::executor::{ExecConfig, HttpExecutor};
use gqlfuzz::gene::{build_action_templates, BuildLimits};
use gqlfuzz::mock::{corpus, MockServer};
use gqlfuzz::report::{write_suite, SuiteArchive};
use gqlfuzz::search::{run, Algorithm, Problem, SearchConfig};
use gqlfuzz::targets::{Classifier, EvalContext, TargetRegistry};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "petclinic".into());
    let budget: u64 = args.next().map_or(1000, |b| b.parse().expect("budget"));
    let out = args.next().unwrap_or_else(|| "gqlfuzz-example-out".into());
    let spec = corpus::by_name(&name).expect("unknown corpus spec");
    let server = MockServer::start(spec.clone()).unwrap();
    let mut exec = HttpExecutor::new(ExecConfig::new(&server.base_url()).unwrap());
    let templates = build_action_templates(&spec.schema, BuildLimits::default()).unwrap();
    let classifier = Classifier::default();
    let registry = TargetRegistry::new();
    let config = SearchConfig {
        budget_calls: budget,
        algorithm: Algorithm::Random,
        ..SearchConfig::default()
    };
    let mut problem = Problem {
        templates: &templates,
        ctx: EvalContext {
            schema: &spec.schema,
            classifier: &classifier,
            executor: &mut exec,
            feed: None,
            registry: &registry,
        },
    };
    let archive = run(&config, &mut problem).unwrap();
    let suite = SuiteArchive::from_archive(&archive, &spec.schema, &config);
    let files = write_suite(&suite, std::path::Path::new(&out)).unwrap();
    println!(
        "{} tests cover {} of {} targets; suite in {}",
        archive.tests.len(),
        archive.covered_count(),
        archive.known_targets,
        files.suite.display()
    );
    for t in &archive.tests {
        for c in &t.calls {
            if !c.classification.faults.is_empty() {
                println!("  {:?}: {}", c.classification.faults, c.request.query_text);
            }
        }
    }
}
