//! Runs MIO and random search on the deep-nesting mock and prints the
//! targets each one left uncovered.
//!
//! cargo run --release --example mio_vs_random -- [budget] [seeds]

use std::collections::BTreeMap;

use gqlfuzz::executor::CoverageFeed;
use gqlfuzz::gene::{build_action_templates, BuildLimits};
use gqlfuzz::mock::{corpus, InProcessMock};
use gqlfuzz::search::{run, Algorithm, Problem, SearchConfig};
use gqlfuzz::targets::{Classifier, EvalContext, TargetId, TargetRegistry};

fn main() {
    let mut args = std::env::args().skip(1);
    let budget: u64 = args.next().map_or(10_000, |a| a.parse().expect("budget"));
    let seeds: u64 = args.next().map_or(3, |a| a.parse().expect("seeds"));
    let spec = corpus::deep_nesting();
    let templates = build_action_templates(&spec.schema, BuildLimits::default()).unwrap();
    let classifier = Classifier::default();
    for algorithm in [Algorithm::Mio, Algorithm::Random] {
        let mut missed: BTreeMap<TargetId, u64> = BTreeMap::new();
        let mut total = 0;
        for seed in 0..seeds {
            let mut mock = InProcessMock::new(spec.clone()).unwrap();
            let mut feed = mock.clone();
            let registry = TargetRegistry::new();
            let mut problem = Problem {
                templates: &templates,
                ctx: EvalContext {
                    schema: &spec.schema,
                    classifier: &classifier,
                    executor: &mut mock,
                    feed: Some(&mut feed as &mut dyn CoverageFeed),
                    registry: &registry,
                },
            };
            let config = SearchConfig {
                budget_calls: budget,
                seed,
                algorithm,
                ..SearchConfig::default()
            };
            let archive = run(&config, &mut problem).unwrap();
            total += archive.covered_count();
            for t in registry.snapshot() {
                if !archive.is_covered(&t) {
                    *missed.entry(t).or_default() += 1;
                }
            }
        }
        println!(
            "{algorithm:?}: mean covered {:.1} over {seeds} seeds",
            total as f64 / seeds as f64
        );
        for (t, n) in missed {
            println!("  missed {t} in {n} runs");
        }
    }
}
