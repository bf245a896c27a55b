//! Samples and mutates gene trees, printing each query document.
//!
//! cargo run --example sample_and_print -- [spec] [count] [seed]

use gqlfuzz::gene::{build_action_templates, mutate_internal, sample, BuildLimits};
use gqlfuzz::mock::corpus;
use gqlfuzz::printer::print;
use gqlfuzz::validator::validate_query_text;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "kitchen-sink".into());
    let count: usize = args.next().map_or(10, |c| c.parse().expect("count"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let spec = corpus::by_name(&name).expect("unknown corpus spec");
    let templates = build_action_templates(&spec.schema, BuildLimits::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let mut tree = sample(&templates[i % templates.len()], &mut rng);
        for _ in 0..rng.gen_range(0..3) {
            mutate_internal(&mut tree, &mut rng);
        }
        let body = print(&tree).unwrap();
        let verdict = if validate_query_text(&body.query_text).is_ok() { "valid" } else { "INVALID" };
        println!("[{verdict}] {}", body.query_text);
    }
}
