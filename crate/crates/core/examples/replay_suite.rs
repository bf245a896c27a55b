//! Replays a suite written by `blackbox_campaign` against a fresh mock and
//! reports mismatching calls.
//!
//! cargo run --example replay_suite -- [spec] [suite_dir]

use gqlfuzz::mock::{corpus, InProcessMock};
use gqlfuzz::report::{read_suite, replay};
use gqlfuzz::targets::Classifier;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "petclinic".into());
    let dir = args.next().unwrap_or_else(|| "gqlfuzz-example-out".into());
    let spec = corpus::by_name(&name).expect("unknown corpus spec");
    let suite = read_suite(std::path::Path::new(&dir)).unwrap();
    let mut mock = InProcessMock::new(spec.clone()).unwrap();
    let outcomes = replay(&suite, &mut mock, &Classifier::default(), &spec.schema).unwrap();
    let bad: Vec<_> = outcomes.iter().filter(|o| !o.matches()).collect();
    println!("{} calls replayed, {} mismatches", outcomes.len(), bad.len());
    for o in bad {
        println!("  test {} call {}: expected {:?}, got {:?}", o.test, o.call, o.expected, o.actual);
    }
}
