//! Builds action templates for a corpus spec and prints their gene shape.
//!
//! cargo run --example build_templates -- [spec] [depth_limit]

use gqlfuzz::gene::{build_action_templates, mutable_gene_count, sample, BuildLimits};
use gqlfuzz::mock::corpus;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "petclinic".into());
    let depth: usize = args.next().map_or(4, |d| d.parse().expect("depth limit"));
    let spec = corpus::by_name(&name).expect("unknown corpus spec");
    let limits = BuildLimits::new(depth, 100, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for t in build_action_templates(&spec.schema, limits).unwrap() {
        println!(
            "{} {}: {} argument genes, {} mutable genes when sampled",
            t.operation_kind,
            t.operation_name,
            t.argument_genes.len(),
            mutable_gene_count(&sample(&t, &mut rng)),
        );
        if let Some(sel) = &t.selection_gene {
            println!("  {sel:?}");
        }
    }
}
