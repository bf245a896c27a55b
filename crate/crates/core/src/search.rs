//! MIO and random search over test cases.
//!
//! Both algorithms share the [`Archive`]: the first test to cover a target
//! is kept for it. MIO additionally keeps a bounded population per
//! uncovered target and alternates between fresh sampling and mutating a
//! member of a uniformly chosen uncovered population. A covered target's
//! population is dropped and never sampled again.
//!
//! Targets carry no gradient, so population members are ranked by the
//! number of targets their last evaluation covered; the lowest-ranked,
//! oldest member is evicted first.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::rc::Rc;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gene::{mutable_gene_count, mutate_internal, sample, ActionTemplate, GeneTree};
use crate::targets::{evaluate, CallRecord, EvalContext, OpRef, TargetId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mio,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Total HTTP calls; a test of k actions consumes k.
    pub budget_calls: u64,
    pub p_sample_random: f64,
    pub population_cap: usize,
    pub max_actions: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget_calls: 1000,
            p_sample_random: 0.5,
            population_cap: 10,
            max_actions: 10,
            seed: 0,
            algorithm: Algorithm::Mio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("the schema yields no operation to test")]
    NoTemplates,
    #[error("invalid search configuration: {0}")]
    InvalidConfig(&'static str),
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(0.0..=1.0).contains(&self.p_sample_random) {
            return Err(SearchError::InvalidConfig("p_sample_random outside [0, 1]"));
        }
        if self.population_cap == 0 {
            return Err(SearchError::InvalidConfig("population_cap must be positive"));
        }
        if self.max_actions == 0 {
            return Err(SearchError::InvalidConfig("max_actions must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub actions: Vec<GeneTree>,
}

impl TestCase {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn reaches(&self, target: &TargetId) -> bool {
        match target.operation() {
            Some(op) => self.actions.iter().any(|a| OpRef::of(a) == *op),
            None => true,
        }
    }
}

/// A test admitted to the archive because it covered new targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchivedTest {
    pub test: TestCase,
    pub calls: Vec<CallRecord>,
    pub covered: BTreeSet<TargetId>,
    /// Targets first covered by this test.
    pub new_targets: Vec<TargetId>,
    /// Calls consumed when the test was admitted.
    pub admitted_at: u64,
}

#[derive(Debug, Clone)]
struct Individual {
    test: Rc<TestCase>,
    score: usize,
    len: usize,
    seq: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Archive {
    pub tests: Vec<ArchivedTest>,
    /// Covered target → index of its first covering test.
    pub covered: BTreeMap<TargetId, usize>,
    /// `(calls consumed, covered targets)` after every evaluation.
    pub timeline: Vec<(u64, usize)>,
    pub calls_used: u64,
    pub known_targets: usize,
    /// Every population draw as `(target, calls consumed at the draw)`.
    pub selections: Vec<(TargetId, u64)>,
    populations: IndexMap<TargetId, Vec<Individual>>,
    next_seq: u64,
}

impl Archive {
    pub fn covered_count(&self) -> usize {
        self.covered.len()
    }

    pub fn is_covered(&self, t: &TargetId) -> bool {
        self.covered.contains_key(t)
    }

    /// Calls consumed when the target was first covered.
    pub fn covered_at(&self, t: &TargetId) -> Option<u64> {
        self.covered.get(t).map(|&i| self.tests[i].admitted_at)
    }

    pub fn population_len(&self, t: &TargetId) -> usize {
        self.populations.get(t).map_or(0, Vec::len)
    }

    /// Covered-target count at the last evaluation that fit within `calls`.
    pub fn covered_at_budget(&self, calls: u64) -> usize {
        self.timeline
            .iter()
            .take_while(|(c, _)| *c <= calls)
            .last()
            .map_or(0, |(_, n)| *n)
    }

    fn admit(&mut self, test: &TestCase, calls: Vec<CallRecord>, covered: BTreeSet<TargetId>) {
        let new_targets: Vec<TargetId> = covered
            .iter()
            .filter(|t| !self.covered.contains_key(*t))
            .cloned()
            .collect();
        if new_targets.is_empty() {
            return;
        }
        let idx = self.tests.len();
        for t in &new_targets {
            self.covered.insert(t.clone(), idx);
            self.populations.shift_remove(t);
        }
        self.tests.push(ArchivedTest {
            test: test.clone(),
            calls,
            covered,
            new_targets,
            admitted_at: self.calls_used,
        });
    }

    fn offer(&mut self, test: Rc<TestCase>, score: usize, known: &[TargetId], cap: usize) {
        let seq = self.next_seq;
        self.next_seq += 1;
        for t in known {
            if self.covered.contains_key(t) || !test.reaches(t) {
                continue;
            }
            let pop = self.populations.entry(t.clone()).or_default();
            pop.push(Individual {
                test: Rc::clone(&test),
                score,
                len: test.len(),
                seq,
            });
            if pop.len() > cap {
                // lowest score loses; ties evict the longer, then the older test
                let worst = pop
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, i)| (i.score, std::cmp::Reverse(i.len), i.seq))
                    .map(|(k, _)| k)
                    .expect("population is not empty");
                pop.remove(worst);
            }
        }
    }

    /// A copy of a member of a uniformly chosen uncovered, non-empty
    /// population.
    fn pick<R: Rng>(&mut self, rng: &mut R) -> Option<TestCase> {
        let open: Vec<&TargetId> = self
            .populations
            .iter()
            .filter(|(t, p)| !p.is_empty() && !self.covered.contains_key(*t))
            .map(|(t, _)| t)
            .collect();
        let target = (*open.choose(rng)?).clone();
        let pop = &self.populations[&target];
        let chosen = (*pop.choose(rng)?.test).clone();
        self.selections.push((target, self.calls_used));
        Some(chosen)
    }
}

/// Templates plus the evaluation context of one SUT.
pub struct Problem<'a> {
    pub templates: &'a [ActionTemplate],
    pub ctx: EvalContext<'a>,
}

fn fresh_test<R: Rng>(templates: &[ActionTemplate], rng: &mut R) -> TestCase {
    let t = templates.choose(rng).expect("templates are not empty");
    TestCase {
        actions: vec![sample(t, rng)],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StructureOp {
    Append,
    Remove,
    Internal,
}

/// Appends a fresh action, removes one, or mutates one internally, chosen
/// uniformly among the options applicable to this test. A test with no
/// applicable option is returned unchanged.
pub fn mutate_structure<R: Rng>(
    test: &TestCase,
    templates: &[ActionTemplate],
    rng: &mut R,
    max_actions: usize,
) -> TestCase {
    let mut out = test.clone();
    let mutable: Vec<usize> = out
        .actions
        .iter()
        .enumerate()
        .filter(|(_, a)| mutable_gene_count(a) > 0)
        .map(|(i, _)| i)
        .collect();
    let mut ops = Vec::with_capacity(3);
    if out.len() < max_actions && !templates.is_empty() {
        ops.push(StructureOp::Append);
    }
    if out.len() > 1 {
        ops.push(StructureOp::Remove);
    }
    if !mutable.is_empty() {
        ops.push(StructureOp::Internal);
    }
    match ops.choose(rng) {
        Some(StructureOp::Append) => {
            let t = templates.choose(rng).expect("checked above");
            out.actions.push(sample(t, rng));
        }
        Some(StructureOp::Remove) => {
            let i = rng.gen_range(0..out.len());
            out.actions.remove(i);
        }
        Some(StructureOp::Internal) => {
            let i = *mutable.choose(rng).expect("checked above");
            mutate_internal(&mut out.actions[i], rng);
        }
        None => {}
    }
    out
}

/// Targets and units reached by the single best call of a test. Scoring by
/// call rather than by test keeps long tests from crowding out short ones
/// that spend the budget better.
fn call_score(calls: &[CallRecord]) -> usize {
    calls
        .iter()
        .map(|c| c.classification.covered_targets.len() + c.units.len())
        .max()
        .unwrap_or(0)
}

/// Runs a campaign until exactly `budget_calls` calls are consumed. The
/// last test is truncated to fit. A zero budget yields an empty archive.
pub fn run(config: &SearchConfig, problem: &mut Problem<'_>) -> Result<Archive, SearchError> {
    config.validate()?;
    if problem.templates.is_empty() {
        return Err(SearchError::NoTemplates);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ctx = &mut problem.ctx;
    ctx.flush_feed();
    for t in problem.templates {
        for target in crate::targets::targets_for(&OpRef::of(t)) {
            ctx.registry.register(target);
        }
    }
    if let Some(feed) = ctx.feed.as_mut() {
        for u in feed.known_units() {
            ctx.registry.register(TargetId::Coverage(u));
        }
    }

    let mut archive = Archive::default();
    while archive.calls_used < config.budget_calls {
        let remaining = (config.budget_calls - archive.calls_used) as usize;
        let mut test = match config.algorithm {
            Algorithm::Random => fresh_test(problem.templates, &mut rng),
            Algorithm::Mio => {
                let parent = if rng.gen_bool(config.p_sample_random) {
                    None
                } else {
                    archive.pick(&mut rng)
                };
                match parent {
                    Some(p) => mutate_structure(&p, problem.templates, &mut rng, config.max_actions),
                    None => fresh_test(problem.templates, &mut rng),
                }
            }
        };
        test.actions.truncate(remaining);

        let eval = evaluate(&test.actions, ctx);
        archive.calls_used += test.len() as u64;
        let score = call_score(&eval.calls);
        archive.admit(&test, eval.calls, eval.covered);
        if config.algorithm == Algorithm::Mio {
            let known = ctx.registry.snapshot();
            archive.offer(Rc::new(test), score, &known, config.population_cap);
        }
        archive.timeline.push((archive.calls_used, archive.covered.len()));
    }
    archive.known_targets = ctx.registry.len();
    Ok(archive)
}

/// Pure sampling; tests are admitted only when they cover new targets.
pub fn random_search(
    config: &SearchConfig,
    problem: &mut Problem<'_>,
) -> Result<Archive, SearchError> {
    let config = SearchConfig {
        algorithm: Algorithm::Random,
        ..config.clone()
    };
    run(&config, problem)
}
