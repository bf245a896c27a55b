//! Portable test suites, reproduction scripts and endpoint statistics.
//!
//! A suite directory holds `suite.json` (the [`SuiteArchive`]),
//! `summary.csv` (covered targets at every 5% of the budget), `stats.json`
//! ([`EndpointStats`]) and one `scripts/test_NNN.sh` per archived test.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::executor::{wire_body, Executor};
use crate::printer::RequestBody;
use crate::schema::Schema;
use crate::search::{Archive, SearchConfig};
use crate::targets::{Classifier, FaultKind, OpRef, ResponseClassification, TargetId};

pub const SUITE_FORMAT_VERSION: u32 = 1;

/// Per-endpoint outcome counts. An endpoint may count as both clean and
/// erroneous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointStats {
    pub endpoints: usize,
    pub no_errors: usize,
    pub with_errors: usize,
    /// Percent of endpoints, rounded to one decimal.
    pub pct_no_errors: f64,
    pub pct_with_errors: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

fn pct(n: usize, total: usize) -> f64 {
    (1000.0 * n as f64 / total as f64).round() / 10.0
}

impl EndpointStats {
    /// Builds the record from per-call outcomes `(operation, clean, errors)`.
    /// Operations outside the schema are ignored.
    pub fn from_outcomes<'a>(
        schema: &Schema,
        outcomes: impl IntoIterator<Item = (&'a OpRef, bool, bool)>,
    ) -> Self {
        let ops: BTreeSet<OpRef> = schema
            .operations()
            .into_iter()
            .map(|(k, f)| OpRef::new(k, f.name.clone()))
            .collect();
        let mut clean = BTreeSet::new();
        let mut errors = BTreeSet::new();
        for (op, is_clean, has_errors) in outcomes {
            if !ops.contains(op) {
                continue;
            }
            if is_clean {
                clean.insert(op.clone());
            }
            if has_errors {
                errors.insert(op.clone());
            }
        }
        let endpoints = ops.len();
        if endpoints == 0 {
            return EndpointStats {
                endpoints: 0,
                no_errors: 0,
                with_errors: 0,
                pct_no_errors: 0.0,
                pct_with_errors: 0.0,
                diagnostic: Some("schema has no endpoints; percentages reported as 0".into()),
            };
        }
        EndpointStats {
            endpoints,
            no_errors: clean.len(),
            with_errors: errors.len(),
            pct_no_errors: pct(clean.len(), endpoints),
            pct_with_errors: pct(errors.len(), endpoints),
            diagnostic: None,
        }
    }

    /// Both shares are fractions of the same endpoints, so their sum is at
    /// most 2.
    pub fn shares_bounded(&self) -> bool {
        self.pct_no_errors / 100.0 + self.pct_with_errors / 100.0 <= 2.0
            && self.no_errors <= self.endpoints
            && self.with_errors <= self.endpoints
    }
}

fn is_clean(c: &ResponseClassification) -> bool {
    c.has_data && !c.has_errors
}

pub fn endpoint_stats(archive: &Archive, schema: &Schema) -> EndpointStats {
    let ops: Vec<(OpRef, bool, bool)> = archive
        .tests
        .iter()
        .flat_map(|t| t.test.actions.iter().zip(&t.calls))
        .map(|(a, c)| {
            (
                OpRef::of(a),
                is_clean(&c.classification),
                c.classification.has_errors,
            )
        })
        .collect();
    EndpointStats::from_outcomes(schema, ops.iter().map(|(o, c, e)| (o, *c, *e)))
}

/// Campaign settings and provenance of a suite. The target URL is left out
/// so a suite can be replayed against any deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetadata {
    pub format_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config: SearchConfig,
    /// SHA-256 of the schema's canonical JSON form.
    pub schema_sha256: String,
    pub calls_used: u64,
    pub known_targets: usize,
    pub covered_targets: usize,
}

/// One archived call with the assertions a replay re-checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteCall {
    /// `query.pets` style operation id.
    pub operation: String,
    pub request: RequestBody,
    pub expected_status: u16,
    pub expected_has_data: bool,
    pub expected_has_errors: bool,
    pub error_messages: Vec<String>,
    pub faults: Vec<FaultKind>,
    pub covered_targets: Vec<TargetId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteTest {
    pub id: usize,
    /// Calls consumed when the test entered the archive.
    pub admitted_at: u64,
    /// Targets this test covered first.
    pub new_targets: Vec<TargetId>,
    pub calls: Vec<SuiteCall>,
}

/// Covered targets after `budget_pct` percent of the budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub budget_pct: u32,
    pub calls: u64,
    pub covered_targets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteArchive {
    pub metadata: SuiteMetadata,
    pub stats: EndpointStats,
    pub summary: Vec<SummaryRow>,
    pub tests: Vec<SuiteTest>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed suite file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("suite call has unknown operation id `{0}`")]
    BadOperation(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn schema_hash(schema: &Schema) -> String {
    let canonical = serde_json::to_vec(schema).expect("schema serializes");
    hex::encode(Sha256::digest(canonical))
}

/// Rows at 0%, 5%, ..., 100% of the configured budget.
pub fn summary_rows(archive: &Archive, budget_calls: u64) -> Vec<SummaryRow> {
    (0..=20u32)
        .map(|i| {
            let budget_pct = i * 5;
            let calls = budget_calls * u64::from(budget_pct) / 100;
            SummaryRow {
                budget_pct,
                calls,
                covered_targets: archive.covered_at_budget(calls),
            }
        })
        .collect()
}

impl SuiteArchive {
    pub fn from_archive(archive: &Archive, schema: &Schema, config: &SearchConfig) -> Self {
        let tests = archive
            .tests
            .iter()
            .enumerate()
            .map(|(id, t)| SuiteTest {
                id,
                admitted_at: t.admitted_at,
                new_targets: t.new_targets.clone(),
                calls: t
                    .test
                    .actions
                    .iter()
                    .zip(&t.calls)
                    .map(|(a, c)| SuiteCall {
                        operation: OpRef::of(a).to_string(),
                        request: c.request.clone(),
                        expected_status: c.classification.status,
                        expected_has_data: c.classification.has_data,
                        expected_has_errors: c.classification.has_errors,
                        error_messages: c.classification.error_messages.clone(),
                        faults: c.classification.faults.clone(),
                        covered_targets: c.classification.covered_targets.iter().cloned().collect(),
                    })
                    .collect(),
            })
            .collect();
        SuiteArchive {
            metadata: SuiteMetadata {
                format_version: SUITE_FORMAT_VERSION,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                seed: config.seed,
                config: config.clone(),
                schema_sha256: schema_hash(schema),
                calls_used: archive.calls_used,
                known_targets: archive.known_targets,
                covered_targets: archive.covered_count(),
            },
            stats: endpoint_stats(archive, schema),
            summary: summary_rows(archive, config.budget_calls),
            tests,
        }
    }

    /// Statistics recomputed from the archived calls.
    pub fn endpoint_stats(&self, schema: &Schema) -> Result<EndpointStats, ReportError> {
        let mut outcomes = Vec::new();
        for c in self.tests.iter().flat_map(|t| &t.calls) {
            let op: OpRef = c
                .operation
                .parse()
                .map_err(|_| ReportError::BadOperation(c.operation.clone()))?;
            outcomes.push((op, c.expected_has_data && !c.expected_has_errors, c.expected_has_errors));
        }
        Ok(EndpointStats::from_outcomes(
            schema,
            outcomes.iter().map(|(o, c, e)| (o, *c, *e)),
        ))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("suite serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("budget_pct,calls,covered_targets\n");
        for r in &self.summary {
            out.push_str(&format!("{},{},{}\n", r.budget_pct, r.calls, r.covered_targets));
        }
        out
    }
}

/// POSIX shell script that re-issues the test's calls with curl against
/// `$BASE_URL`. Extra arguments (e.g. `-H 'Authorization: ...'`) are passed
/// to every curl call.
pub fn reproduction_script(test: &SuiteTest) -> String {
    let mut s = String::from("#!/bin/sh\n");
    s.push_str(&format!("# Archived test {}.\n", test.id));
    for t in &test.new_targets {
        s.push_str(&format!("# covers first: {t}\n"));
    }
    s.push_str("# Usage: BASE_URL=http://host:port/graphql ./script.sh [extra curl args]\n");
    s.push_str("set -u\n: \"${BASE_URL:?set BASE_URL to the GraphQL endpoint}\"\n");
    for (i, c) in test.calls.iter().enumerate() {
        s.push_str(&format!(
            "\n# call {}: {} expects status {}\n",
            i + 1,
            c.operation,
            c.expected_status
        ));
        s.push_str(
            "curl -sS -X POST \"$BASE_URL\" -H 'Content-Type: application/json' \"$@\" --data-binary @- <<'GQLFUZZ_BODY'\n",
        );
        s.push_str(&wire_body(&c.request));
        s.push_str("\nGQLFUZZ_BODY\necho\n");
    }
    s
}

/// Files produced by [`write_suite`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteFiles {
    pub suite: PathBuf,
    pub summary: PathBuf,
    pub stats: PathBuf,
    pub scripts: Vec<PathBuf>,
}

pub fn write_suite(suite: &SuiteArchive, out_dir: &Path) -> Result<SuiteFiles, ReportError> {
    let scripts_dir = out_dir.join("scripts");
    fs::create_dir_all(&scripts_dir).map_err(io_err(&scripts_dir))?;
    let write = |path: PathBuf, text: &str| -> Result<PathBuf, ReportError> {
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    };
    let suite_path = write(out_dir.join("suite.json"), &suite.to_json())?;
    let summary = write(out_dir.join("summary.csv"), &suite.summary_csv())?;
    let mut stats_text = serde_json::to_string_pretty(&suite.stats)?;
    stats_text.push('\n');
    let stats = write(out_dir.join("stats.json"), &stats_text)?;
    let mut scripts = Vec::new();
    for t in &suite.tests {
        let path = write(
            scripts_dir.join(format!("test_{:03}.sh", t.id)),
            &reproduction_script(t),
        )?;
        make_executable(&path)?;
        scripts.push(path);
    }
    Ok(SuiteFiles {
        suite: suite_path,
        summary,
        stats,
        scripts,
    })
}

#[cfg(unix)]
fn make_executable(path: &Path) -> Result<(), ReportError> {
    use std::os::unix::fs::PermissionsExt;
    fs::set_permissions(path, fs::Permissions::from_mode(0o755)).map_err(io_err(path))
}

#[cfg(not(unix))]
fn make_executable(_: &Path) -> Result<(), ReportError> {
    Ok(())
}

/// Reads `suite.json` from a suite directory or a direct file path.
pub fn read_suite(path: &Path) -> Result<SuiteArchive, ReportError> {
    let file = if path.is_dir() {
        path.join("suite.json")
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&file).map_err(io_err(&file))?;
    SuiteArchive::from_json(&text)
}

/// Result of re-issuing one archived call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub test: usize,
    pub call: usize,
    pub expected: ResponseSummary,
    pub actual: ResponseSummary,
}

impl ReplayOutcome {
    pub fn matches(&self) -> bool {
        self.expected == self.actual
    }
}

/// The parts of a classification a replay re-checks. Feed-derived targets
/// are excluded since a replay may run without a coverage feed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseSummary {
    pub status: u16,
    pub has_data: bool,
    pub has_errors: bool,
    pub faults: Vec<FaultKind>,
    pub targets: Vec<TargetId>,
}

fn response_targets<'a>(targets: impl IntoIterator<Item = &'a TargetId>) -> Vec<TargetId> {
    targets
        .into_iter()
        .filter(|t| !matches!(t, TargetId::Coverage(_) | TargetId::ErrorAt(..)))
        .cloned()
        .collect()
}

pub fn replay(
    suite: &SuiteArchive,
    executor: &mut dyn Executor,
    classifier: &Classifier,
    schema: &Schema,
) -> Result<Vec<ReplayOutcome>, ReportError> {
    let mut out = Vec::new();
    for t in &suite.tests {
        for (i, c) in t.calls.iter().enumerate() {
            let op: OpRef = c
                .operation
                .parse()
                .map_err(|_| ReportError::BadOperation(c.operation.clone()))?;
            let actual = match executor.execute(&c.request) {
                Ok(r) => classifier.classify(r.status, &r.body, schema, &op),
                Err(_) => classifier.transport_failure(),
            };
            out.push(ReplayOutcome {
                test: t.id,
                call: i,
                expected: ResponseSummary {
                    status: c.expected_status,
                    has_data: c.expected_has_data,
                    has_errors: c.expected_has_errors,
                    faults: c.faults.clone(),
                    targets: response_targets(&c.covered_targets),
                },
                actual: ResponseSummary {
                    status: actual.status,
                    has_data: actual.has_data,
                    has_errors: actual.has_errors,
                    faults: actual.faults.clone(),
                    targets: response_targets(&actual.covered_targets),
                },
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{FieldDef, OperationKind, TypeDef, TypeRef};

    fn schema_with(n: usize) -> Schema {
        let fields = (0..n)
            .map(|i| FieldDef::new(format!("op{i}"), TypeRef::named("Int")))
            .collect();
        Schema::new("Query", None, [TypeDef::object("Query", fields)]).with_builtin_scalars()
    }

    fn op(i: usize) -> OpRef {
        OpRef::new(OperationKind::Query, format!("op{i}"))
    }

    #[test]
    fn all_endpoints_with_both_outcomes() {
        let ops: Vec<OpRef> = (0..7).map(op).collect();
        let outcomes = ops.iter().flat_map(|o| [(o, true, false), (o, false, true)]);
        let s = EndpointStats::from_outcomes(&schema_with(7), outcomes);
        assert_eq!(
            (s.endpoints, s.no_errors, s.with_errors, s.pct_no_errors, s.pct_with_errors),
            (7, 7, 7, 100.0, 100.0)
        );
        assert!(s.shares_bounded());
    }

    #[test]
    fn hand_counted_mixed_endpoints() {
        let ops: Vec<OpRef> = (0..10).map(op).collect();
        let mut outcomes = Vec::new();
        for o in &ops[0..4] {
            outcomes.push((o, true, false));
        }
        for o in &ops[4..7] {
            outcomes.push((o, false, true));
        }
        for o in &ops[7..10] {
            outcomes.push((o, true, false));
            outcomes.push((o, false, true));
        }
        let s = EndpointStats::from_outcomes(&schema_with(10), outcomes);
        assert_eq!(
            (s.endpoints, s.no_errors, s.with_errors, s.pct_no_errors, s.pct_with_errors),
            (10, 7, 6, 70.0, 60.0)
        );
    }

    #[test]
    fn zero_endpoints_are_guarded() {
        let schema = Schema::new("Query", None, [TypeDef::object("Query", vec![])]);
        let s = EndpointStats::from_outcomes(&schema, std::iter::empty());
        assert_eq!((s.pct_no_errors, s.pct_with_errors), (0.0, 0.0));
        assert!(s.diagnostic.is_some());
    }

    #[test]
    fn percentages_round_to_one_decimal() {
        assert_eq!(pct(1, 3), 33.3);
        assert_eq!(pct(2, 3), 66.7);
    }

    #[test]
    fn empty_archive_yields_a_valid_suite() {
        let schema = schema_with(2);
        let config = SearchConfig::default();
        let suite = SuiteArchive::from_archive(&Archive::default(), &schema, &config);
        assert!(suite.tests.is_empty());
        assert_eq!(suite.summary.len(), 21);
        let dir = tempfile::tempdir().unwrap();
        let files = write_suite(&suite, dir.path()).unwrap();
        assert!(files.scripts.is_empty());
        assert_eq!(read_suite(dir.path()).unwrap(), suite);
        let csv = fs::read_to_string(files.summary).unwrap();
        assert_eq!(csv.lines().count(), 22);
    }

    #[test]
    fn script_posts_the_exact_document() {
        let test = SuiteTest {
            id: 4,
            admitted_at: 10,
            new_targets: vec![],
            calls: vec![SuiteCall {
                operation: "mutation.removeSpecialty".into(),
                request: RequestBody {
                    query_text: "mutation{removeSpecialty(input:{specialtyId:643}){specialties{id}}}"
                        .into(),
                    operation_kind: OperationKind::Mutation,
                },
                expected_status: 200,
                expected_has_data: false,
                expected_has_errors: true,
                error_messages: vec![],
                faults: vec![],
                covered_targets: vec![],
            }],
        };
        let script = reproduction_script(&test);
        assert!(script.contains(
            "\n{\"query\":\"mutation{removeSpecialty(input:{specialtyId:643}){specialties{id}}}\"}\n"
        ));
        assert!(script.starts_with("#!/bin/sh\n"));
    }
}
