//! Command-line front end: schema extraction, template building, search and
//! suite writing.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::executor::{
    wire_body, CoverageFeed, ExecConfig, Executor, HttpCoverageFeed, HttpExecutor, DEFAULT_TIMEOUT_MS,
};
use crate::gene::{build_action_templates, sample, BuildLimits};
use crate::introspection::{build_introspection_query, parse_schema, parse_schema_text};
use crate::mock::{corpus, InProcessMock, MockServer};
use crate::printer::{print, RequestBody};
use crate::report::{write_suite, EndpointStats, SuiteArchive};
use crate::schema::{OperationKind, Schema};
use crate::search::{run, Algorithm, Problem, SearchConfig};
use crate::targets::{Classifier, EvalContext, OpRef, TargetRegistry};
use crate::validator::validate_query_text;

pub const EXIT_OK: i32 = 0;
/// A self-test fixture failed.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Random search over response targets only.
    Blackbox,
    /// MIO guided by a coverage feed.
    Whitebox,
}

#[derive(Debug, Parser)]
#[command(name = "gqlfuzz", version, about = "Search-based test generation for GraphQL APIs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// GraphQL endpoint; `/graphql` is appended when the URL has no path.
    #[arg(long)]
    pub url: Option<String>,
    /// Start a built-in mock service over HTTP and test it.
    #[arg(long, value_name = "NAME")]
    pub mock: Option<String>,
    #[arg(long, value_enum, default_value = "blackbox")]
    pub mode: Mode,
    /// Budget in HTTP calls.
    #[arg(long, default_value_t = 1000)]
    pub budget: u64,
    #[arg(long, env = "GQLFUZZ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Maximum requests per minute.
    #[arg(long, value_name = "PER_MIN")]
    pub rate_limit: Option<u32>,
    /// Extra request header as `Name: value`; repeatable.
    #[arg(long = "header", value_name = "NAME: VALUE")]
    pub headers: Vec<String>,
    #[arg(long, default_value_t = BuildLimits::default().depth_limit)]
    pub depth_limit: usize,
    #[arg(long, default_value_t = BuildLimits::default().max_string_len)]
    pub max_string_length: usize,
    #[arg(long, default_value_t = BuildLimits::default().max_array_size)]
    pub max_array_size: usize,
    #[arg(long, env = "GQLFUZZ_OUTPUT_DIR", default_value = "gqlfuzz-out")]
    pub output_dir: PathBuf,
    /// Introspection reply to use instead of querying the endpoint. Without
    /// a target this only prints one sample document per operation.
    #[arg(long)]
    pub schema_file: Option<PathBuf>,
    /// URL returning the coverage units hit since the previous request.
    #[arg(long)]
    pub coverage_feed_url: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    pub timeout_ms: u64,
    /// Fault patterns file with `name = regex` lines.
    #[arg(long)]
    pub patterns: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the built-in fixture suite against the mock corpus.
    Selftest {
        /// Fault patterns file with `name = regex` lines.
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
}

/// A failure mapped to an exit code.
struct Exit(i32, String);

fn config_err(msg: impl std::fmt::Display) -> Exit {
    Exit(EXIT_CONFIG, format!("configuration error: {msg}"))
}

fn schema_err(msg: impl std::fmt::Display) -> Exit {
    Exit(EXIT_SCHEMA, format!("schema extraction failed: {msg}"))
}

/// Runs the tool with stdout and stderr. `args` includes the program name.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Some(Command::Selftest { patterns }) => selftest_command(patterns.as_ref(), out),
        None => campaign(&cli, out),
    };
    match result {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            let _ = writeln!(err, "{msg}");
            if code == EXIT_CONFIG {
                let _ = writeln!(err, "run `gqlfuzz --help` for usage");
            }
            code
        }
    }
}

fn load_classifier(path: Option<&PathBuf>) -> Result<Classifier, String> {
    match path {
        None => Ok(Classifier::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Classifier::from_pattern_file(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn campaign(cli: &Cli, out: &mut dyn Write) -> Result<i32, Exit> {
    let limits = BuildLimits::new(cli.depth_limit, cli.max_string_length, cli.max_array_size)
        .map_err(config_err)?;
    let classifier = load_classifier(cli.patterns.as_ref()).map_err(config_err)?;
    if cli.url.is_some() && cli.mock.is_some() {
        return Err(config_err("--url and --mock are mutually exclusive"));
    }
    let server = match &cli.mock {
        Some(name) => {
            let spec = corpus::by_name(name).ok_or_else(|| {
                config_err(format!(
                    "unknown mock `{name}`; available: {}",
                    corpus::names().join(", ")
                ))
            })?;
            Some(MockServer::start(spec).map_err(config_err)?)
        }
        None => None,
    };
    let url = cli.url.clone().or_else(|| server.as_ref().map(MockServer::base_url));
    let Some(url) = url else {
        return match &cli.schema_file {
            Some(path) => offline(path, limits, cli.seed, out),
            None => Err(config_err("one of --url, --mock or --schema-file is required")),
        };
    };
    let feed_url = cli
        .coverage_feed_url
        .clone()
        .or_else(|| server.as_ref().map(MockServer::coverage_url));
    if cli.mode == Mode::Whitebox && feed_url.is_none() {
        return Err(config_err("whitebox mode needs --coverage-feed-url or --mock"));
    }

    let mut exec_cfg = ExecConfig::new(&url)
        .map_err(config_err)?
        .with_timeout_ms(cli.timeout_ms)
        .map_err(config_err)?;
    for h in &cli.headers {
        exec_cfg = exec_cfg.with_header(h).map_err(config_err)?;
    }
    if let Some(rate) = cli.rate_limit {
        exec_cfg = exec_cfg.with_rate_limit(rate).map_err(config_err)?;
    }
    let mut executor = HttpExecutor::new(exec_cfg);
    let mut feed = match (&feed_url, cli.mode) {
        (Some(u), Mode::Whitebox) => Some(HttpCoverageFeed::new(u, cli.timeout_ms).map_err(config_err)?),
        _ => None,
    };

    let schema = match &cli.schema_file {
        Some(path) => read_schema_file(path)?,
        None => introspect(&mut executor)?,
    };
    let templates = build_action_templates(&schema, limits).map_err(schema_err)?;
    let config = SearchConfig {
        budget_calls: cli.budget,
        seed: cli.seed,
        algorithm: match cli.mode {
            Mode::Blackbox => Algorithm::Random,
            Mode::Whitebox => Algorithm::Mio,
        },
        ..SearchConfig::default()
    };
    let registry = TargetRegistry::new();
    let mut problem = Problem {
        templates: &templates,
        ctx: EvalContext {
            schema: &schema,
            classifier: &classifier,
            executor: &mut executor,
            feed: feed.as_mut().map(|f| f as &mut dyn CoverageFeed),
            registry: &registry,
        },
    };
    let archive = run(&config, &mut problem).map_err(config_err)?;
    let suite = SuiteArchive::from_archive(&archive, &schema, &config);
    let files = write_suite(&suite, &cli.output_dir).map_err(|e| Exit(EXIT_FAILURE, e.to_string()))?;

    let _ = writeln!(
        out,
        "campaign finished: {} calls, {} of {} known targets covered, {} tests archived",
        archive.calls_used,
        archive.covered_count(),
        archive.known_targets,
        archive.tests.len()
    );
    let _ = write!(out, "{}", stats_table(&suite.stats));
    let _ = writeln!(out, "suite written to {}", files.suite.display());
    if let Some(s) = server {
        s.shutdown();
    }
    Ok(EXIT_OK)
}

fn read_schema_file(path: &PathBuf) -> Result<Schema, Exit> {
    let text = std::fs::read_to_string(path).map_err(|e| schema_err(format!("{}: {e}", path.display())))?;
    parse_schema_text(&text).map_err(schema_err)
}

fn introspect(executor: &mut HttpExecutor) -> Result<Schema, Exit> {
    let body = RequestBody {
        query_text: build_introspection_query(),
        operation_kind: OperationKind::Query,
    };
    let reply = executor.post_json(&wire_body(&body)).map_err(schema_err)?;
    if reply.status != 200 {
        return Err(schema_err(format!("introspection returned status {}", reply.status)));
    }
    let value: serde_json::Value = serde_json::from_slice(&reply.body)
        .map_err(|e| schema_err(format!("introspection reply is not JSON: {e}")))?;
    parse_schema(&value).map_err(schema_err)
}

fn offline(path: &PathBuf, limits: BuildLimits, seed: u64, out: &mut dyn Write) -> Result<i32, Exit> {
    let schema = read_schema_file(path)?;
    let templates = build_action_templates(&schema, limits).map_err(schema_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let _ = writeln!(out, "{} operations; one sample document each:", templates.len());
    for t in &templates {
        let body = print(&sample(t, &mut rng)).map_err(schema_err)?;
        let _ = writeln!(out, "{}", body.query_text);
    }
    Ok(EXIT_OK)
}

/// Fixed-width table of an endpoint statistics record.
pub fn stats_table(s: &EndpointStats) -> String {
    let mut t = format!(
        "{:>10} {:>10} {:>12} {:>11} {:>13}\n",
        "endpoints", "no-errors", "with-errors", "%no-errors", "%with-errors"
    );
    t.push_str(&format!(
        "{:>10} {:>10} {:>12} {:>11.1} {:>13.1}\n",
        s.endpoints, s.no_errors, s.with_errors, s.pct_no_errors, s.pct_with_errors
    ));
    if let Some(d) = &s.diagnostic {
        t.push_str(&format!("note: {d}\n"));
    }
    t
}

/// One self-test fixture outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureResult {
    pub name: String,
    pub outcome: Result<(), String>,
}

/// Draws per operation at most this many samples when looking for a
/// document that triggers a scripted fault.
const FAULT_SEARCH_DRAWS: usize = 2_000;
const VALIDITY_SAMPLES: usize = 200;

/// Runs the fixture suite: introspection round trips, printed-document
/// validity and fault classification for every corpus service.
pub fn selftest(classifier: &Classifier) -> Vec<FixtureResult> {
    let mut results = Vec::new();
    for spec in corpus::corpus() {
        let mut mock = InProcessMock::new(spec.clone()).expect("corpus specs are consistent");
        results.push(FixtureResult {
            name: format!("{}: introspection round trip", spec.name),
            outcome: round_trip(&mut mock, &spec.schema),
        });
        let templates = match build_action_templates(&spec.schema, BuildLimits::default()) {
            Ok(t) => t,
            Err(e) => {
                results.push(FixtureResult {
                    name: format!("{}: templates", spec.name),
                    outcome: Err(e.to_string()),
                });
                continue;
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let invalid = (0..VALIDITY_SAMPLES)
            .map(|i| print(&sample(&templates[i % templates.len()], &mut rng)))
            .filter_map(|b| match b {
                Ok(b) => validate_query_text(&b.query_text).err().map(|d| format!("{}: {:?}", b.query_text, d)),
                Err(e) => Some(e.to_string()),
            })
            .next();
        results.push(FixtureResult {
            name: format!("{}: printed documents are valid", spec.name),
            outcome: invalid.map_or(Ok(()), Err),
        });
        for script in &spec.faults {
            let outcome = (|| {
                let template = templates
                    .iter()
                    .find(|t| t.operation_name == script.kind.op())
                    .ok_or("operation has no template")?;
                let unit = format!("{}/fault/{}", script.kind.op(), script.kind.label());
                let op = OpRef::of(template);
                let _ = mock.poll();
                for _ in 0..FAULT_SEARCH_DRAWS {
                    let body = print(&sample(template, &mut rng)).map_err(|e| e.to_string())?;
                    let reply = mock.execute(&body).map_err(|e| e.to_string())?;
                    if !mock.poll().unwrap_or_default().contains(&unit) {
                        continue;
                    }
                    let c = classifier.classify(reply.status, &reply.body, &spec.schema, &op);
                    let expected = script.kind.expected_faults();
                    return if c.faults == expected {
                        Ok(())
                    } else {
                        Err(format!("expected {expected:?}, got {:?}", c.faults))
                    };
                }
                Err("fault never triggered".to_string())
            })();
            results.push(FixtureResult {
                name: format!("{}: fault {} on {}", spec.name, script.kind.label(), script.kind.op()),
                outcome,
            });
        }
    }
    results
}

fn round_trip(mock: &mut InProcessMock, schema: &Schema) -> Result<(), String> {
    let reply = mock
        .execute(&RequestBody {
            query_text: build_introspection_query(),
            operation_kind: OperationKind::Query,
        })
        .map_err(|e| e.to_string())?;
    let value: serde_json::Value = serde_json::from_slice(&reply.body).map_err(|e| e.to_string())?;
    let parsed = parse_schema(&value).map_err(|e| e.to_string())?;
    if &parsed == schema {
        Ok(())
    } else {
        Err("parsed schema differs from the served one".into())
    }
}

fn selftest_command(patterns: Option<&PathBuf>, out: &mut dyn Write) -> Result<i32, Exit> {
    let classifier = match load_classifier(patterns) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(out, "FAIL patterns: {e}");
            return Ok(EXIT_FAILURE);
        }
    };
    let results = selftest(&classifier);
    let mut failed = 0;
    for r in &results {
        match &r.outcome {
            Ok(()) => {
                let _ = writeln!(out, "PASS {}", r.name);
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(out, "FAIL {}: {e}", r.name);
            }
        }
    }
    let _ = writeln!(out, "{} passed, {failed} failed", results.len() - failed);
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}
