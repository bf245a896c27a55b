use gqlfuzz::cli::{run_with, EXIT_OK};
use gqlfuzz::executor::{ExecConfig, HttpExecutor};
use gqlfuzz::mock::{corpus, InProcessMock, MockServer};
use gqlfuzz::report::{read_suite, replay};
use gqlfuzz::targets::Classifier;

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(
        std::iter::once("gqlfuzz").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn blackbox_campaign_against_http_mock_writes_suite_and_forwards_headers() {
    let server = MockServer::start(corpus::petclinic()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let url = server.base_url();
    let (code, out, err) = cli(&[
        "--url",
        &url,
        "--mode",
        "blackbox",
        "--budget",
        "1000",
        "--seed",
        "1",
        "--header",
        "Authorization: Bearer X",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("suite written to"));
    assert!(out.contains("%with-errors"));

    let log = server.log();
    // introspection plus the budget
    assert_eq!(log.iter().filter(|r| r.path == "/graphql").count(), 1001);
    assert!(log.iter().all(|r| r
        .headers
        .iter()
        .any(|(k, v)| k.eq_ignore_ascii_case("authorization") && v == "Bearer X")));

    let suite = read_suite(dir.path()).unwrap();
    assert_eq!(suite.metadata.calls_used, 1000);
    assert!(dir.path().join("summary.csv").exists());
    assert!(dir.path().join("stats.json").exists());
    assert_eq!(
        std::fs::read_dir(dir.path().join("scripts")).unwrap().count(),
        suite.tests.len()
    );

    let exec = HttpExecutor::new(ExecConfig::new(&url).unwrap());
    let mut exec = exec;
    let outcomes = replay(&suite, &mut exec, &Classifier::default(), &corpus::petclinic().schema).unwrap();
    assert!(!outcomes.is_empty());
    assert!(outcomes.iter().all(|o| o.matches()), "{outcomes:?}");
}

#[test]
fn whitebox_campaign_uses_the_coverage_feed() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = cli(&[
        "--mock",
        "deep-nesting",
        "--mode",
        "whitebox",
        "--budget",
        "300",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("known targets covered"));
    let suite = read_suite(dir.path()).unwrap();
    assert!(suite
        .tests
        .iter()
        .flat_map(|t| &t.new_targets)
        .any(|t| t.to_string().starts_with("cov:explore/")));
}

#[test]
fn offline_schema_file_prints_samples() {
    let mut mock = InProcessMock::new(corpus::kitchen_sink()).unwrap();
    let reply = gqlfuzz::executor::Executor::execute(
        &mut mock,
        &gqlfuzz::printer::RequestBody {
            query_text: gqlfuzz::introspection::build_introspection_query(),
            operation_kind: gqlfuzz::schema::OperationKind::Query,
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("schema.json");
    std::fs::write(&path, &reply.body).unwrap();
    let (code, out, _) = cli(&["--schema-file", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("7 operations"));
}

#[test]
fn malformed_schema_file_exits_with_schema_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("schema.json");
    std::fs::write(&path, "{\"data\":{}}").unwrap();
    let (code, _, err) = cli(&["--schema-file", path.to_str().unwrap()]);
    assert_eq!(code, gqlfuzz::cli::EXIT_SCHEMA, "{err}");
}
