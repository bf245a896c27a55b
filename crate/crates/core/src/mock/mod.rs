//! Configurable mock GraphQL services with scripted faults and a coverage
//! feed, used as systems under test.

pub mod corpus;
mod engine;
mod server;
mod spec;

use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Instant;

pub use engine::{LoggedRequest, MockEngine, MockReply};
pub use server::MockServer;
pub use spec::{
    ArgPath, CoverageRule, FaultScript, FaultScriptKind, Resolver, SpecError, SutSpec, Trigger,
    UnitCondition,
};

use crate::executor::{wire_body, CoverageFeed, Executor, RawReply, TransportError};
use crate::printer::RequestBody;

/// A mock answered in-process, without sockets. Clones share state.
#[derive(Debug, Clone)]
pub struct InProcessMock {
    engine: Arc<Mutex<MockEngine>>,
}

impl InProcessMock {
    pub fn new(spec: SutSpec) -> Result<Self, SpecError> {
        Ok(InProcessMock {
            engine: Arc::new(Mutex::new(MockEngine::new(spec)?)),
        })
    }

    pub fn engine(&self) -> MutexGuard<'_, MockEngine> {
        self.engine.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl Executor for InProcessMock {
    fn execute(&mut self, body: &RequestBody) -> Result<RawReply, TransportError> {
        let start = Instant::now();
        let wire = wire_body(body);
        let mut engine = self.engine();
        engine.record(LoggedRequest {
            method: "POST".into(),
            path: "/graphql".into(),
            headers: vec![("Content-Type".into(), "application/json".into())],
            body: wire.clone(),
        });
        let reply = engine.handle_graphql(wire.as_bytes());
        Ok(RawReply {
            status: reply.status,
            content_type: reply.content_type,
            body: reply.body.into_bytes(),
            elapsed_ms: start.elapsed().as_millis() as u64,
        })
    }
}

impl CoverageFeed for InProcessMock {
    fn poll(&mut self) -> Result<Vec<String>, TransportError> {
        Ok(self.engine().poll_coverage())
    }

    fn known_units(&mut self) -> Vec<String> {
        self.engine().known_units()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{ExecConfig, HttpCoverageFeed, HttpExecutor};
    use crate::introspection::parse_schema;
    use crate::schema::OperationKind;
    use crate::targets::{Classifier, FaultKind, OpRef};

    fn send(mock: &mut InProcessMock, kind: OperationKind, query: &str) -> RawReply {
        mock.execute(&RequestBody {
            query_text: query.into(),
            operation_kind: kind,
        })
        .expect("in-process call")
    }

    fn body_json(r: &RawReply) -> serde_json::Value {
        serde_json::from_slice(&r.body).expect("json body")
    }

    #[test]
    fn every_corpus_spec_is_consistent() {
        for spec in corpus::corpus() {
            spec.check().unwrap_or_else(|e| panic!("{}: {e}", spec.name));
        }
        assert_eq!(corpus::corpus().len(), 5);
    }

    #[test]
    fn introspection_round_trips() {
        for spec in corpus::corpus() {
            let mut mock = InProcessMock::new(spec.clone()).unwrap();
            let r = send(&mut mock, OperationKind::Query, "{__schema{queryType{name}}}");
            assert_eq!(r.status, 200);
            assert_eq!(parse_schema(&body_json(&r)).unwrap(), spec.schema, "{}", spec.name);
        }
    }

    #[test]
    fn bahnql_null_propagates_to_nullable_root() {
        let mut mock = InProcessMock::new(corpus::bahnql()).unwrap();
        let r = send(
            &mut mock,
            OperationKind::Query,
            "{parkingSpace(id:42){id location{latitude longitude}}}",
        );
        assert_eq!(r.status, 200);
        let v = body_json(&r);
        assert_eq!(v["data"], serde_json::json!({"parkingSpace": null}));
        assert_eq!(
            v["errors"][0]["message"],
            "Cannot return null for non-nullable field Location.latitude."
        );
        assert_eq!(
            v["errors"][0]["path"],
            serde_json::json!(["parkingSpace", "location", "latitude"])
        );
        let ok = send(&mut mock, OperationKind::Query, "{parkingSpace(id:2){location{latitude}}}");
        assert!(body_json(&ok).get("errors").is_none());
    }

    #[test]
    fn scripted_faults_classify_exactly() {
        let classifier = Classifier::default();
        let cases: [(fn() -> SutSpec, OperationKind, &str, &str); 5] = [
            (corpus::bahnql, OperationKind::Query, "parkingSpace", "{parkingSpace(id:9){location{latitude}}}"),
            (corpus::kitchen_sink, OperationKind::Mutation, "removeSpecialty", "mutation{removeSpecialty(input:{specialtyId:643}){specialties{id}}}"),
            (corpus::kitchen_sink, OperationKind::Query, "theme", "{theme(conferenceId:\"x\"){name}}"),
            (corpus::petclinic, OperationKind::Query, "pets", "{pets{visits{totalCount}}}"),
            (corpus::kitchen_sink, OperationKind::Query, "search", "{search(filter:{color:RED}){...on Book{id}}}"),
        ];
        for (make, kind, op, query) in cases {
            let spec = make();
            let script = spec.faults.iter().find(|f| f.kind.op() == op).unwrap().kind.clone();
            let mut mock = InProcessMock::new(spec.clone()).unwrap();
            let r = send(&mut mock, kind, query);
            let c = classifier.classify(r.status, &r.body, &spec.schema, &OpRef::new(kind, op));
            assert_eq!(c.faults, script.expected_faults(), "{op}");
            let units = mock.poll().unwrap();
            assert_eq!(units.last().unwrap(), &format!("{op}/fault/{}", script.label()));
        }
    }

    #[test]
    fn petclinic_null_owner_name_reports_full_path() {
        let spec = corpus::petclinic();
        let mut mock = InProcessMock::new(spec.clone()).unwrap();
        let r = send(&mut mock, OperationKind::Query, "{pets{id owner{lastName}}}");
        let v = body_json(&r);
        assert_eq!(v["data"], serde_json::Value::Null);
        let c = Classifier::default().classify(
            r.status,
            &r.body,
            &spec.schema,
            &OpRef::new(OperationKind::Query, "pets"),
        );
        assert!(c.faults.contains(&FaultKind::NonNullViolation {
            path: "pets.owner.lastName".into()
        }));
    }

    #[test]
    fn invalid_documents_get_400() {
        let mut mock = InProcessMock::new(corpus::petclinic()).unwrap();
        for q in ["{pets}", "{pets{nope}}", "{pets{id", "{pets{id{x}}}", "subscription{pets{id}}"] {
            let r = send(&mut mock, OperationKind::Query, q);
            assert_eq!(r.status, 400, "{q}");
            assert!(body_json(&r)["errors"].as_array().is_some_and(|e| !e.is_empty()));
        }
        let mut ks = InProcessMock::new(corpus::kitchen_sink()).unwrap();
        for q in ["{book{id}}", "{book(id:\"1\",x:1){id}}", "{search(filter:{color:PINK}){...on Book{id}}}"] {
            assert_eq!(send(&mut ks, OperationKind::Query, q).status, 400, "{q}");
        }
    }

    #[test]
    fn replies_and_units_are_deterministic() {
        let queries = [
            "{explore{f1 f2 next{f3 next{f4 f5}}}}",
            "{explore{__typename f12}}",
        ];
        let run = || {
            let mut mock = InProcessMock::new(corpus::deep_nesting()).unwrap();
            queries
                .iter()
                .map(|q| {
                    let r = send(&mut mock, OperationKind::Query, q);
                    (r.body, mock.poll().unwrap())
                })
                .collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(
            a[0].1,
            vec!["explore/d1/k1", "explore/d1/k2", "explore/d2/k1", "explore/d3/k1", "explore/d3/k2"]
        );
        assert_eq!(a[1].1, vec!["explore/d1/k1"]);
    }

    #[test]
    fn union_and_interface_values_respect_fragments() {
        let mut mock = InProcessMock::new(corpus::kitchen_sink()).unwrap();
        let r = send(
            &mut mock,
            OperationKind::Query,
            "{search(first:3){__typename ...on Book{title} ...on Author{name}}}",
        );
        let v = body_json(&r);
        for item in v["data"]["search"].as_array().unwrap() {
            match item["__typename"].as_str().unwrap() {
                "Book" => assert!(item.get("title").is_some() && item.get("name").is_none()),
                "Author" => assert!(item.get("name").is_some() && item.get("title").is_none()),
                other => panic!("unexpected {other}"),
            }
        }
    }

    #[test]
    fn http_server_logs_headers_and_serves_coverage() {
        let server = MockServer::start(corpus::petclinic()).unwrap();
        let exec = HttpExecutor::new(
            ExecConfig::new(&server.base_url())
                .unwrap()
                .with_header("Authorization: Bearer abc")
                .unwrap(),
        );
        let r = exec.post_json(r#"{"query":"{pets{id}}"}"#).unwrap();
        assert_eq!(r.status, 200);
        let mut feed = HttpCoverageFeed::new(&server.coverage_url(), 5_000).unwrap();
        assert_eq!(feed.poll().unwrap(), vec!["pets/called"]);
        assert!(feed.poll().unwrap().is_empty());
        assert_eq!(feed.known_units().len(), 6);
        let log = server.log();
        assert_eq!(log[0].path, "/graphql");
        assert_eq!(log[0].body, r#"{"query":"{pets{id}}"}"#);
        assert!(log[0]
            .headers
            .iter()
            .any(|(k, v)| k.eq_ignore_ascii_case("authorization") && v == "Bearer abc"));
        server.shutdown();
    }
}
