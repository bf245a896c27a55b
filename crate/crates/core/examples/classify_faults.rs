//! Sends one fault-triggering query per seeded fault script and prints how
//! each reply is classified.
//!
//! cargo run --example classify_faults

use gqlfuzz::executor::Executor;
use gqlfuzz::mock::{corpus, InProcessMock};
use gqlfuzz::printer::RequestBody;
use gqlfuzz::schema::OperationKind;
use gqlfuzz::targets::{Classifier, OpRef};

fn main() {
    let classifier = Classifier::default();
    let cases = [
        ("bahnql", OperationKind::Query, "parkingSpace", "{parkingSpace(id:9){location{latitude}}}"),
        ("petclinic", OperationKind::Query, "pets", "{pets{visits{totalCount}}}"),
        ("petclinic", OperationKind::Query, "pets", "{pets{owner{lastName}}}"),
        ("kitchen-sink", OperationKind::Query, "theme", "{theme(conferenceId:\"x\"){name}}"),
        ("kitchen-sink", OperationKind::Query, "search", "{search(filter:{color:RED}){...on Book{title}}}"),
        (
            "kitchen-sink",
            OperationKind::Mutation,
            "removeSpecialty",
            "mutation{removeSpecialty(input:{specialtyId:643}){specialties{id}}}",
        ),
    ];
    for (name, kind, op, query) in cases {
        let spec = corpus::by_name(name).unwrap();
        let mut mock = InProcessMock::new(spec.clone()).unwrap();
        let reply = mock
            .execute(&RequestBody {
                query_text: query.into(),
                operation_kind: kind,
            })
            .unwrap();
        let c = classifier.classify(reply.status, &reply.body, &spec.schema, &OpRef::new(kind, op));
        println!("{name}: {query}");
        println!("  status {} faults {:?}", c.status, c.faults);
        for t in &c.covered_targets {
            println!("  target {t}");
        }
    }
}
