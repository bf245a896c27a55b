pub mod cli;
pub mod executor;
pub mod gene;
pub mod introspection;
pub mod mock;
pub mod printer;
pub mod report;
pub mod schema;
pub mod search;
pub mod targets;
pub mod validator;
