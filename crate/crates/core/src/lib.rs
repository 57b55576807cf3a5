pub mod auth;
pub mod doc;
pub mod engine;
pub mod http;
pub mod openapi;
pub mod oracles;
pub mod pointer;
pub mod report;
pub mod schema;
pub mod stats;
pub mod testgen;

pub type ResultMatrix = stats::ResultMatrix<f64>;
pub type RankMatrix = stats::RankMatrix<f64>;
pub type FriedmanResult = stats::FriedmanResult<f64>;
pub type ColumnSummary = stats::ColumnSummary<f64>;
