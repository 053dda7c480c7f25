//! Instance generators, reliability estimates and the two parameter studies.

mod knapsack;
mod reliability;
mod report;
mod rng;
mod study;
mod transport;

use thiserror::Error;

use crate::model::ModelError;
use crate::reformulate::ReformError;
use crate::solve::SolveError;

pub use knapsack::{exact_optimum, generate_knapsack, KnapsackInstance, DEFAULT_CAPACITY, ENUMERATION_MAX_ITEMS};
pub use reliability::{estimate_reliability, RealizedConstraint, TransportCandidate};
pub use report::{improvement, optimality_gap, quantile, AggregateRow, ReportRow, StudyReport};
pub use rng::{stream, Stream};
pub use study::{
    run_knapsack_study, run_transport_study, solve_transport_saa, KnapsackStudyConfig, TransportStudyConfig,
};
pub use transport::{
    cost_tolerance, estimate_transport_reliability, generate_transport, transport_cost, CostDraws, TransportInstance,
    TransportParams,
};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("internal defect: {0}")]
    Defect(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Reform(#[from] ReformError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("report output failed: {0}")]
    Output(String),
}
