//! Threshold rate allocation for resource-sharing networks in heavy traffic.
//!
//! The crate covers the static model ([`network`]), the workload cost and its
//! minimizers ([`workload`]), viable rankings ([`ranking`]), the threshold
//! policy ([`policy`]), a Markov-chain simulator ([`sim`]), the reflected
//! Brownian reference ([`diffusion`]) and experiment orchestration ([`harness`]).

pub mod bitset;
pub mod diffusion;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod lp;
pub mod netfile;
pub mod network;
pub mod policy;
pub mod ranking;
pub mod scalar;
pub mod sim;
pub mod stats;
pub mod workload;

pub use bitset::BitSet;
pub use error::{Error, Result};
pub use network::{JobDef, NetworkSpec, ScaledParams, Topology, ValidationReport, Violation};
pub use policy::{ControlState, Policy, PolicyParams};
pub use ranking::{find_viable_ranking, Ranking};
pub use scalar::{Rational, Scalar};
pub use sim::{simulate, CostReport, RunStats, SimConfig, Simulator};
pub use stats::Summary;
pub use workload::{classify, lp_min_cost, qstar, CostSolution, JobClassification, WorkloadCost};
