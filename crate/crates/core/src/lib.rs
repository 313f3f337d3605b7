//! Temporally dependent random partition models.
//!
//! A sequence of partitions `ρ₁, …, ρ_T` of the same `m` units is linked by
//! per-unit reallocation indicators: at each step a unit either keeps its
//! cluster relation with the other retained units or is reseated from the
//! marginal partition law. The crate provides the partition algebra, the CRP
//! and spatial product partition laws, forward prior simulation with exact
//! small-instance conditionals, a Gibbs sampler for hierarchical Gaussian
//! models built on the prior, and posterior summaries for model comparison.

pub mod eppf;
pub mod error;
pub mod gibbs;
pub mod partition;
pub mod prior;
pub mod rng;
pub mod selection;
pub mod stats;
pub mod synth;

pub use eppf::{
    crp_log_prob, niw_log_marginal, seating_log_weights, sppm_log_weight, EppfKind, EppfSpec,
};
pub use error::{Error, Result};
pub use gibbs::{run_chain, ChainOutput, Dataset, McmcState, ModelConfig, Sampler, Toggles};
pub use partition::{adjusted_rand_index, enumerate_partitions, is_compatible, GammaVector, Partition};
pub use selection::{
    coclustering_matrix, estimate_report, lpml, point_estimate_partition, waic, EstimateReport,
    PartitionLoss,
};
pub use prior::{
    exact_conditional_table, lagged_ari_summary, sample_joint_prior, LagStat, PriorDraw, TrpmParams,
};
