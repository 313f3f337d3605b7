//! Posterior simulation for the hierarchical Gaussian model with a temporal
//! partition prior, AR(1) likelihood and AR(1) time-level means. Each link can
//! be switched off, giving the eight variants compared in model selection.

mod config;
mod data;
pub mod model;
mod output;
mod sampler;
mod state;

pub use config::{FixedParams, McmcSettings, ModelConfig, PriorHyper, ProposalScales, Toggles};
pub use data::Dataset;
pub use output::{run_chain, run_chain_with, ChainOutput, Draw, Series};
pub use sampler::{eppf_for, initial_state, Acceptance, MoveCount, Sampler};
pub use state::{McmcState, TimeSlice};
