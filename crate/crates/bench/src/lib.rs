//! Fixtures shared by the benchmarks.

use tempart_core::rng::stream;
use tempart_core::synth::{sim1, Sim1Params, SynthData};
use tempart_core::{Dataset, ModelConfig, Toggles};

/// A simulation-1 panel of `m` units over `n_times` steps.
pub fn panel(m: usize, n_times: usize, alpha: f64, seed: u64) -> SynthData {
    let p = Sim1Params {
        m,
        n_times,
        alpha,
        ..Sim1Params::default()
    };
    sim1(&p, &mut stream(seed, 0)).expect("valid design")
}

pub fn dataset(data: &SynthData) -> Dataset {
    Dataset::new(data.y.clone()).expect("finite panel")
}

/// Full tRPM with both AR(1) layers.
pub fn full_model(seed: u64) -> ModelConfig {
    let mut c = ModelConfig::default();
    c.toggles = Toggles {
        partition_dependence: true,
        likelihood_ar: true,
        atom_ar: true,
        ..c.toggles
    };
    c.mcmc.seed = seed;
    c
}
