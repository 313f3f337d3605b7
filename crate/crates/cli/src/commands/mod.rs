pub mod fit;
pub mod report;
pub mod simulate_prior;
pub mod synth;
