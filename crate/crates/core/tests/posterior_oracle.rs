//! Stationary distribution of the sampler on a three-unit, two-time-point
//! instance against brute-force enumeration of the posterior over partition
//! pairs.

mod support;

use std::collections::HashMap;

use support::toy_posterior::ToyModel;
use tempart_core::gibbs::{Dataset, ModelConfig, Sampler};
use tempart_core::Partition;

#[test]
fn stationary_pairs_match_enumeration() {
    let toy = ToyModel {
        theta: [0.0, 0.5],
        tau: 1.2,
        a_sigma: 2.0,
        mass: 1.0,
    };
    let y = [[-1.0, -0.8], [-0.4, 1.4], [1.3, 1.1]];
    let exact = toy.exact_posterior(&y);
    let s: f64 = exact.values().sum();
    assert!((s - 1.0).abs() < 1e-12);

    let data = Dataset::new(y.iter().map(|r| r.to_vec()).collect()).unwrap();
    let mut config = ModelConfig::default();
    config.toggles.partition_dependence = true;
    config.prior.a_sigma = toy.a_sigma;
    config.fixed.theta = Some(toy.theta.to_vec());
    config.fixed.tau = Some(toy.tau);
    config.mcmc.seed = 17;
    let mut sampler = Sampler::new(data, config).unwrap();
    for _ in 0..2_000 {
        sampler.sweep().unwrap();
    }
    let n = 100_000;
    let mut counts: HashMap<(Partition, Partition), usize> = HashMap::new();
    for _ in 0..n {
        sampler.sweep().unwrap();
        let st = sampler.state();
        let key = (st.slices[0].partition(), st.slices[1].partition());
        *counts.entry(key).or_default() += 1;
    }
    let mut tv = 0.0;
    let mut rows: Vec<_> = exact.iter().collect();
    rows.sort_by(|a, b| b.1.total_cmp(a.1));
    for (key, &p) in &rows {
        let f = counts.get(key).copied().unwrap_or(0) as f64 / n as f64;
        tv += 0.5 * (f - p).abs();
        if p > 0.01 {
            println!("{} {}: exact {p:.4} sampled {f:.4}", key.0, key.1);
        }
    }
    println!("total variation {tv:.4}");
    assert!(tv < 0.02, "total variation {tv}");
}
