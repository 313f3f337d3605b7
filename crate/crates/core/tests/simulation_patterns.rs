use tempart_core::synth::{sim2_autocorrelation, Sim2Params};

fn acf(alpha: f64, phi1: f64) -> (f64, f64) {
    let p = Sim2Params {
        alpha,
        phi1,
        ..Default::default()
    };
    sim2_autocorrelation(&p, 100, 2024).unwrap()
}

#[test]
fn no_response_correlation_without_linked_atoms() {
    for (alpha, phi1) in [(0.9, 0.0), (0.0, 0.9), (0.0, 0.0)] {
        let (mean, se) = acf(alpha, phi1);
        println!("alpha={alpha} phi1={phi1}: lag-1 acf {mean:.4} ({se:.4})");
        assert!(mean.abs() < 3.0 * se);
    }
}

#[test]
fn response_correlation_grows_with_atom_persistence() {
    let values: Vec<(f64, f64)> = [0.25, 0.75, 0.9].iter().map(|&phi| acf(0.9, phi)).collect();
    println!("{values:?}");
    for w in values.windows(2) {
        assert!(w[1].0 > w[0].0);
    }
}
