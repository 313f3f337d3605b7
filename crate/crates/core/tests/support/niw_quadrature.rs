//! Numerical-integration value of the NIW marginal likelihood.
//!
//! The mean is integrated out analytically given the covariance (the stacked
//! points are jointly Gaussian with covariance `(I + 11ᵀ) ⊗ V`), and the
//! remaining three-dimensional integral over `V ~ IW(ν₀, I)` is evaluated with
//! the trapezoid rule on a log-Cholesky parametrization.

use statrs::function::gamma::ln_gamma;

fn log_mvn_zero_mean(x: &[f64], cov: &[f64], dim: usize) -> f64 {
    // plain Cholesky
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = cov[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    let mut z = vec![0.0; dim];
    for i in 0..dim {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * dim + k] * z[k];
        }
        z[i] = s / l[i * dim + i];
    }
    let log_det: f64 = (0..dim).map(|i| 2.0 * l[i * dim + i].ln()).sum();
    let quad: f64 = z.iter().map(|v| v * v).sum();
    -0.5 * (dim as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
}

/// `log ∫ Π N(xᵢ; μ, V) dNIW(μ, V)` with `μ | V ~ N(0, V)`, `V ~ IW(ν₀, I)`.
pub fn quadrature_marginal(points: &[[f64; 2]], nu0: f64) -> f64 {
    let n = points.len();
    let dim = 2 * n;
    let x: Vec<f64> = points.iter().flat_map(|p| p.iter().copied()).collect();
    let ln_gamma2 = 0.5 * std::f64::consts::PI.ln() + ln_gamma(nu0 / 2.0) + ln_gamma(nu0 / 2.0 - 0.5);
    let log_iw_const = -nu0 * std::f64::consts::LN_2 - ln_gamma2;

    let h = 0.15;
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        let steps = ((hi - lo) / h).round() as usize;
        (0..=steps).map(|s| lo + s as f64 * h).collect()
    };
    let us = grid(-7.0, 5.0);
    let zs = grid(-9.0, 9.0);
    let mut total = 0.0;
    let mut cov = vec![0.0; dim * dim];
    for &u in &us {
        let a = u.exp();
        for &w in &us {
            let c = w.exp();
            for &z in &zs {
                let b = a * c * z;
                let v = [a * a, a * b, a * b, b * b + c * c];
                let det = a * a * c * c;
                let trace_inv = (v[0] + v[3]) / det;
                let log_iw = log_iw_const - 0.5 * (nu0 + 3.0) * det.ln() - 0.5 * trace_inv;
                for p in 0..n {
                    for q in 0..n {
                        let factor = if p == q { 2.0 } else { 1.0 };
                        for r in 0..2 {
                            for s in 0..2 {
                                cov[(2 * p + r) * dim + 2 * q + s] = factor * v[2 * r + s];
                            }
                        }
                    }
                }
                let log_lik = log_mvn_zero_mean(&x, &cov, dim);
                // Jacobian of (u, z, w) -> V: 4 a^3 c^2 * (a c)
                let log_jac = (4.0f64).ln() + 4.0 * a.ln() + 3.0 * c.ln();
                total += (log_iw + log_lik + log_jac).exp();
            }
        }
    }
    (total * h * h * h).ln()
}
