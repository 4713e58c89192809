//! Spectral densities, ARMA families and the shared quadrature engine.

mod family;
mod quadrature;

pub use family::{
    coeffs_to_partials, make_arma_family, partials_to_coeffs, ArmaFamily, ArmaSpectrum, Encoding,
    GridEval, ParamVector, PointEval,
};
pub use quadrature::{default_node_count, default_quadrature, gauss_legendre, QuadratureRule};

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::focus::FocusWeight;

/// A symmetric, nonnegative spectral density on [−π, π].
pub trait SpectralDensity: Send + Sync {
    fn density(&self, omega: f64) -> f64;

    /// Density tabulated on the nodes of `q`.
    fn on_grid(&self, q: &QuadratureRule) -> Vec<f64> {
        q.nodes().iter().map(|&w| self.density(w)).collect()
    }
}

/// Wraps a closure as a [`SpectralDensity`].
pub struct DensityFn<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> SpectralDensity for DensityFn<F> {
    fn density(&self, omega: f64) -> f64 {
        (self.0)(omega)
    }
}

/// C(k) = 2∫₀^π cos(kω) f(ω) dω.
pub fn autocovariance(f: &dyn SpectralDensity, lag: usize, q: &QuadratureRule) -> f64 {
    let k = lag as f64;
    2.0 * q.integrate(|w| (k * w).cos() * f.density(w))
}

/// C(0), …, C(max_lag) from density values tabulated on `q`.
///
/// Uses the Chebyshev recurrence cos((k+1)ω) = 2cos ω cos(kω) − cos((k−1)ω)
/// node by node, so the cost is O(max_lag · nodes) without trig calls.
pub fn autocovariances_from_grid(values: &[f64], max_lag: usize, q: &QuadratureRule) -> Vec<f64> {
    assert_eq!(values.len(), q.len());
    let fw: Vec<f64> = values
        .iter()
        .zip(q.weights())
        .map(|(v, w)| 2.0 * v * w)
        .collect();
    let two_cos: Vec<f64> = q.cos_nodes().iter().map(|c| 2.0 * c).collect();
    let mut prev: Vec<f64> = vec![1.0; q.len()];
    let mut curr: Vec<f64> = q.cos_nodes().to_vec();
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(fw.iter().sum());
    if max_lag >= 1 {
        out.push(fw.iter().zip(&curr).map(|(a, b)| a * b).sum());
    }
    for _ in 2..=max_lag {
        let mut acc = 0.0;
        for i in 0..fw.len() {
            let next = two_cos[i] * curr[i] - prev[i];
            prev[i] = curr[i];
            curr[i] = next;
            acc += fw[i] * next;
        }
        out.push(acc);
    }
    out
}

pub fn autocovariances(f: &dyn SpectralDensity, max_lag: usize, q: &QuadratureRule) -> Vec<f64> {
    autocovariances_from_grid(&f.on_grid(q), max_lag, q)
}

/// Σ_n(h₀) scaled so that (1/n) yᵗ Σ_n(h₀) y = ∫ h₀ I_n dω:
/// entry (s, t) = (1/2π) ∫_{−π}^{π} cos(ω|s−t|) h₀(ω) dω.
pub fn toeplitz_weight_matrix(h0: &FocusWeight, n: usize, q: &QuadratureRule) -> DMatrix<f64> {
    assert!(n >= 1);
    let h = h0.even_on_grid(q);
    let scaled: Vec<f64> = h.iter().map(|v| v / (2.0 * PI)).collect();
    let lags = autocovariances_from_grid(&scaled, n - 1, q);
    DMatrix::from_fn(n, n, |s, t| lags[s.abs_diff(t)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(rho: f64) -> ArmaSpectrum {
        ArmaFamily::ar(1).spectrum(&[rho, 1.0])
    }

    #[test]
    fn white_noise_autocovariance() {
        let q = default_quadrature(64);
        let f = ArmaFamily::white_noise().spectrum(&[1.0]);
        assert!((autocovariance(&f, 0, &q) - 1.0).abs() < 1e-12);
        for k in 1..10 {
            assert!(autocovariance(&f, k, &q).abs() < 1e-10);
        }
    }

    #[test]
    fn ar1_lag_one() {
        let q = default_quadrature(64);
        let c1 = autocovariance(&ar1(0.5), 1, &q);
        assert!((c1 - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn ma1_autocovariances() {
        let q = default_quadrature(64);
        let f = ArmaFamily::ma(1).spectrum(&[0.4, 1.0]);
        assert!((autocovariance(&f, 0, &q) - 1.16).abs() < 1e-12);
        assert!((autocovariance(&f, 1, &q) - 0.4).abs() < 1e-12);
        assert!(autocovariance(&f, 2, &q).abs() < 1e-12);
    }

    #[test]
    fn recurrence_agrees_with_direct() {
        let q = default_quadrature(300);
        let f = ArmaFamily::new(2, 1).spectrum(&[0.7, -0.6, 0.3, 1.3]);
        let fast = autocovariances(&f, 299, &q);
        for k in [0, 1, 5, 57, 299] {
            let direct = autocovariance(&f, k, &q);
            assert!((fast[k] - direct).abs() < 1e-11, "lag {k}");
        }
    }

    #[test]
    fn ar1_autocovariances_far_lags() {
        let q = default_quadrature(500);
        let rho: f64 = 0.6;
        let c = autocovariances(&ar1(rho), 499, &q);
        for k in [0usize, 3, 40, 499] {
            let exact = rho.powi(k as i32) / (1.0 - rho * rho);
            assert!((c[k] - exact).abs() < 1e-12, "lag {k}");
        }
    }

    #[test]
    fn toeplitz_identity_weight() {
        let q = default_quadrature(6);
        let m = toeplitz_weight_matrix(&FocusWeight::constant(1.0), 6, &q);
        for s in 0..6 {
            for t in 0..6 {
                let want = if s == t { 1.0 } else { 0.0 };
                assert!((m[(s, t)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn toeplitz_cosine_band() {
        let q = default_quadrature(5);
        for k in 1..5 {
            let m = toeplitz_weight_matrix(&FocusWeight::cosine(k), 5, &q);
            for s in 0..5usize {
                for t in 0..5usize {
                    let want = if s.abs_diff(t) == k { 0.5 } else { 0.0 };
                    assert!((m[(s, t)] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn toeplitz_single_entry() {
        let h = FocusWeight::band(0.0, 1.0).unwrap();
        let q = QuadratureRule::composite(512, &h.jump_points());
        let m = toeplitz_weight_matrix(&h, 1, &q);
        // (1/2π) ∫ 1{|ω|<1}/2 dω = 1/(2π)
        assert!((m[(0, 0)] - 1.0 / (2.0 * PI)).abs() < 1e-13);
    }
}
