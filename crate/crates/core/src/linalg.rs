use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) const CONDITION_LIMIT: f64 = 1e12;

/// Inverse of a symmetric matrix, refusing ill-conditioned input.
pub(crate) fn sym_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularInformation {
            condition: f64::INFINITY,
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let min = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, x| a.min(x.abs()));
    let condition = if min == 0.0 { f64::INFINITY } else { max / min };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularInformation { condition });
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}

/// Durbin–Levinson innovations pass over a stationary sequence with
/// autocovariances `acov[0..n]`. For each t, `step(t, mean, var)` receives the
/// conditional mean and variance of Y_t given the past and returns the value
/// of Y_t to condition on next.
pub(crate) fn innovations<F>(acov: &[f64], n: usize, mut step: F) -> Result<()>
where
    F: FnMut(usize, f64, f64) -> f64,
{
    assert!(acov.len() >= n);
    let mut v = acov[0];
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::NumericDegeneracy(format!(
            "variance C(0) = {v} is not positive"
        )));
    }
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut ys: Vec<f64> = Vec::with_capacity(n);
    for t in 0..n {
        let mean: f64 = phi.iter().zip(ys.iter().rev()).map(|(a, y)| a * y).sum();
        ys.push(step(t, mean, v));
        if t + 1 == n {
            break;
        }
        let num = acov[t + 1]
            - phi
                .iter()
                .zip(acov[1..=t].iter().rev())
                .map(|(a, c)| a * c)
                .sum::<f64>();
        let k = num / v;
        prev.clear();
        prev.extend_from_slice(&phi);
        for j in 0..t {
            phi[j] = prev[j] - k * prev[t - 1 - j];
        }
        phi.push(k);
        v *= 1.0 - k * k;
        if !(v > 1e-14 * acov[0]) {
            return Err(Error::NumericDegeneracy(format!(
                "Toeplitz covariance is numerically singular at order {}",
                t + 2
            )));
        }
    }
    Ok(())
}
