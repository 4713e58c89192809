//! Whittle objective, sandwich matrices and the Whittle divergence.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::periodogram::EmpiricalSpectrum;
use crate::spectral::{ArmaFamily, Encoding, ParamVector, QuadratureRule, SpectralDensity};

const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Raw periodogram; g² is estimated by I_n²/2.
    Empirical,
    /// A known spectral density.
    Analytic,
}

/// Reference spectrum g and its square (or the unbiased plug-in for it) on
/// the nodes of a quadrature rule.
#[derive(Debug, Clone)]
pub struct ReferenceGrid {
    g: Vec<f64>,
    g_sq: Vec<f64>,
    kind: ReferenceKind,
}

impl ReferenceGrid {
    pub fn empirical(spec: &EmpiricalSpectrum, q: &QuadratureRule) -> Self {
        let g = spec.grid_for(q).into_owned();
        let g_sq = g.iter().map(|i| 0.5 * i * i).collect();
        Self {
            g,
            g_sq,
            kind: ReferenceKind::Empirical,
        }
    }

    pub fn analytic(f: &dyn SpectralDensity, q: &QuadratureRule) -> Self {
        let g = f.on_grid(q);
        let g_sq = g.iter().map(|v| v * v).collect();
        Self {
            g,
            g_sq,
            kind: ReferenceKind::Analytic,
        }
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn g_sq(&self) -> &[f64] {
        &self.g_sq
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }
}

fn check_density(f: f64, omega: f64) -> Result<()> {
    if !(f >= DENSITY_FLOOR) || !f.is_finite() {
        return Err(Error::NumericDegeneracy(format!(
            "model density {f:e} at frequency {omega} is below {DENSITY_FLOOR:e}"
        )));
    }
    Ok(())
}

/// Per-observation Whittle criterion log 2π + (1/4π)∫[Ψ_θ + g/f_θ].
pub(crate) fn objective(
    family: &ArmaFamily,
    theta: &[f64],
    reference: &ReferenceGrid,
    q: &QuadratureRule,
) -> Result<f64> {
    let f = family.density_grid(theta, q);
    let mut acc = 0.0;
    for (i, (&fi, &w)) in f.iter().zip(q.weights()).enumerate() {
        check_density(fi, q.nodes()[i])?;
        acc += w * (fi.ln() + reference.g[i] / fi);
    }
    Ok((2.0 * PI).ln() + acc / (2.0 * PI))
}

/// Criterion and its gradient in the natural parameters.
pub(crate) fn objective_with_gradient(
    family: &ArmaFamily,
    theta: &[f64],
    reference: &ReferenceGrid,
    q: &QuadratureRule,
) -> Result<(f64, Vec<f64>)> {
    let p = family.dim();
    let ev = family.eval_grid(theta, q, false);
    let mut acc = 0.0;
    let mut grad = vec![0.0; p];
    for (i, &fi) in ev.density.iter().enumerate() {
        check_density(fi, q.nodes()[i])?;
        let w = q.weights()[i];
        let ratio = reference.g[i] / fi;
        acc += w * (fi.ln() + ratio);
        let scale = w * (1.0 - ratio);
        for (gj, dj) in grad.iter_mut().zip(ev.grad_at(i)) {
            *gj += scale * dj;
        }
    }
    grad.iter_mut().for_each(|g| *g /= 2.0 * PI);
    Ok(((2.0 * PI).ln() + acc / (2.0 * PI), grad))
}

fn natural_values(family: &ArmaFamily, theta: &ParamVector) -> Result<Vec<f64>> {
    let v = match theta.encoding() {
        Encoding::Natural => theta.values().to_vec(),
        Encoding::Unconstrained => family.from_unconstrained(theta).into_values(),
    };
    family.check_admissible(&v)?;
    Ok(v)
}

/// Whittle pseudo-log-likelihood
/// −(n/2)[log 2π + (1/2π)∫log{2πf_θ} + (1/2π)∫I_n/f_θ].
pub fn whittle_loglik(
    spec: &EmpiricalSpectrum,
    family: &ArmaFamily,
    theta: &ParamVector,
    q: &QuadratureRule,
) -> Result<f64> {
    let v = natural_values(family, theta)?;
    let reference = ReferenceGrid::empirical(spec, q);
    Ok(-(spec.n() as f64) * objective(family, &v, &reference, q)?)
}

/// J(g, f_θ) = (1/4π)∫[∇Ψ∇Ψᵀ g + ∇²Ψ (f_θ − g)] / f_θ.
pub fn sandwich_j(
    reference: &ReferenceGrid,
    family: &ArmaFamily,
    theta: &[f64],
    q: &QuadratureRule,
) -> DMatrix<f64> {
    let p = family.dim();
    let ev = family.eval_grid(theta, q, true);
    let mut m = DMatrix::zeros(p, p);
    for (i, &fi) in ev.density.iter().enumerate() {
        let w = q.weights()[i];
        let ratio = reference.g[i] / fi;
        let d = ev.grad_at(i);
        let h = ev.hess_at(i);
        for a in 0..p {
            for b in 0..=a {
                m[(a, b)] += w * (d[a] * d[b] * ratio + h[a * p + b] * (1.0 - ratio));
            }
        }
    }
    symmetrize(m / (2.0 * PI))
}

/// K(g, f_θ) = (1/4π)∫∇Ψ∇Ψᵀ g²/f_θ², with g² taken from the reference grid.
pub fn sandwich_k(
    reference: &ReferenceGrid,
    family: &ArmaFamily,
    theta: &[f64],
    q: &QuadratureRule,
) -> DMatrix<f64> {
    let p = family.dim();
    let ev = family.eval_grid(theta, q, false);
    let mut m = DMatrix::zeros(p, p);
    for (i, &fi) in ev.density.iter().enumerate() {
        let scale = q.weights()[i] * reference.g_sq[i] / (fi * fi);
        let d = ev.grad_at(i);
        for a in 0..p {
            for b in 0..=a {
                m[(a, b)] += scale * d[a] * d[b];
            }
        }
    }
    symmetrize(m / (2.0 * PI))
}

fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let p = m.nrows();
    for a in 0..p {
        for b in 0..a {
            m[(b, a)] = m[(a, b)];
        }
    }
    m
}

/// Whittle divergence d(g, f_θ) = (1/4π)∫[g/f_θ − 1 − log(g/f_θ)].
pub fn discrepancy(
    g: &dyn SpectralDensity,
    family: &ArmaFamily,
    theta: &[f64],
    q: &QuadratureRule,
) -> Result<f64> {
    family.check_admissible(theta)?;
    let gv = g.on_grid(q);
    let f = family.density_grid(theta, q);
    let mut acc = 0.0;
    for (i, (&gi, &fi)) in gv.iter().zip(&f).enumerate() {
        if !(gi > 0.0 && gi.is_finite()) {
            return Err(Error::Precondition(format!(
                "reference density {gi} at frequency {} is not positive and finite",
                q.nodes()[i]
            )));
        }
        check_density(fi, q.nodes()[i])?;
        let r = gi / fi;
        acc += q.weights()[i] * (r - 1.0 - r.ln());
    }
    Ok((acc / (2.0 * PI)).max(0.0))
}
