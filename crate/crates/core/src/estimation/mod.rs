//! Whittle and exact Gaussian fitting, plug-in sandwich matrices, the
//! Whittle divergence and AIC/BIC.
//!
//! Every fit runs in the unconstrained encoding of the family, so the
//! optimizer never leaves the stationary and invertible region.

mod optimizer;
mod whittle;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::innovations;
use crate::periodogram::{EmpiricalSpectrum, TimeSeries};
use crate::spectral::{
    autocovariances_from_grid, ArmaFamily, ParamVector, QuadratureRule, SpectralDensity,
};

pub use optimizer::OptimizerOptions;
pub use whittle::{
    discrepancy, sandwich_j, sandwich_k, whittle_loglik, ReferenceGrid, ReferenceKind,
};

use optimizer::{bfgs, numeric_gradient, Minimum};

/// Largest series length accepted by the exact Gaussian likelihood.
pub const MAX_EXACT_LEN: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Whittle,
    GaussianMl,
    /// Minimizer of the Whittle divergence to an analytic reference.
    LeastFalse,
    /// Evaluated at given parameters without optimization.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDiagnostics {
    pub iterations: usize,
    pub grad_norm: f64,
    pub starts: usize,
    /// Final value of the minimized per-observation criterion.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub family: ArmaFamily,
    pub method: FitMethod,
    /// Natural encoding.
    pub theta_hat: ParamVector,
    pub n: usize,
    pub whittle_loglik: f64,
    pub gaussian_loglik: Option<f64>,
    pub j_hat: DMatrix<f64>,
    pub k_hat: DMatrix<f64>,
    pub converged: bool,
    pub diagnostics: OptimizerDiagnostics,
}

impl FitResult {
    pub fn theta(&self) -> &[f64] {
        self.theta_hat.values()
    }

    pub fn p(&self) -> usize {
        self.family.dim()
    }
}

/// Whittle fit to an observed series.
pub fn fit_whittle(
    y: &TimeSeries,
    family: &ArmaFamily,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<FitResult> {
    let spec = EmpiricalSpectrum::new(y.clone(), q);
    fit_whittle_spectrum(&spec, family, q, opts)
}

/// Whittle fit reusing a periodogram already tabulated on `q`.
pub fn fit_whittle_spectrum(
    spec: &EmpiricalSpectrum,
    family: &ArmaFamily,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<FitResult> {
    spec.series().require_estimable(family.dim() + 2)?;
    let reference = ReferenceGrid::empirical(spec, q);
    let mut fit = fit_reference(&reference, spec.n(), family, q, opts)?;
    fit.method = FitMethod::Whittle;
    Ok(fit)
}

/// Least-false parameters of `family` for the analytic spectrum `g`.
pub fn least_false(
    g: &dyn SpectralDensity,
    family: &ArmaFamily,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<FitResult> {
    let reference = ReferenceGrid::analytic(g, q);
    if reference.g().iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Precondition(
            "reference density must be positive and finite on the grid".into(),
        ));
    }
    let mut fit = fit_reference(&reference, 0, family, q, opts)?;
    fit.method = FitMethod::LeastFalse;
    Ok(fit)
}

/// Minimizes the Whittle criterion against an arbitrary reference grid.
/// `n` scales the reported log-likelihood.
pub fn fit_reference(
    reference: &ReferenceGrid,
    n: usize,
    family: &ArmaFamily,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<FitResult> {
    let c0 = q.sum_full(reference.g());
    let log_sigma = if c0 > 0.0 { 0.5 * c0.ln() } else { 0.0 };
    let starts = whittle_starts(family, log_sigma, opts.multistarts);

    let fg = |u: &[f64]| -> Option<(f64, Vec<f64>)> {
        let (theta, jac) = family.natural_with_jacobian(u);
        let (f, g) = whittle::objective_with_gradient(family, &theta, reference, q).ok()?;
        Some((f, chain(&jac, &g)))
    };
    let (best, used) = best_of(&fg, &starts, opts).ok_or_else(|| {
        Error::NumericDegeneracy(format!(
            "{}: no start produced a finite criterion",
            family.label()
        ))
    })?;
    let theta = family.natural_from(&best.x);
    assemble(
        reference,
        n,
        family,
        theta,
        FitMethod::Whittle,
        &best,
        used,
        q,
    )
}

/// Plug-in quantities at fixed natural parameters, without optimizing.
pub fn fit_at(
    reference: &ReferenceGrid,
    n: usize,
    family: &ArmaFamily,
    theta: &[f64],
    q: &QuadratureRule,
) -> Result<FitResult> {
    family.check_admissible(theta)?;
    let (f, g) = whittle::objective_with_gradient(family, theta, reference, q)?;
    let min = Minimum {
        x: theta.to_vec(),
        f,
        grad_norm: g.iter().map(|v| v * v).sum::<f64>().sqrt(),
        iterations: 0,
        converged: true,
    };
    assemble(
        reference,
        n,
        family,
        theta.to_vec(),
        FitMethod::Fixed,
        &min,
        0,
        q,
    )
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    reference: &ReferenceGrid,
    n: usize,
    family: &ArmaFamily,
    theta: Vec<f64>,
    method: FitMethod,
    min: &Minimum,
    starts: usize,
    q: &QuadratureRule,
) -> Result<FitResult> {
    let objective = whittle::objective(family, &theta, reference, q)?;
    Ok(FitResult {
        family: *family,
        method,
        j_hat: sandwich_j(reference, family, &theta, q),
        k_hat: sandwich_k(reference, family, &theta, q),
        whittle_loglik: -(n as f64) * objective,
        gaussian_loglik: None,
        n,
        theta_hat: ParamVector::natural(theta),
        converged: min.converged,
        diagnostics: OptimizerDiagnostics {
            iterations: min.iterations,
            grad_norm: min.grad_norm,
            starts,
            objective: min.f,
        },
    })
}

/// Jᵀ g for a row-major square Jacobian.
fn chain(jac: &[f64], g: &[f64]) -> Vec<f64> {
    let p = g.len();
    (0..p)
        .map(|j| (0..p).map(|i| jac[i * p + j] * g[i]).sum())
        .collect()
}

/// Deterministic unconstrained starting points: partials at 0, +0.5, −0.5,
/// and the two alternating sign patterns; log σ fixed. Duplicates dropped.
fn whittle_starts(family: &ArmaFamily, log_sigma: f64, count: usize) -> Vec<Vec<f64>> {
    let m = family.dim() - 1;
    let patterns: [&dyn Fn(usize) -> f64; 5] = [
        &|_| 0.0,
        &|_| 0.5,
        &|_| -0.5,
        &|i| if i % 2 == 0 { 0.5 } else { -0.5 },
        &|i| if i % 2 == 0 { -0.5 } else { 0.5 },
    ];
    let mut out: Vec<Vec<f64>> = Vec::new();
    for pat in patterns.iter().take(count.max(1)) {
        let mut u: Vec<f64> = (0..m).map(|i| pat(i)).collect();
        u.push(log_sigma);
        if !out.contains(&u) {
            out.push(u);
        }
    }
    out
}

/// Runs BFGS from every start and keeps the lowest criterion, breaking
/// exact ties by the lexicographically smallest point.
fn best_of<F>(fg: &F, starts: &[Vec<f64>], opts: &OptimizerOptions) -> Option<(Minimum, usize)>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut best: Option<Minimum> = None;
    let mut used = 0;
    for s in starts {
        let Some(m) = bfgs(fg, s, opts) else { continue };
        used += 1;
        let better = match &best {
            None => true,
            Some(b) => m.f < b.f || (m.f == b.f && lex_less(&m.x, &b.x)),
        };
        if better {
            best = Some(m);
        }
    }
    best.map(|b| (b, used))
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .find(|(x, y)| x != y)
        .is_some_and(|(x, y)| x < y)
}

/// Exact Gaussian log-likelihood
/// −½[n log 2π + log det Σ_n(f_θ) + yᵀΣ_n(f_θ)⁻¹y], via Durbin–Levinson.
pub fn gaussian_loglik(
    y: &TimeSeries,
    family: &ArmaFamily,
    theta: &[f64],
    q: &QuadratureRule,
) -> Result<f64> {
    family.check_admissible(theta)?;
    let n = y.len();
    if n > MAX_EXACT_LEN {
        return Err(Error::Precondition(format!(
            "exact likelihood supports n <= {MAX_EXACT_LEN}, got {n}"
        )));
    }
    let acov = autocovariances_from_grid(&family.density_grid(theta, q), n - 1, q);
    let values = y.values();
    let mut acc = 0.0;
    innovations(&acov, n, |t, mean, var| {
        let e = values[t] - mean;
        acc += var.ln() + e * e / var;
        values[t]
    })?;
    Ok(-0.5 * (n as f64 * (2.0 * PI).ln() + acc))
}

/// Exact Gaussian maximum likelihood, started from the Whittle estimate and
/// the white-noise-equivalent point.
pub fn fit_gaussian_ml(
    y: &TimeSeries,
    family: &ArmaFamily,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<FitResult> {
    y.require_estimable(family.dim() + 2)?;
    check_exact_len(y)?;
    let whittle = fit_whittle(y, family, q, opts)?;
    let mut starts = vec![whittle.theta().to_vec()];
    let mut wn = vec![0.0; family.dim() - 1];
    wn.push(y.mean_square().sqrt());
    starts.push(wn);
    fit_gaussian_ml_from(y, family, q, opts, &starts)
}

fn check_exact_len(y: &TimeSeries) -> Result<()> {
    if y.len() > MAX_EXACT_LEN {
        return Err(Error::Precondition(format!(
            "exact likelihood supports n <= {MAX_EXACT_LEN}, got {}",
            y.len()
        )));
    }
    Ok(())
}

/// Exact Gaussian maximum likelihood from the given natural starting points.
pub fn fit_gaussian_ml_from(
    y: &TimeSeries,
    family: &ArmaFamily,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
    starts: &[Vec<f64>],
) -> Result<FitResult> {
    y.require_estimable(family.dim() + 2)?;
    check_exact_len(y)?;
    let n = y.len() as f64;
    let f = |u: &[f64]| -> Option<f64> {
        let theta = family.natural_from(u);
        gaussian_loglik(y, family, &theta, q).ok().map(|l| -l / n)
    };
    let fg = |u: &[f64]| -> Option<(f64, Vec<f64>)> { Some((f(u)?, numeric_gradient(&f, u)?)) };
    let mut ustarts = Vec::new();
    for s in starts {
        let u = family
            .to_unconstrained(&ParamVector::natural(s.clone()))?
            .into_values();
        if !ustarts.contains(&u) {
            ustarts.push(u);
        }
    }
    let (best, used) = best_of(&fg, &ustarts, opts).ok_or_else(|| {
        Error::NumericDegeneracy(format!(
            "{}: exact likelihood failed at every start",
            family.label()
        ))
    })?;
    let theta = family.natural_from(&best.x);
    let spec = EmpiricalSpectrum::new(y.clone(), q);
    let reference = ReferenceGrid::empirical(&spec, q);
    let mut fit = assemble(
        &reference,
        y.len(),
        family,
        theta,
        FitMethod::GaussianMl,
        &best,
        used,
        q,
    )?;
    fit.gaussian_loglik = Some(-best.f * n);
    Ok(fit)
}

/// (AIC, BIC) = (2p − 2ℓ, p log n − 2ℓ) from the exact Gaussian log-likelihood.
pub fn aic_bic(fit: &FitResult, n: usize) -> Result<(f64, f64)> {
    let ll = fit.gaussian_loglik.ok_or_else(|| {
        Error::Precondition("AIC/BIC need the exact Gaussian log-likelihood".into())
    })?;
    let p = fit.p() as f64;
    Ok((2.0 * p - 2.0 * ll, p * (n as f64).ln() - 2.0 * ll))
}
