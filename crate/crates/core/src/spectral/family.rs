//! ARMA spectral families.
//!
//! Natural parameters are ordered `(ρ₁ … ρ_p, φ₁ … φ_q, σ)` with
//!
//! ```text
//! Y_t = ρ₁ Y_{t−1} + … + ρ_p Y_{t−p} + ε_t + φ₁ ε_{t−1} + … + φ_q ε_{t−q},   ε_t ~ N(0, σ²)
//! f(ω) = σ²/(2π) · |1 + Σ φ_j e^{ijω}|² / |1 − Σ ρ_j e^{ijω}|²
//! ```
//!
//! The unconstrained encoding maps each coefficient block to partial
//! autocorrelations through `tanh` and the Durbin–Levinson recursion, which
//! keeps the AR part stationary and the MA part invertible, and σ through
//! `exp`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{QuadratureRule, SpectralDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Encoding {
    Natural,
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    encoding: Encoding,
}

impl ParamVector {
    pub fn natural(values: Vec<f64>) -> Self {
        Self {
            values,
            encoding: Encoding::Natural,
        }
    }

    pub fn unconstrained(values: Vec<f64>) -> Self {
        Self {
            values,
            encoding: Encoding::Unconstrained,
        }
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Parametric spectral family of ARMA(p, q) processes with innovation scale σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmaFamily {
    ar_order: usize,
    ma_order: usize,
}

/// Family values at a single frequency.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub density: f64,
    /// ∇Ψ = ∇ log f
    pub grad_log: Vec<f64>,
    /// ∇²Ψ, row-major p×p; empty unless requested.
    pub hess_log: Vec<f64>,
}

/// Family values tabulated on the nodes of a quadrature rule.
#[derive(Debug, Clone)]
pub struct GridEval {
    pub p: usize,
    pub density: Vec<f64>,
    /// Node-major, `grad_log[i * p + j]`.
    pub grad_log: Vec<f64>,
    /// Node-major, `hess_log[(i * p + j) * p + k]`; empty unless requested.
    pub hess_log: Vec<f64>,
}

impl GridEval {
    pub fn grad_at(&self, node: usize) -> &[f64] {
        &self.grad_log[node * self.p..(node + 1) * self.p]
    }

    pub fn hess_at(&self, node: usize) -> &[f64] {
        let pp = self.p * self.p;
        &self.hess_log[node * pp..(node + 1) * pp]
    }
}

/// Builds the ARMA(ar_order, ma_order) family.
pub fn make_arma_family(ar_order: usize, ma_order: usize) -> ArmaFamily {
    ArmaFamily::new(ar_order, ma_order)
}

impl ArmaFamily {
    pub fn new(ar_order: usize, ma_order: usize) -> Self {
        Self { ar_order, ma_order }
    }

    pub fn white_noise() -> Self {
        Self::new(0, 0)
    }

    pub fn ar(order: usize) -> Self {
        Self::new(order, 0)
    }

    pub fn ma(order: usize) -> Self {
        Self::new(0, order)
    }

    pub fn ar_order(&self) -> usize {
        self.ar_order
    }

    pub fn ma_order(&self) -> usize {
        self.ma_order
    }

    /// Parameter dimension, σ included.
    pub fn dim(&self) -> usize {
        self.ar_order + self.ma_order + 1
    }

    pub fn label(&self) -> String {
        match (self.ar_order, self.ma_order) {
            (p, 0) => format!("AR({p})"),
            (0, q) => format!("MA({q})"),
            (p, q) => format!("ARMA({p},{q})"),
        }
    }

    fn max_order(&self) -> usize {
        self.ar_order.max(self.ma_order)
    }

    pub fn split<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64], f64) {
        assert_eq!(
            theta.len(),
            self.dim(),
            "{}: parameter length",
            self.label()
        );
        let (ar, rest) = theta.split_at(self.ar_order);
        let (ma, sigma) = rest.split_at(self.ma_order);
        (ar, ma, sigma[0])
    }

    /// Assembles a natural parameter vector from its blocks.
    pub fn theta(&self, ar: &[f64], ma: &[f64], sigma: f64) -> Vec<f64> {
        assert_eq!(ar.len(), self.ar_order);
        assert_eq!(ma.len(), self.ma_order);
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(ar);
        v.extend_from_slice(ma);
        v.push(sigma);
        v
    }

    pub fn check_admissible(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Precondition(format!(
                "{} expects {} parameters, got {}",
                self.label(),
                self.dim(),
                theta.len()
            )));
        }
        let (ar, ma, sigma) = self.split(theta);
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Precondition(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        coeffs_to_partials(ar).ok_or_else(|| {
            Error::Precondition(format!("AR coefficients {ar:?} are not stationary"))
        })?;
        let neg: Vec<f64> = ma.iter().map(|v| -v).collect();
        coeffs_to_partials(&neg).ok_or_else(|| {
            Error::Precondition(format!("MA coefficients {ma:?} are not invertible"))
        })?;
        Ok(())
    }

    pub fn to_unconstrained(&self, theta: &ParamVector) -> Result<ParamVector> {
        match theta.encoding() {
            Encoding::Unconstrained => return Ok(theta.clone()),
            Encoding::Natural => {}
        }
        self.check_admissible(theta.values())?;
        let (ar, ma, sigma) = self.split(theta.values());
        let mut u = Vec::with_capacity(self.dim());
        let r_ar = coeffs_to_partials(ar).expect("checked");
        u.extend(r_ar.iter().map(|r| r.atanh()));
        let neg: Vec<f64> = ma.iter().map(|v| -v).collect();
        let r_ma = coeffs_to_partials(&neg).expect("checked");
        u.extend(r_ma.iter().map(|r| (-r).atanh()));
        u.push(sigma.ln());
        Ok(ParamVector::unconstrained(u))
    }

    pub fn from_unconstrained(&self, u: &ParamVector) -> ParamVector {
        match u.encoding() {
            Encoding::Natural => u.clone(),
            Encoding::Unconstrained => ParamVector::natural(self.natural_from(u.values())),
        }
    }

    pub(crate) fn natural_from(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.dim());
        let (ua, rest) = u.split_at(self.ar_order);
        let (um, us) = rest.split_at(self.ma_order);
        let r_ar: Vec<f64> = ua.iter().map(|v| v.tanh()).collect();
        let r_ma: Vec<f64> = um.iter().map(|v| -v.tanh()).collect();
        let mut theta = partials_to_coeffs(&r_ar);
        theta.extend(partials_to_coeffs(&r_ma).iter().map(|c| -c));
        theta.push(us[0].exp());
        theta
    }

    /// Natural parameters together with the Jacobian ∂θ/∂u (row-major p×p).
    pub(crate) fn natural_with_jacobian(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.dim();
        let theta = self.natural_from(u);
        let mut jac = vec![0.0; p * p];
        let (ua, rest) = u.split_at(self.ar_order);
        let (um, us) = rest.split_at(self.ma_order);

        let r_ar: Vec<f64> = ua.iter().map(|v| v.tanh()).collect();
        for i in 0..self.ar_order {
            let mut dr = vec![0.0; self.ar_order];
            dr[i] = 1.0 - r_ar[i] * r_ar[i];
            let (_, dc) = partials_to_coeffs_tangent(&r_ar, &dr);
            for (row, d) in dc.iter().enumerate() {
                jac[row * p + i] = *d;
            }
        }
        let off = self.ar_order;
        let r_ma: Vec<f64> = um.iter().map(|v| -v.tanh()).collect();
        for i in 0..self.ma_order {
            let mut dr = vec![0.0; self.ma_order];
            dr[i] = -(1.0 - r_ma[i] * r_ma[i]);
            let (_, dc) = partials_to_coeffs_tangent(&r_ma, &dr);
            for (row, d) in dc.iter().enumerate() {
                jac[(off + row) * p + off + i] = -*d;
            }
        }
        jac[(p - 1) * p + (p - 1)] = us[0].exp();
        (theta, jac)
    }

    pub fn density(&self, theta: &[f64], omega: f64) -> f64 {
        let (s, c) = omega.sin_cos();
        self.eval_point(theta, c, s, false).density
    }

    pub fn grad_log(&self, theta: &[f64], omega: f64) -> Vec<f64> {
        let (s, c) = omega.sin_cos();
        self.eval_point(theta, c, s, false).grad_log
    }

    pub fn grad_density(&self, theta: &[f64], omega: f64) -> Vec<f64> {
        let (s, c) = omega.sin_cos();
        let e = self.eval_point(theta, c, s, false);
        e.grad_log.iter().map(|g| g * e.density).collect()
    }

    /// ∇²Ψ at ω, row-major p×p.
    pub fn hess_log(&self, theta: &[f64], omega: f64) -> Vec<f64> {
        let (s, c) = omega.sin_cos();
        self.eval_point(theta, c, s, true).hess_log
    }

    /// Density alone on every node of `q`.
    pub fn density_grid(&self, theta: &[f64], q: &QuadratureRule) -> Vec<f64> {
        q.cos_nodes()
            .iter()
            .zip(q.sin_nodes())
            .map(|(&c, &s)| self.density_from_trig(theta, c, s))
            .collect()
    }

    /// Density, ∇Ψ and optionally ∇²Ψ on every node of `q`.
    pub fn eval_grid(&self, theta: &[f64], q: &QuadratureRule, with_hessian: bool) -> GridEval {
        let p = self.dim();
        let n = q.len();
        let mut out = GridEval {
            p,
            density: Vec::with_capacity(n),
            grad_log: Vec::with_capacity(n * p),
            hess_log: if with_hessian {
                Vec::with_capacity(n * p * p)
            } else {
                Vec::new()
            },
        };
        for (&c, &s) in q.cos_nodes().iter().zip(q.sin_nodes()) {
            let e = self.eval_point(theta, c, s, with_hessian);
            out.density.push(e.density);
            out.grad_log.extend_from_slice(&e.grad_log);
            out.hess_log.extend_from_slice(&e.hess_log);
        }
        out
    }

    fn density_from_trig(&self, theta: &[f64], c: f64, s: f64) -> f64 {
        let (ar, ma, sigma) = self.split(theta);
        let (mut zc, mut zs) = (1.0, 0.0);
        let (mut ac, mut as_, mut bc, mut bs) = (1.0, 0.0, 1.0, 0.0);
        for j in 0..self.max_order() {
            (zc, zs) = (zc * c - zs * s, zc * s + zs * c);
            if let Some(r) = ar.get(j) {
                ac -= r * zc;
                as_ -= r * zs;
            }
            if let Some(m) = ma.get(j) {
                bc += m * zc;
                bs += m * zs;
            }
        }
        sigma * sigma / (2.0 * PI) * (bc * bc + bs * bs) / (ac * ac + as_ * as_)
    }

    /// Core evaluation given cos ω and sin ω.
    pub fn eval_point(&self, theta: &[f64], c: f64, s: f64, with_hessian: bool) -> PointEval {
        let (ar, ma, sigma) = self.split(theta);
        let p = self.dim();
        let m = self.max_order();

        // cos(jω), sin(jω) for j = 1..=m
        let mut cj = Vec::with_capacity(m);
        let mut sj = Vec::with_capacity(m);
        let (mut zc, mut zs) = (1.0, 0.0);
        for _ in 0..m {
            (zc, zs) = (zc * c - zs * s, zc * s + zs * c);
            cj.push(zc);
            sj.push(zs);
        }

        let mut ac = 1.0;
        let mut as_ = 0.0;
        for (j, r) in ar.iter().enumerate() {
            ac -= r * cj[j];
            as_ -= r * sj[j];
        }
        let mut bc = 1.0;
        let mut bs = 0.0;
        for (j, v) in ma.iter().enumerate() {
            bc += v * cj[j];
            bs += v * sj[j];
        }
        let a2 = ac * ac + as_ * as_;
        let b2 = bc * bc + bs * bs;
        let density = sigma * sigma / (2.0 * PI) * b2 / a2;

        let mut grad = vec![0.0; p];
        // d|a|²/dρ_j
        let da: Vec<f64> = (0..self.ar_order)
            .map(|j| -2.0 * (ac * cj[j] + as_ * sj[j]))
            .collect();
        let db: Vec<f64> = (0..self.ma_order)
            .map(|j| 2.0 * (bc * cj[j] + bs * sj[j]))
            .collect();
        for j in 0..self.ar_order {
            grad[j] = -da[j] / a2;
        }
        for j in 0..self.ma_order {
            grad[self.ar_order + j] = db[j] / b2;
        }
        grad[p - 1] = 2.0 / sigma;

        let mut hess = Vec::new();
        if with_hessian {
            hess = vec![0.0; p * p];
            // cos((j−k)ω) with 1-based j, k
            let cos_diff = |j: usize, k: usize| cj[j] * cj[k] + sj[j] * sj[k];
            for j in 0..self.ar_order {
                for k in 0..self.ar_order {
                    let d2 = 2.0 * cos_diff(j, k);
                    hess[j * p + k] = -d2 / a2 + da[j] * da[k] / (a2 * a2);
                }
            }
            let o = self.ar_order;
            for j in 0..self.ma_order {
                for k in 0..self.ma_order {
                    let d2 = 2.0 * cos_diff(j, k);
                    hess[(o + j) * p + o + k] = d2 / b2 - db[j] * db[k] / (b2 * b2);
                }
            }
            hess[(p - 1) * p + p - 1] = -2.0 / (sigma * sigma);
        }

        PointEval {
            density,
            grad_log: grad,
            hess_log: hess,
        }
    }

    pub fn spectrum(&self, theta: &[f64]) -> ArmaSpectrum {
        assert_eq!(theta.len(), self.dim());
        ArmaSpectrum {
            family: *self,
            theta: theta.to_vec(),
        }
    }
}

/// A family member with fixed parameters, usable as a [`SpectralDensity`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaSpectrum {
    family: ArmaFamily,
    theta: Vec<f64>,
}

impl ArmaSpectrum {
    pub fn family(&self) -> ArmaFamily {
        self.family
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

impl SpectralDensity for ArmaSpectrum {
    fn density(&self, omega: f64) -> f64 {
        self.family.density(&self.theta, omega)
    }

    fn on_grid(&self, q: &QuadratureRule) -> Vec<f64> {
        self.family.density_grid(&self.theta, q)
    }
}

/// Durbin–Levinson map from partial autocorrelations to AR coefficients of
/// `1 − Σ c_j z^j`.
pub fn partials_to_coeffs(r: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    for (k, &rk) in r.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - rk * prev[k - 1 - j];
        }
        phi.push(rk);
    }
    phi
}

fn partials_to_coeffs_tangent(r: &[f64], dr: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    let mut dphi: Vec<f64> = Vec::with_capacity(r.len());
    for k in 0..r.len() {
        let prev = phi.clone();
        let dprev = dphi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r[k] * prev[k - 1 - j];
            dphi[j] = dprev[j] - dr[k] * prev[k - 1 - j] - r[k] * dprev[k - 1 - j];
        }
        phi.push(r[k]);
        dphi.push(dr[k]);
    }
    (phi, dphi)
}

/// Inverse of [`partials_to_coeffs`]; `None` when the polynomial is not
/// stationary.
pub fn coeffs_to_partials(c: &[f64]) -> Option<Vec<f64>> {
    let m = c.len();
    let mut phi = c.to_vec();
    let mut r = vec![0.0; m];
    for k in (0..m).rev() {
        let rk = phi[k];
        if !(rk.abs() < 1.0) {
            return None;
        }
        r[k] = rk;
        let denom = 1.0 - rk * rk;
        let prev: Vec<f64> = (0..k)
            .map(|j| (phi[j] + rk * phi[k - 1 - j]) / denom)
            .collect();
        phi.truncate(k);
        phi.copy_from_slice(&prev);
    }
    Some(r)
}
