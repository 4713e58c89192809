//! Focus parameters μ(G; h, H) = H(∫h₁ dG, …, ∫h_k dG).
//!
//! A [`FocusFunctional`] bundles the weight functions h_j with a smooth
//! transform H and its gradient. Built-in constructors cover lagged
//! covariances, lagged correlations, one-sided band masses and conditional
//! threshold probabilities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::spectral::{default_node_count, QuadratureRule};

type WeightFn = dyn Fn(f64) -> f64 + Send + Sync;
type TransformFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;

/// A bounded, piecewise-continuous weight h(ω) on [−π, π].
#[derive(Clone)]
pub enum FocusWeight {
    Constant(f64),
    /// cos(kω)
    Cosine(usize),
    /// 1{lo ≤ |ω| < hi} / 2, so that ∫ h g = ∫_lo^hi g for symmetric g.
    Band {
        lo: f64,
        hi: f64,
    },
    Custom(CustomWeight),
}

/// User-supplied weight. Only its even part enters spectral integrals.
#[derive(Clone)]
pub struct CustomWeight {
    pub eval: Arc<WeightFn>,
    pub bound: f64,
    pub jump_points: Vec<f64>,
    pub symmetric: bool,
}

impl fmt::Debug for FocusWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FocusWeight::Constant(c) => write!(f, "Constant({c})"),
            FocusWeight::Cosine(k) => write!(f, "Cosine({k})"),
            FocusWeight::Band { lo, hi } => write!(f, "Band[{lo}, {hi})"),
            FocusWeight::Custom(c) => write!(f, "Custom(bound={})", c.bound),
        }
    }
}

impl FocusWeight {
    pub fn constant(value: f64) -> Self {
        FocusWeight::Constant(value)
    }

    pub fn cosine(lag: usize) -> Self {
        FocusWeight::Cosine(lag)
    }

    pub fn band(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= PI) {
            return Err(Error::Precondition(format!(
                "band needs 0 <= a < b <= pi, got [{lo}, {hi})"
            )));
        }
        Ok(FocusWeight::Band { lo, hi })
    }

    pub fn custom<F>(f: F, bound: f64, jump_points: Vec<f64>, symmetric: bool) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FocusWeight::Custom(CustomWeight {
            eval: Arc::new(f),
            bound,
            jump_points,
            symmetric,
        })
    }

    pub fn evaluate(&self, omega: f64) -> f64 {
        match self {
            FocusWeight::Constant(c) => *c,
            FocusWeight::Cosine(k) => (*k as f64 * omega).cos(),
            FocusWeight::Band { lo, hi } => {
                let a = omega.abs();
                if *lo <= a && a < *hi {
                    0.5
                } else {
                    0.0
                }
            }
            FocusWeight::Custom(c) => (c.eval)(omega),
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            FocusWeight::Constant(c) => c.abs(),
            FocusWeight::Cosine(_) => 1.0,
            FocusWeight::Band { .. } => 0.5,
            FocusWeight::Custom(c) => c.bound,
        }
    }

    /// Discontinuities inside (−π, π), sorted.
    pub fn jump_points(&self) -> Vec<f64> {
        let mut pts = match self {
            FocusWeight::Constant(_) | FocusWeight::Cosine(_) => Vec::new(),
            FocusWeight::Band { lo, hi } => {
                let mut v = Vec::new();
                for x in [*lo, *hi] {
                    if x > 0.0 && x < PI {
                        v.push(x);
                        v.push(-x);
                    }
                }
                v
            }
            FocusWeight::Custom(c) => c.jump_points.clone(),
        };
        pts.sort_by(f64::total_cmp);
        pts
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            FocusWeight::Custom(c) => c.symmetric,
            _ => true,
        }
    }

    /// Even part (h(ω) + h(−ω))/2 at the nodes of `q`.
    pub fn even_on_grid(&self, q: &QuadratureRule) -> Vec<f64> {
        match self {
            FocusWeight::Cosine(k) if *k == 1 => q.cos_nodes().to_vec(),
            _ if self.is_symmetric() => q.nodes().iter().map(|&w| self.evaluate(w)).collect(),
            _ => q
                .nodes()
                .iter()
                .map(|&w| 0.5 * (self.evaluate(w) + self.evaluate(-w)))
                .collect(),
        }
    }
}

/// Smooth map H from the k weight integrals to the focus value.
#[derive(Clone)]
pub enum Transform {
    Identity,
    /// x₁ / x₂
    Ratio,
    /// Upper-tail probability of Y_{n+1} given frozen conditioning values.
    Threshold {
        threshold: f64,
        cond_values: Vec<f64>,
    },
    Custom {
        eval: Arc<TransformFn>,
        grad: Arc<GradientFn>,
    },
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Identity => write!(f, "Identity"),
            Transform::Ratio => write!(f, "Ratio"),
            Transform::Threshold {
                threshold,
                cond_values,
            } => write!(f, "Threshold(y={threshold}, cond={cond_values:?})"),
            Transform::Custom { .. } => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FocusFunctional {
    name: String,
    weights: Vec<FocusWeight>,
    transform: Transform,
}

impl FocusFunctional {
    pub fn new(
        name: impl Into<String>,
        weights: Vec<FocusWeight>,
        transform: Transform,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Precondition(
                "a focus needs at least one weight".into(),
            ));
        }
        let expected = match &transform {
            Transform::Identity => Some(1),
            Transform::Ratio => Some(2),
            Transform::Threshold { cond_values, .. } => Some(cond_values.len() + 1),
            Transform::Custom { .. } => None,
        };
        if let Some(k) = expected {
            if weights.len() != k {
                return Err(Error::Precondition(format!(
                    "transform {transform:?} takes {k} components, got {} weights",
                    weights.len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            weights,
            transform,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weights(&self) -> &[FocusWeight] {
        &self.weights
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    /// Positive jump points of all weights, for building quadrature rules.
    pub fn jump_points(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .weights
            .iter()
            .flat_map(|w| w.jump_points())
            .filter(|x| *x > 0.0)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// H(x).
    pub fn apply(&self, x: &[f64]) -> Result<f64> {
        assert_eq!(x.len(), self.k());
        match &self.transform {
            Transform::Identity => Ok(x[0]),
            Transform::Ratio => {
                if !(x[1] > 0.0) {
                    return Err(Error::domain(
                        format!("{} denominator", self.name),
                        format!("variance component must be positive, got {}", x[1]),
                    ));
                }
                Ok(x[0] / x[1])
            }
            Transform::Threshold {
                threshold,
                cond_values,
            } => threshold_probability(x, cond_values, *threshold),
            Transform::Custom { eval, .. } => eval(x),
        }
    }

    /// ∇H(x).
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(x.len(), self.k());
        match &self.transform {
            Transform::Identity => Ok(vec![1.0]),
            Transform::Ratio => {
                self.apply(x)?;
                Ok(vec![1.0 / x[1], -x[0] / (x[1] * x[1])])
            }
            Transform::Threshold { .. } => {
                self.apply(x)?;
                let mut g = Vec::with_capacity(x.len());
                for j in 0..x.len() {
                    let h = 1e-6 * x[j].abs().max(1.0);
                    let mut up = x.to_vec();
                    let mut dn = x.to_vec();
                    up[j] += h;
                    dn[j] -= h;
                    g.push((self.apply(&up)? - self.apply(&dn)?) / (2.0 * h));
                }
                Ok(g)
            }
            Transform::Custom { grad, .. } => grad(x),
        }
    }
}

/// Lag-k autocovariance C(k).
pub fn focus_lag_cov(k: usize) -> FocusFunctional {
    FocusFunctional::new(
        format!("lag_cov({k})"),
        vec![FocusWeight::cosine(k)],
        Transform::Identity,
    )
    .expect("well-formed")
}

/// Lag-k autocorrelation C(k)/C(0).
pub fn focus_lag_corr(k: usize) -> Result<FocusFunctional> {
    if k == 0 {
        return Err(Error::Precondition("lag correlation needs k >= 1".into()));
    }
    FocusFunctional::new(
        format!("lag_corr({k})"),
        vec![FocusWeight::cosine(k), FocusWeight::constant(1.0)],
        Transform::Ratio,
    )
}

/// One-sided spectral mass ∫_a^b g(ω) dω over [a, b) ⊂ [0, π].
pub fn focus_band_mass(a: f64, b: f64) -> Result<FocusFunctional> {
    let w = FocusWeight::band(a, b)?;
    FocusFunctional::new(format!("band_mass({a},{b})"), vec![w], Transform::Identity)
}

/// P{Y_{n+1} ≥ y | Y_{n−k} = c₀, …, Y_n = c_k} with k + 1 = `cond_values.len()`.
pub fn focus_threshold_prob(y_threshold: f64, cond_values: &[f64]) -> Result<FocusFunctional> {
    if cond_values.is_empty() {
        return Err(Error::Precondition(
            "threshold probability needs at least one conditioning value".into(),
        ));
    }
    if !y_threshold.is_finite() || cond_values.iter().any(|c| !c.is_finite()) {
        return Err(Error::Precondition(
            "threshold inputs must be finite".into(),
        ));
    }
    let k = cond_values.len() - 1;
    let weights = (0..=k + 1).map(FocusWeight::cosine).collect();
    FocusFunctional::new(
        format!("threshold_prob(y={y_threshold},k={k})"),
        weights,
        Transform::Threshold {
            threshold: y_threshold,
            cond_values: cond_values.to_vec(),
        },
    )
}

fn threshold_probability(x: &[f64], cond: &[f64], y: f64) -> Result<f64> {
    let m = cond.len();
    let size = m + 1;
    let cov = DMatrix::from_fn(size, size, |s, t| x[s.abs_diff(t)]);
    if cov.clone().cholesky().is_none() {
        return Err(Error::InfeasibleCovariance(format!(
            "Toeplitz covariance of order {size} from {x:?} is not positive definite"
        )));
    }
    let s11 = cov.view((0, 0), (m, m)).into_owned();
    // cov(Y_{n−k+i}, Y_{n+1}) has lag m − i
    let s12 = nalgebra::DVector::from_fn(m, |i, _| x[m - i]);
    let chol = s11.cholesky().ok_or_else(|| {
        Error::InfeasibleCovariance("conditioning block is not positive definite".into())
    })?;
    let a = chol.solve(&s12);
    let c = nalgebra::DVector::from_column_slice(cond);
    let mean = a.dot(&c);
    let var = x[0] - a.dot(&s12);
    if !(var > 0.0) {
        return Err(Error::InfeasibleCovariance(format!(
            "conditional variance {var} is not positive"
        )));
    }
    let z = (y - mean) / var.sqrt();
    Ok(0.5 * erfc(z / std::f64::consts::SQRT_2))
}

/// Quadrature rule for a series of length `n` whose panels respect every
/// jump point of the given foci.
pub fn rule_for_foci<'a, I>(n: usize, foci: I, nodes: Option<usize>) -> QuadratureRule
where
    I: IntoIterator<Item = &'a FocusFunctional>,
{
    let mut breaks: Vec<f64> = foci.into_iter().flat_map(|f| f.jump_points()).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    QuadratureRule::composite(nodes.unwrap_or_else(|| default_node_count(n)), &breaks)
}

/// Serializable description of a built-in focus, as used in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FocusSpec {
    LagCov { k: usize },
    LagCorr { k: usize },
    BandMass { a: f64, b: f64 },
    ThresholdProb { y: f64, cond: Vec<f64> },
}

impl FocusSpec {
    pub const CONSTRUCTORS: &'static [&'static str] =
        &["lag_cov", "lag_corr", "band_mass", "threshold_prob"];

    pub fn build(&self) -> Result<FocusFunctional> {
        match self {
            FocusSpec::LagCov { k } => Ok(focus_lag_cov(*k)),
            FocusSpec::LagCorr { k } => focus_lag_corr(*k),
            FocusSpec::BandMass { a, b } => focus_band_mass(*a, *b),
            FocusSpec::ThresholdProb { y, cond } => focus_threshold_prob(*y, cond),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_transform_and_gradient() {
        let f = focus_lag_corr(1).unwrap();
        assert!((f.apply(&[8.0 / 3.0, 14.0 / 3.0]).unwrap() - 4.0 / 7.0).abs() < 1e-15);
        let g = f.gradient(&[1.0, 2.0]).unwrap();
        assert_eq!(g, vec![0.5, -0.25]);
        assert!(matches!(f.apply(&[0.0, 0.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn lag_corr_zero_rejected() {
        assert!(focus_lag_corr(0).is_err());
    }

    #[test]
    fn band_preconditions() {
        assert!(focus_band_mass(1.0, 1.0).is_err());
        assert!(focus_band_mass(1.0, 0.5).is_err());
        assert!(focus_band_mass(0.0, PI).is_ok());
        let b = FocusWeight::band(0.5, 1.0).unwrap();
        assert_eq!(b.jump_points(), vec![-1.0, -0.5, 0.5, 1.0]);
        assert_eq!(b.evaluate(0.5), 0.5);
        assert_eq!(b.evaluate(-0.7), 0.5);
        assert_eq!(b.evaluate(1.0), 0.0);
    }

    #[test]
    fn threshold_white_noise_half() {
        let f = focus_threshold_prob(0.0, &[1.7]).unwrap();
        assert_eq!(f.k(), 2);
        let p = f.apply(&[1.0, 0.0]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn threshold_ar1_closed_form() {
        // AR(1) ρ = 0.5, σ = 1: C(0) = 4/3, C(1) = 2/3; Y_{n+1} | Y_n = 1 ~ N(0.5, 1)
        let f = focus_threshold_prob(0.0, &[1.0]).unwrap();
        let p = f.apply(&[4.0 / 3.0, 2.0 / 3.0]).unwrap();
        // 1 − Φ(−0.5) = Φ(0.5)
        assert!((p - 0.691_462_461_274_013_1).abs() < 1e-12);
    }

    #[test]
    fn threshold_two_step_conditioning_matches_ar1_markov() {
        // For AR(1) only the last value matters.
        let rho: f64 = 0.5;
        let c: Vec<f64> = (0..3).map(|k| rho.powi(k) / (1.0 - rho * rho)).collect();
        let f = focus_threshold_prob(0.0, &[-3.0, 1.0]).unwrap();
        let p = f.apply(&c).unwrap();
        assert!((p - 0.691_462_461_274_013_1).abs() < 1e-10);
    }

    #[test]
    fn threshold_zero_variance_is_infeasible() {
        let f = focus_threshold_prob(0.0, &[1.0]).unwrap();
        assert!(matches!(
            f.apply(&[0.0, 0.0]),
            Err(Error::InfeasibleCovariance(_))
        ));
    }

    #[test]
    fn threshold_gradient_matches_finite_differences() {
        let f = focus_threshold_prob(0.3, &[0.2, -0.4, 1.1]).unwrap();
        let x = [1.5, 0.6, 0.1, -0.2];
        let g = f.gradient(&x).unwrap();
        for j in 0..x.len() {
            let h = 1e-4;
            let mut up = x;
            let mut dn = x;
            up[j] += h;
            dn[j] -= h;
            let fd = (f.apply(&up).unwrap() - f.apply(&dn).unwrap()) / (2.0 * h);
            assert!(
                (fd - g[j]).abs() <= 1e-6 * fd.abs().max(1e-3),
                "{j}: {fd} vs {}",
                g[j]
            );
        }
    }

    #[test]
    fn spec_round_trip_and_strictness() {
        let spec: FocusSpec = serde_json::from_str(r#"{"name":"lag_corr","k":2}"#).unwrap();
        assert_eq!(spec, FocusSpec::LagCorr { k: 2 });
        assert_eq!(spec.build().unwrap().name(), "lag_corr(2)");
        assert!(serde_json::from_str::<FocusSpec>(r#"{"name":"quantile","p":0.5}"#).is_err());
        assert!(serde_json::from_str::<FocusSpec>(r#"{"name":"lag_cov","k":1,"x":2}"#).is_err());
    }

    #[test]
    fn asymmetric_custom_uses_even_part() {
        let q = QuadratureRule::composite(64, &[]);
        let w = FocusWeight::custom(|x| x.sin() + 2.0, 3.0, vec![], false);
        assert!(w.even_on_grid(&q).iter().all(|v| (v - 2.0).abs() < 1e-15));
    }
}
