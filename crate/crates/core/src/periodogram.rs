//! Raw periodogram and integrated-periodogram functionals.

use std::borrow::Cow;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::focus::{FocusFunctional, FocusWeight};
use crate::spectral::QuadratureRule;

/// Observed series y₁, …, y_n. Values are finite; `n ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    #[serde(default)]
    detrended: bool,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("time series is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "non-finite value {} at position {}",
                values[i],
                i + 1
            )));
        }
        Ok(Self {
            values,
            detrended: false,
        })
    }

    pub(crate) fn detrended(values: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(values)?;
        s.detrended = true;
        Ok(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True for residual series produced by [`crate::detrend`].
    pub fn is_detrended(&self) -> bool {
        self.detrended
    }

    /// (1/n) Σ y_t².
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|v| *v == self.values[0])
    }

    /// Rejects series too short or too flat for estimation.
    pub fn require_estimable(&self, min_len: usize) -> Result<()> {
        if self.len() < min_len.max(2) {
            return Err(Error::Precondition(format!(
                "series of length {} is too short (need at least {})",
                self.len(),
                min_len.max(2)
            )));
        }
        if self.is_constant() {
            return Err(Error::DegenerateInput(
                "series is constant (zero sample variance)".into(),
            ));
        }
        Ok(())
    }
}

/// (1/n) Σ_{t=1}^{n−k} y_t y_{t+k}.
pub fn sample_autocovariance(y: &TimeSeries, lag: usize) -> f64 {
    let v = y.values();
    if lag >= v.len() {
        return 0.0;
    }
    v.iter().zip(&v[lag..]).map(|(a, b)| a * b).sum::<f64>() / v.len() as f64
}

/// I_n(ω) = (2πn)⁻¹ |Σ_t y_t e^{iωt}|².
pub fn periodogram_at(y: &TimeSeries, omega: f64) -> f64 {
    let (s, c) = omega.sin_cos();
    periodogram_trig(y.values(), c, s)
}

fn periodogram_trig(y: &[f64], c: f64, s: f64) -> f64 {
    // Horner in z = e^{iω}; the overall unimodular factor drops out of |·|².
    let (mut re, mut im) = (0.0, 0.0);
    for &v in y.iter().rev() {
        (re, im) = (re * c - im * s + v, re * s + im * c);
    }
    (re * re + im * im) / (2.0 * PI * y.len() as f64)
}

/// Periodogram values at every node of `q`.
pub fn periodogram_grid(y: &TimeSeries, q: &QuadratureRule) -> Vec<f64> {
    q.cos_nodes()
        .iter()
        .zip(q.sin_nodes())
        .map(|(&c, &s)| periodogram_trig(y.values(), c, s))
        .collect()
}

/// The periodogram of a series with values cached on one quadrature rule.
#[derive(Debug, Clone)]
pub struct EmpiricalSpectrum {
    series: TimeSeries,
    grid: Vec<f64>,
    key: RuleKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RuleKey(usize, u64, u64);

impl RuleKey {
    fn of(q: &QuadratureRule) -> Self {
        let nodes = q.nodes();
        RuleKey(
            nodes.len(),
            nodes.first().map_or(0, |x| x.to_bits()),
            nodes.iter().sum::<f64>().to_bits(),
        )
    }
}

impl EmpiricalSpectrum {
    pub fn new(series: TimeSeries, q: &QuadratureRule) -> Self {
        let grid = periodogram_grid(&series, q);
        Self {
            series,
            grid,
            key: RuleKey::of(q),
        }
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn n(&self) -> usize {
        self.series.len()
    }

    pub fn evaluate(&self, omega: f64) -> f64 {
        periodogram_at(&self.series, omega)
    }

    /// Cached values on the construction rule.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Values on `q`, reusing the cache when `q` is the construction rule.
    pub fn grid_for(&self, q: &QuadratureRule) -> Cow<'_, [f64]> {
        if RuleKey::of(q) == self.key {
            Cow::Borrowed(&self.grid)
        } else {
            Cow::Owned(periodogram_grid(&self.series, q))
        }
    }
}

/// Ĝ_n(ω) = ∫_{−π}^{ω} I_n(u) du.
pub fn integrate_distribution(
    spec: &EmpiricalSpectrum,
    omega: f64,
    q: &QuadratureRule,
) -> Result<f64> {
    if !(-PI..=PI).contains(&omega) {
        return Err(Error::Precondition(format!(
            "frequency {omega} outside [-pi, pi]"
        )));
    }
    let total = q.sum_full(&spec.grid_for(q));
    if omega == PI {
        return Ok(total);
    }
    if omega == -PI {
        return Ok(0.0);
    }
    let a = omega.abs();
    let partial = if a == 0.0 {
        0.0
    } else {
        let sub = q.scaled_to(a);
        sub.sum_half(&periodogram_grid(spec.series(), &sub))
    };
    Ok(0.5 * total + omega.signum() * partial)
}

/// ∫_{−π}^{π} h₀(ω) I_n(ω) dω.
pub fn np_focus_linear(spec: &EmpiricalSpectrum, h0: &FocusWeight, q: &QuadratureRule) -> f64 {
    let h = h0.even_on_grid(q);
    let grid = spec.grid_for(q);
    2.0 * q
        .weights()
        .iter()
        .zip(h.iter().zip(grid.iter()))
        .map(|(w, (h, i))| w * h * i)
        .sum::<f64>()
}

/// The vector (∫h₁ I_n, …, ∫h_k I_n).
pub fn np_focus_components(
    spec: &EmpiricalSpectrum,
    focus: &FocusFunctional,
    q: &QuadratureRule,
) -> Vec<f64> {
    focus
        .weights()
        .iter()
        .map(|h| np_focus_linear(spec, h, q))
        .collect()
}

/// Nonparametric focus estimate H(∫h₁ I_n, …, ∫h_k I_n).
pub fn np_focus(
    spec: &EmpiricalSpectrum,
    focus: &FocusFunctional,
    q: &QuadratureRule,
) -> Result<f64> {
    focus.apply(&np_focus_components(spec, focus, q))
}
