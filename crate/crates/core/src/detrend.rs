//! Ordinary least squares trend removal.
//!
//! Residuals of a trend linear in β are tagged as detrended and can be fed
//! to the rest of the pipeline unchanged.

use std::f64::consts::PI;
use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodogram::TimeSeries;

/// Smallest singular value allowed, relative to the largest.
const RANK_TOL: f64 = 1e-10;

/// Named design builders, as used in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrendKind {
    MeanOnly,
    LinearTime,
    /// Intercept plus a cosine/sine pair for each period.
    Harmonic {
        periods: Vec<f64>,
    },
    /// Regressors loaded from a CSV file, one column each.
    Custom {
        path: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendDesign {
    name: String,
    x: DMatrix<f64>,
}

impl TrendDesign {
    pub fn mean_only(n: usize) -> Self {
        Self {
            name: "mean_only".into(),
            x: DMatrix::from_element(n, 1, 1.0),
        }
    }

    /// Columns 1 and t, t = 1..n.
    pub fn linear_time(n: usize) -> Self {
        Self {
            name: "linear_time".into(),
            x: DMatrix::from_fn(n, 2, |t, j| if j == 0 { 1.0 } else { (t + 1) as f64 }),
        }
    }

    pub fn harmonic(n: usize, periods: &[f64]) -> Result<Self> {
        if let Some(p) = periods.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::Design(format!("period {p} is not positive")));
        }
        let cols = 1 + 2 * periods.len();
        let x = DMatrix::from_fn(n, cols, |t, j| {
            if j == 0 {
                return 1.0;
            }
            let arg = 2.0 * PI * (t + 1) as f64 / periods[(j - 1) / 2];
            if j % 2 == 1 {
                arg.cos()
            } else {
                arg.sin()
            }
        });
        Ok(Self {
            name: format!("harmonic{periods:?}"),
            x,
        })
    }

    pub fn custom(x: DMatrix<f64>) -> Self {
        Self {
            name: "custom".into(),
            x,
        }
    }

    /// Multi-column numeric CSV, optional header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => {
                    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                        return Err(Error::Parse {
                            row: i + 1,
                            message: format!("non-finite value {bad}"),
                        });
                    }
                    if rows.first().is_some_and(|r| r.len() != v.len()) {
                        return Err(Error::Parse {
                            row: i + 1,
                            message: format!(
                                "expected {} columns, found {}",
                                rows[0].len(),
                                v.len()
                            ),
                        });
                    }
                    rows.push(v);
                }
                Err(_) if i == 0 => continue,
                Err(e) => {
                    return Err(Error::Parse {
                        row: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                row: 0,
                message: "design file has no numeric rows".into(),
            });
        }
        let (n, p) = (rows.len(), rows[0].len());
        Ok(Self::custom(DMatrix::from_fn(n, p, |i, j| rows[i][j])))
    }

    pub fn build(kind: &TrendKind, n: usize) -> Result<Self> {
        match kind {
            TrendKind::MeanOnly => Ok(Self::mean_only(n)),
            TrendKind::LinearTime => Ok(Self::linear_time(n)),
            TrendKind::Harmonic { periods } => Self::harmonic(n, periods),
            TrendKind::Custom { path } => Self::from_csv(std::fs::File::open(path)?),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    fn check_rank(&self) -> Result<()> {
        let sv = self.x.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if !(max > 0.0) || min <= RANK_TOL * max {
            return Err(Error::Design(format!(
                "design {} is rank deficient (singular values {min:e} .. {max:e})",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta_hat: Vec<f64>,
    pub residuals: TimeSeries,
}

/// β̂ = (XᵀX)⁻¹Xᵀy by QR, and residuals y − Xβ̂.
pub fn fit_ols(y: &TimeSeries, design: &TrendDesign) -> Result<OlsFit> {
    let n = y.len();
    if design.n() != n {
        return Err(Error::Design(format!(
            "design has {} rows but the series has {n} values",
            design.n()
        )));
    }
    if n <= design.p() {
        return Err(Error::Precondition(format!(
            "OLS needs n > {} regressors, got n = {n}",
            design.p()
        )));
    }
    design.check_rank()?;
    let qr = design.x.clone().qr();
    let yv = DVector::from_column_slice(y.values());
    let qty = qr.q().transpose() * &yv;
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Design("triangular factor is singular".into()))?;
    let resid = yv - &design.x * &beta;
    Ok(OlsFit {
        beta_hat: beta.iter().copied().collect(),
        residuals: TimeSeries::detrended(resid.iter().copied().collect())?,
    })
}

/// Residual series after removing the fitted trend.
pub fn detrend_pipeline(y: &TimeSeries, design: &TrendDesign) -> Result<TimeSeries> {
    Ok(fit_ols(y, design)?.residuals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v).unwrap()
    }

    #[test]
    fn constant_fit() {
        let fit = fit_ols(&ts(vec![2.0, 2.0, 2.0]), &TrendDesign::mean_only(3)).unwrap();
        assert!((fit.beta_hat[0] - 2.0).abs() < 1e-15);
        assert!(fit.residuals.values().iter().all(|r| r.abs() < 1e-15));
        assert!(fit.residuals.is_detrended());
    }

    #[test]
    fn exact_line() {
        let y = ts((1..=20).map(|t| 1.0 + 0.5 * t as f64).collect());
        let fit = fit_ols(&y, &TrendDesign::linear_time(20)).unwrap();
        assert!(fit.residuals.values().iter().all(|r| r.abs() < 1e-10));
        assert!((fit.beta_hat[0] - 1.0).abs() < 1e-10 && (fit.beta_hat[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mean_only_is_the_mean() {
        let v = vec![0.3, 1.9, -2.2, 4.0, 0.1];
        let mean = v.iter().sum::<f64>() / 5.0;
        let fit = fit_ols(&ts(v), &TrendDesign::mean_only(5)).unwrap();
        assert!((fit.beta_hat[0] - mean).abs() < 1e-14);
    }

    #[test]
    fn duplicated_column_rejected() {
        let x = DMatrix::from_fn(6, 2, |t, _| t as f64 + 1.0);
        let r = fit_ols(&ts(vec![1.0; 6]), &TrendDesign::custom(x));
        assert!(matches!(r, Err(Error::Design(_))));
    }

    #[test]
    fn harmonic_residuals_orthogonal() {
        let y = ts((0..40)
            .map(|t| ((t * 13 % 7) as f64).sin() + 0.1 * t as f64)
            .collect());
        let d = TrendDesign::harmonic(40, &[12.0, 5.0]).unwrap();
        let r = detrend_pipeline(&y, &d).unwrap();
        let xr = d.matrix().transpose() * DVector::from_column_slice(r.values());
        assert!(xr.amax() < 1e-10);
    }

    #[test]
    fn csv_design_with_header() {
        let d = TrendDesign::from_csv("a,b\n1,0\n1,1\n1,2\n".as_bytes()).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        let e = TrendDesign::from_csv("1,0\n1,x\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 2, .. }));
    }
}
