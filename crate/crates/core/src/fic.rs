//! Focused information criteria.
//!
//! For every candidate the squared bias of its focus estimator against the
//! nonparametric one is estimated and debiased, and added to its variance.
//! The same machinery runs against the raw periodogram (empirical mode) or a
//! known spectral density (analytic mode).

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    fit_whittle_spectrum, FitResult, OptimizerOptions, ReferenceGrid, ReferenceKind,
};
use crate::focus::FocusFunctional;
use crate::linalg::sym_inverse;
use crate::periodogram::{EmpiricalSpectrum, TimeSeries};
use crate::spectral::{ArmaFamily, QuadratureRule};
use crate::TOOLKIT_VERSION;

pub const NP_LABEL: &str = "NP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    Parametric(ArmaFamily),
    Nonparametric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateModel {
    pub label: String,
    pub kind: CandidateKind,
}

impl CandidateModel {
    pub fn parametric(family: ArmaFamily) -> Self {
        Self {
            label: family.label(),
            kind: CandidateKind::Parametric(family),
        }
    }

    pub fn nonparametric() -> Self {
        Self {
            label: NP_LABEL.into(),
            kind: CandidateKind::Nonparametric,
        }
    }

    pub fn family(&self) -> Option<&ArmaFamily> {
        match &self.kind {
            CandidateKind::Parametric(f) => Some(f),
            CandidateKind::Nonparametric => None,
        }
    }

    /// Parameter count; `None` for the nonparametric candidate.
    pub fn n_params(&self) -> Option<usize> {
        self.family().map(|f| f.dim())
    }
}

/// Candidate description used in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CandidateSpec {
    Ar { order: usize },
    Ma { order: usize },
    Arma { ar: usize, ma: usize },
    Np,
}

impl CandidateSpec {
    pub fn build(&self) -> CandidateModel {
        match *self {
            CandidateSpec::Ar { order } => CandidateModel::parametric(ArmaFamily::ar(order)),
            CandidateSpec::Ma { order } => CandidateModel::parametric(ArmaFamily::ma(order)),
            CandidateSpec::Arma { ar, ma } => CandidateModel::parametric(ArmaFamily::new(ar, ma)),
            CandidateSpec::Np => CandidateModel::nonparametric(),
        }
    }
}

/// Integrals ∫h_j f_θ̂ for every weight of the focus.
pub fn pm_components(
    family: &ArmaFamily,
    theta: &[f64],
    focus: &FocusFunctional,
    q: &QuadratureRule,
) -> Vec<f64> {
    let f = family.density_grid(theta, q);
    focus
        .weights()
        .iter()
        .map(|h| {
            let hv = h.even_on_grid(q);
            2.0 * q
                .weights()
                .iter()
                .zip(hv.iter().zip(&f))
                .map(|(w, (h, f))| w * h * f)
                .sum::<f64>()
        })
        .collect()
}

/// Integrals ∫h_j g for the reference spectrum (∫h_j I_n in empirical mode).
pub fn np_components(
    reference: &ReferenceGrid,
    focus: &FocusFunctional,
    q: &QuadratureRule,
) -> Vec<f64> {
    focus
        .weights()
        .iter()
        .map(|h| {
            let hv = h.even_on_grid(q);
            2.0 * q
                .weights()
                .iter()
                .zip(hv.iter().zip(reference.g()))
                .map(|(w, (h, g))| w * h * g)
                .sum::<f64>()
        })
        .collect()
}

/// Parametric focus estimate H(∫h₁ f_θ̂, …, ∫h_k f_θ̂).
pub fn pm_focus(fit: &FitResult, focus: &FocusFunctional, q: &QuadratureRule) -> Result<f64> {
    focus
        .apply(&pm_components(&fit.family, fit.theta(), focus, q))
        .map_err(|e| e.with_candidate(&fit.family.label()))
}

/// Rows ∫h_j(ω) ∇f_θ̂(ω) w(ω) dω for a per-node multiplier w.
fn weighted_gradient_rows(
    fit: &FitResult,
    focus: &FocusFunctional,
    q: &QuadratureRule,
    mult: impl Fn(usize, f64) -> f64,
) -> DMatrix<f64> {
    let p = fit.p();
    let k = focus.k();
    let ev = fit.family.eval_grid(fit.theta(), q, false);
    let hs: Vec<Vec<f64>> = focus.weights().iter().map(|h| h.even_on_grid(q)).collect();
    let mut m = DMatrix::zeros(k, p);
    for (i, &fi) in ev.density.iter().enumerate() {
        let base = 2.0 * q.weights()[i] * fi * mult(i, fi);
        let d = ev.grad_at(i);
        for (j, h) in hs.iter().enumerate() {
            let s = base * h[i];
            for a in 0..p {
                m[(j, a)] += s * d[a];
            }
        }
    }
    m
}

/// c: k×p matrix with rows ∫h_j ∇f_θ̂.
pub fn c_matrix(fit: &FitResult, focus: &FocusFunctional, q: &QuadratureRule) -> DMatrix<f64> {
    weighted_gradient_rows(fit, focus, q, |_, _| 1.0)
}

/// d: k×p matrix with rows ∫h_j ∇f_θ̂ ĝ²/f_θ̂², ĝ² from the reference grid.
pub fn d_matrix(
    reference: &ReferenceGrid,
    fit: &FitResult,
    focus: &FocusFunctional,
    q: &QuadratureRule,
) -> DMatrix<f64> {
    let gsq = reference.g_sq();
    weighted_gradient_rows(fit, focus, q, |i, f| gsq[i] / (f * f))
}

/// 4π∫h_i h_j ĝ², the limit covariance of the nonparametric components.
pub fn np_covariance(
    reference: &ReferenceGrid,
    focus: &FocusFunctional,
    q: &QuadratureRule,
) -> DMatrix<f64> {
    let k = focus.k();
    let hs: Vec<Vec<f64>> = focus.weights().iter().map(|h| h.even_on_grid(q)).collect();
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v: f64 = q
                .weights()
                .iter()
                .enumerate()
                .map(|(t, w)| w * hs[i][t] * hs[j][t] * reference.g_sq()[t])
                .sum();
            m[(i, j)] = 8.0 * PI * v;
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variances {
    pub v_np: f64,
    pub v_pm: f64,
    pub v_c: f64,
}

/// v̂_np alone, for the nonparametric candidate.
pub fn np_variance(
    reference: &ReferenceGrid,
    focus: &FocusFunctional,
    q: &QuadratureRule,
) -> Result<f64> {
    let x = np_components(reference, focus, q);
    let g = DVector::from_vec(focus.gradient(&x)?);
    Ok(quad(&g, &np_covariance(reference, focus, q), &g))
}

fn quad(a: &DVector<f64>, m: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    (a.transpose() * m * b)[(0, 0)]
}

/// (v̂_np, v̂_pm, v̂_c) for a parametric candidate.
pub fn variances(
    reference: &ReferenceGrid,
    fit: &FitResult,
    focus: &FocusFunctional,
    q: &QuadratureRule,
) -> Result<Variances> {
    let label = fit.family.label();
    let x_np = np_components(reference, focus, q);
    let x_pm = pm_components(&fit.family, fit.theta(), focus, q);
    let g_np = DVector::from_vec(focus.gradient(&x_np)?);
    let g_pm = DVector::from_vec(
        focus
            .gradient(&x_pm)
            .map_err(|e| e.with_candidate(&label))?,
    );
    let j_inv = sym_inverse(&fit.j_hat)?;
    let c = c_matrix(fit, focus, q);
    let d = d_matrix(reference, fit, focus, q);
    let cj = &c * &j_inv;
    let v_pm = quad(&g_pm, &(&cj * &fit.k_hat * cj.transpose()), &g_pm);
    let v_c = quad(&g_pm, &(&cj * d.transpose()), &g_np);
    let v_np = quad(&g_np, &np_covariance(reference, focus, q), &g_np);
    Ok(Variances { v_np, v_pm, v_c })
}

/// One focus' contribution to a candidate's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusTerm {
    pub focus: String,
    pub weight: f64,
    pub mu_hat: f64,
    pub b_hat: Option<f64>,
    pub v_np: f64,
    pub v_pm: Option<f64>,
    pub v_c: Option<f64>,
    pub kappa: Option<f64>,
    pub bsq_trunc: f64,
    pub fic: f64,
    pub z_n: Option<f64>,
}

impl FocusTerm {
    /// Z_n = n b̂² / (v̂_np − v̂_c).
    pub fn z_statistic(&self, n: usize) -> Result<f64> {
        let (Some(b), Some(v_c)) = (self.b_hat, self.v_c) else {
            return Err(Error::DiagnosticUnavailable(
                "Z_n is defined for parametric candidates only".into(),
            ));
        };
        z_statistic(n, b, self.v_np, v_c)
    }
}

/// Z_n = n b̂² / (v̂_np − v̂_c); the parametric candidate is preferred over
/// the nonparametric one iff Z_n ≤ 2 (when v̂_np ≥ v̂_pm).
pub fn z_statistic(n: usize, b_hat: f64, v_np: f64, v_c: f64) -> Result<f64> {
    let denom = v_np - v_c;
    if !(denom > 0.0) {
        return Err(Error::DiagnosticUnavailable(format!(
            "v_np - v_c = {denom:e} is not positive"
        )));
    }
    Ok(n as f64 * b_hat * b_hat / denom)
}

/// Evaluates FIC terms against a fixed reference spectrum.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a> {
    reference: &'a ReferenceGrid,
    n: usize,
    q: &'a QuadratureRule,
}

impl<'a> Scorer<'a> {
    pub fn new(reference: &'a ReferenceGrid, n: usize, q: &'a QuadratureRule) -> Self {
        assert!(n >= 1);
        Self { reference, n, q }
    }

    /// Nonparametric term: fic = v̂_np / n.
    pub fn np_term(&self, focus: &FocusFunctional, weight: f64) -> Result<FocusTerm> {
        let x = np_components(self.reference, focus, self.q);
        let mu_hat = focus.apply(&x)?;
        let v_np = np_variance(self.reference, focus, self.q)?;
        Ok(FocusTerm {
            focus: focus.name().into(),
            weight,
            mu_hat,
            b_hat: None,
            v_np,
            v_pm: None,
            v_c: None,
            kappa: None,
            bsq_trunc: 0.0,
            fic: v_np / self.n as f64,
            z_n: None,
        })
    }

    /// Parametric term: fic = max(0, b̂² − κ̂/n) + v̂_pm/n.
    pub fn pm_term(
        &self,
        fit: &FitResult,
        focus: &FocusFunctional,
        weight: f64,
    ) -> Result<FocusTerm> {
        let n = self.n as f64;
        let mu_np = focus.apply(&np_components(self.reference, focus, self.q))?;
        let mu_pm = pm_focus(fit, focus, self.q)?;
        let v = variances(self.reference, fit, focus, self.q)?;
        let b = mu_pm - mu_np;
        let kappa = v.v_pm + v.v_np - 2.0 * v.v_c;
        let bsq_trunc = (b * b - kappa / n).max(0.0);
        Ok(FocusTerm {
            focus: focus.name().into(),
            weight,
            mu_hat: mu_pm,
            b_hat: Some(b),
            v_np: v.v_np,
            v_pm: Some(v.v_pm),
            v_c: Some(v.v_c),
            kappa: Some(kappa),
            bsq_trunc,
            fic: bsq_trunc + v.v_pm / n,
            z_n: z_statistic(self.n, b, v.v_np, v.v_c).ok(),
        })
    }
}

/// Nonnegative focus weights for AFIC.
#[derive(Debug, Clone)]
pub struct AficWeights {
    items: Vec<(FocusFunctional, f64)>,
}

impl AficWeights {
    pub fn new(items: Vec<(FocusFunctional, f64)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Precondition("AFIC needs at least one focus".into()));
        }
        if let Some((f, w)) = items.iter().find(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Precondition(format!(
                "weight {w} for focus {} is not a finite nonnegative number",
                f.name()
            )));
        }
        if items.iter().all(|(_, w)| *w == 0.0) {
            return Err(Error::Precondition("AFIC weights are all zero".into()));
        }
        Ok(Self { items })
    }

    /// Single focus with weight one.
    pub fn point(focus: FocusFunctional) -> Self {
        Self {
            items: vec![(focus, 1.0)],
        }
    }

    pub fn items(&self) -> &[(FocusFunctional, f64)] {
        &self.items
    }

    /// Weights divided by their sum.
    pub fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.items.iter().map(|(_, w)| w).sum();
        self.items.iter().map(|(_, w)| w / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Fic,
    Afic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusEntry {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub label: String,
    pub kind: String,
    pub n_params: Option<usize>,
    pub theta_hat: Option<Vec<f64>>,
    pub converged: Option<bool>,
    pub terms: Vec<FocusTerm>,
    pub fic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FicReport {
    pub toolkit_version: String,
    pub criterion: Criterion,
    pub reference: String,
    pub foci: Vec<FocusEntry>,
    pub n: usize,
    pub quadrature_nodes: usize,
    pub rows: Vec<CandidateRow>,
    /// Labels of candidates with a score, best first.
    pub ranking: Vec<String>,
}

impl FicReport {
    pub fn row(&self, label: &str) -> Option<&CandidateRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn best(&self) -> Option<&str> {
        self.ranking.first().map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Long-format table with columns focus, candidate, metric, value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["focus", "candidate", "metric", "value"])?;
        let run = "_run";
        let meta = [
            ("toolkit_version", self.toolkit_version.clone()),
            ("criterion", format!("{:?}", self.criterion).to_lowercase()),
            ("reference", self.reference.clone()),
            ("n", self.n.to_string()),
            ("quadrature_nodes", self.quadrature_nodes.to_string()),
        ];
        for (k, v) in meta {
            w.write_record([run, run, k, &v])?;
        }
        for f in &self.foci {
            w.write_record([f.name.as_str(), run, "weight", &f.weight.to_string()])?;
        }
        let score_focus = match self.criterion {
            Criterion::Fic => self.foci.first().map_or("", |f| f.name.as_str()),
            Criterion::Afic => "_afic",
        };
        for row in &self.rows {
            if let Some(e) = &row.error {
                w.write_record([score_focus, &row.label, "error", e])?;
            }
            for t in &row.terms {
                let metrics = [
                    ("mu_hat", Some(t.mu_hat)),
                    ("b_hat", t.b_hat),
                    ("v_np", Some(t.v_np)),
                    ("v_pm", t.v_pm),
                    ("v_c", t.v_c),
                    ("kappa", t.kappa),
                    ("bsq_trunc", Some(t.bsq_trunc)),
                    ("fic", Some(t.fic)),
                    ("z_n", t.z_n),
                ];
                for (m, v) in metrics {
                    if let Some(v) = v {
                        w.write_record([t.focus.as_str(), &row.label, m, &v.to_string()])?;
                    }
                }
            }
            if let Some(score) = row.fic {
                let metric = match self.criterion {
                    Criterion::Fic => "score",
                    Criterion::Afic => "afic",
                };
                w.write_record([score_focus, &row.label, metric, &score.to_string()])?;
            }
        }
        for (i, label) in self.ranking.iter().enumerate() {
            w.write_record([score_focus, label, "rank", &(i + 1).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_candidates(candidates: &[CandidateModel]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::Precondition("candidate list is empty".into()));
    }
    let nps = candidates
        .iter()
        .filter(|c| c.kind == CandidateKind::Nonparametric)
        .count();
    if nps > 1 {
        return Err(Error::Precondition(
            "at most one nonparametric candidate".into(),
        ));
    }
    for (i, c) in candidates.iter().enumerate() {
        if candidates[..i].iter().any(|d| d.label == c.label) {
            return Err(Error::Precondition(format!(
                "duplicate candidate label {}",
                c.label
            )));
        }
    }
    Ok(())
}

/// Relative gap below which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-6;

/// Orders scored candidates by score; scores within [`TIE_TOLERANCE`] of the
/// best score of their group are tied and ordered by parameter count (NP
/// last), then label.
pub fn rank(rows: &[(String, Option<usize>, f64)]) -> Vec<String> {
    let tie_key = |r: &&(String, Option<usize>, f64)| (r.1.unwrap_or(usize::MAX), r.0.clone());
    let mut v: Vec<&(String, Option<usize>, f64)> = rows.iter().collect();
    v.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then_with(|| tie_key(a).cmp(&tie_key(b)))
    });
    let mut out = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        let lead = v[i].2;
        let mut j = i + 1;
        while j < v.len() && (v[j].2 - lead).abs() <= TIE_TOLERANCE * lead.abs().max(v[j].2.abs()) {
            j += 1;
        }
        let mut group = v[i..j].to_vec();
        group.sort_by_key(tie_key);
        out.extend(group.into_iter().map(|r| r.0.clone()));
        i = j;
    }
    out
}

/// FIC for a single focus on an observed series.
pub fn fic_scores(
    y: &TimeSeries,
    candidates: &[CandidateModel],
    focus: &FocusFunctional,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<FicReport> {
    build_report(
        y,
        candidates,
        &AficWeights::point(focus.clone()),
        Criterion::Fic,
        q,
        opts,
    )
}

/// AFIC over weighted foci on an observed series.
pub fn afic_scores(
    y: &TimeSeries,
    candidates: &[CandidateModel],
    weights: &AficWeights,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<FicReport> {
    build_report(y, candidates, weights, Criterion::Afic, q, opts)
}

fn build_report(
    y: &TimeSeries,
    candidates: &[CandidateModel],
    weights: &AficWeights,
    criterion: Criterion,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<FicReport> {
    check_candidates(candidates)?;
    let spec = EmpiricalSpectrum::new(y.clone(), q);
    let reference = ReferenceGrid::empirical(&spec, q);
    let scorer = Scorer::new(&reference, y.len(), q);
    let degenerate = y.require_estimable(2).err();
    let norm = weights.normalized();

    let mut rows = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let mut row = CandidateRow {
            label: cand.label.clone(),
            kind: match cand.kind {
                CandidateKind::Parametric(_) => "parametric".into(),
                CandidateKind::Nonparametric => "nonparametric".into(),
            },
            n_params: cand.n_params(),
            theta_hat: None,
            converged: None,
            terms: Vec::new(),
            fic: None,
            error: None,
        };
        let outcome = (|| -> Result<()> {
            if let Some(e) = &degenerate {
                return Err(e.clone());
            }
            let fit = match cand.family() {
                Some(fam) => {
                    let fit = fit_whittle_spectrum(&spec, fam, q, opts)?;
                    row.theta_hat = Some(fit.theta().to_vec());
                    row.converged = Some(fit.converged);
                    Some(fit)
                }
                None => None,
            };
            let mut total = 0.0;
            for ((focus, _), &w) in weights.items().iter().zip(&norm) {
                if w == 0.0 {
                    continue;
                }
                let term = match &fit {
                    Some(fit) => scorer.pm_term(fit, focus, w)?,
                    None => scorer.np_term(focus, w)?,
                };
                total += w * term.fic;
                row.terms.push(term);
            }
            row.fic = Some(total);
            Ok(())
        })();
        if let Err(e) = outcome {
            row.error = Some(e.with_candidate(&cand.label).to_string());
            row.fic = None;
        }
        rows.push(row);
    }

    let scored: Vec<(String, Option<usize>, f64)> = rows
        .iter()
        .filter_map(|r| r.fic.map(|f| (r.label.clone(), r.n_params, f)))
        .collect();
    Ok(FicReport {
        toolkit_version: TOOLKIT_VERSION.into(),
        criterion,
        reference: match reference.kind() {
            ReferenceKind::Empirical => "periodogram".into(),
            ReferenceKind::Analytic => "analytic".into(),
        },
        foci: weights
            .items()
            .iter()
            .zip(&norm)
            .map(|((f, _), w)| FocusEntry {
                name: f.name().into(),
                weight: *w,
            })
            .collect(),
        n: y.len(),
        quadrature_nodes: q.len(),
        ranking: rank(&scored),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::fit_at;
    use crate::focus::{focus_lag_corr, focus_lag_cov};
    use crate::spectral::default_quadrature;

    fn analytic_fit(
        family: ArmaFamily,
        theta: &[f64],
        q: &QuadratureRule,
    ) -> (ReferenceGrid, FitResult) {
        let r = ReferenceGrid::analytic(&family.spectrum(theta), q);
        let fit = fit_at(&r, 100, &family, theta, q).unwrap();
        (r, fit)
    }

    #[test]
    fn white_noise_population_variances() {
        let q = default_quadrature(100);
        let (r, fit) = analytic_fit(ArmaFamily::white_noise(), &[1.0], &q);
        let v = variances(&r, &fit, &focus_lag_cov(0), &q).unwrap();
        assert!((v.v_np - 2.0).abs() < 1e-12);
        assert!((v.v_pm - 2.0).abs() < 1e-12);
        assert!((v.v_c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn c_matrix_white_noise() {
        let q = default_quadrature(100);
        let (_, fit) = analytic_fit(ArmaFamily::white_noise(), &[1.5], &q);
        let c0 = c_matrix(&fit, &focus_lag_cov(0), &q);
        assert!((c0[(0, 0)] - 3.0).abs() < 1e-12);
        let c1 = c_matrix(&fit, &focus_lag_cov(1), &q);
        assert!(c1[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn pm_focus_ar1() {
        let q = default_quadrature(100);
        let (_, fit) = analytic_fit(ArmaFamily::ar(1), &[0.5, 1.0], &q);
        assert!((pm_focus(&fit, &focus_lag_cov(1), &q).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((pm_focus(&fit, &focus_lag_corr(1).unwrap(), &q).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn d_equals_c_under_model() {
        let q = default_quadrature(100);
        let (r, fit) = analytic_fit(ArmaFamily::new(1, 1), &[0.5, 0.3, 1.2], &q);
        let f = focus_lag_corr(2).unwrap();
        let d = d_matrix(&r, &fit, &f, &q);
        let c = c_matrix(&fit, &f, &q);
        assert!((d - c).abs().max() < 1e-12);
    }

    #[test]
    fn z_statistic_edges() {
        assert_eq!(z_statistic(100, 0.0, 2.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            z_statistic(100, 0.3, 1.0, 1.0),
            Err(Error::DiagnosticUnavailable(_))
        ));
    }

    #[test]
    fn ranking_tie_breaks() {
        let rows = vec![
            ("NP".to_string(), None, 1.0),
            ("MA(1)".to_string(), Some(2), 1.0),
            ("AR(1)".to_string(), Some(2), 1.0),
            ("AR(0)".to_string(), Some(1), 1.0),
            ("AR(2)".to_string(), Some(3), 0.5),
        ];
        assert_eq!(rank(&rows), vec!["AR(2)", "AR(0)", "AR(1)", "MA(1)", "NP"]);
    }

    #[test]
    fn rounding_level_gaps_are_ties() {
        let rows = vec![
            ("NP".to_string(), None, 1.0 - 2e-7),
            ("AR(1)".to_string(), Some(2), 1.0),
            ("AR(0)".to_string(), Some(1), 1.0 + 1e-5),
        ];
        assert_eq!(rank(&rows), vec!["AR(1)", "NP", "AR(0)"]);
    }

    #[test]
    fn afic_weights_validation() {
        assert!(AficWeights::new(vec![]).is_err());
        assert!(AficWeights::new(vec![(focus_lag_cov(0), 0.0)]).is_err());
        assert!(AficWeights::new(vec![(focus_lag_cov(0), -1.0)]).is_err());
        let w = AficWeights::new(vec![(focus_lag_cov(0), 1.0), (focus_lag_cov(1), 3.0)]).unwrap();
        assert_eq!(w.normalized(), vec![0.25, 0.75]);
    }

    #[test]
    fn candidate_spec_strict() {
        let c: CandidateSpec = serde_json::from_str(r#"{"kind":"arma","ar":1,"ma":1}"#).unwrap();
        assert_eq!(c.build().label, "ARMA(1,1)");
        assert!(serde_json::from_str::<CandidateSpec>(r#"{"kind":"ar","order":1,"x":0}"#).is_err());
    }
}
