//! Exact Gaussian simulation and seeded Monte Carlo studies.
//!
//! Replication r draws from the ChaCha stream `r` of the run seed, so
//! results do not depend on how replications are spread over workers.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    aic_bic, discrepancy, fit_gaussian_ml_from, fit_whittle_spectrum, least_false,
    OptimizerOptions, ReferenceGrid, MAX_EXACT_LEN,
};
use crate::fic::{pm_components, rank, CandidateKind, CandidateModel, Scorer};
use crate::focus::{rule_for_foci, FocusFunctional};
use crate::linalg::innovations;
use crate::periodogram::{np_focus, EmpiricalSpectrum, TimeSeries};
use crate::spectral::{
    autocovariances, autocovariances_from_grid, ArmaFamily, QuadratureRule, SpectralDensity,
};
use crate::TOOLKIT_VERSION;

/// Draws exact zero-mean Gaussian series of one length from one spectrum.
#[derive(Debug, Clone)]
pub struct Sampler {
    acov: Vec<f64>,
    n: usize,
    jittered: bool,
}

impl Sampler {
    pub fn new(f: &dyn SpectralDensity, n: usize, q: &QuadratureRule) -> Result<Self> {
        Self::from_autocovariances(autocovariances(f, n.saturating_sub(1), q), n)
    }

    pub fn from_autocovariances(mut acov: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_EXACT_LEN {
            return Err(Error::Precondition(format!(
                "simulation length must be in 1..={MAX_EXACT_LEN}, got {n}"
            )));
        }
        if acov.len() < n {
            return Err(Error::Precondition("too few autocovariances".into()));
        }
        acov.truncate(n);
        if innovations(&acov, n, |_, m, _| m).is_ok() {
            return Ok(Self {
                acov,
                n,
                jittered: false,
            });
        }
        acov[0] += 1e-10 * acov[0].abs();
        innovations(&acov, n, |_, m, _| m).map_err(|e| {
            Error::NumericDegeneracy(format!(
                "covariance is not positive definite after jitter: {e}"
            ))
        })?;
        Ok(Self {
            acov,
            n,
            jittered: true,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when C(0) had to be inflated by 1e−10·C(0).
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> TimeSeries {
        let mut out = Vec::with_capacity(self.n);
        innovations(&self.acov, self.n, |_, mean, var| {
            let z: f64 = StandardNormal.sample(rng);
            let y = mean + var.sqrt() * z;
            out.push(y);
            y
        })
        .expect("validated at construction");
        TimeSeries::new(out).expect("finite draws")
    }
}

/// RNG for replication `stream` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One exact draw of length `n`.
pub fn sample_gaussian(
    f: &dyn SpectralDensity,
    n: usize,
    seed: u64,
    q: &QuadratureRule,
) -> Result<TimeSeries> {
    let sampler = Sampler::new(f, n, q)?;
    Ok(sampler.draw(&mut replication_rng(seed, 0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Fic,
    Aic,
    Bic,
    AlwaysNp,
}

impl Comparator {
    pub const ALL: [Comparator; 4] = [
        Comparator::Fic,
        Comparator::Aic,
        Comparator::Bic,
        Comparator::AlwaysNp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Comparator::Fic => "fic",
            Comparator::Aic => "aic",
            Comparator::Bic => "bic",
            Comparator::AlwaysNp => "always_np",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimSpec {
    pub truth_family: ArmaFamily,
    pub truth_theta: Vec<f64>,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub candidates: Vec<CandidateModel>,
    pub foci: Vec<FocusFunctional>,
    pub comparators: Vec<Comparator>,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub quad_nodes: Option<usize>,
    pub optimizer: OptimizerOptions,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Precondition(
                "replications must be at least 1".into(),
            ));
        }
        if self.n < 8 || self.n > MAX_EXACT_LEN {
            return Err(Error::Precondition(format!(
                "series length must be in 8..={MAX_EXACT_LEN}, got {}",
                self.n
            )));
        }
        self.truth_family.check_admissible(&self.truth_theta)?;
        if self.candidates.is_empty() || self.foci.is_empty() {
            return Err(Error::Precondition(
                "need at least one candidate and one focus".into(),
            ));
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if self.candidates[..i].iter().any(|d| d.label == c.label) {
                return Err(Error::Precondition(format!(
                    "duplicate candidate label {}",
                    c.label
                )));
            }
        }
        let has_np = self.np_index().is_some();
        let has_pm = self.candidates.iter().any(|c| c.family().is_some());
        for c in &self.comparators {
            match c {
                Comparator::AlwaysNp if !has_np => {
                    return Err(Error::Precondition(
                        "always_np needs a nonparametric candidate".into(),
                    ))
                }
                Comparator::Aic | Comparator::Bic if !has_pm => {
                    return Err(Error::Precondition(format!(
                        "{} needs a parametric candidate",
                        c.name()
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn np_index(&self) -> Option<usize> {
        self.candidates
            .iter()
            .position(|c| c.kind == CandidateKind::Nonparametric)
    }

    pub fn quadrature(&self) -> QuadratureRule {
        rule_for_foci(self.n, &self.foci, self.quad_nodes)
    }

    /// μ_true for every focus under the truth.
    pub fn truth_values(&self, q: &QuadratureRule) -> Result<Vec<f64>> {
        self.foci
            .iter()
            .map(|f| f.apply(&pm_components(&self.truth_family, &self.truth_theta, f, q)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseEntry {
    pub focus: String,
    pub candidate: String,
    pub rmse: Option<f64>,
    /// Replications in which the candidate produced an estimate.
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCount {
    pub candidate: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub focus: String,
    pub comparator: Comparator,
    pub counts: Vec<SelectionCount>,
    /// Replications where no candidate could be selected.
    pub unselected: usize,
    /// Root-mse of the estimator chosen in each replication.
    pub achieved_rmse: Option<f64>,
}

impl SelectionEntry {
    pub fn count(&self, candidate: &str) -> usize {
        self.counts
            .iter()
            .find(|c| c.candidate == candidate)
            .map_or(0, |c| c.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub focus: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub toolkit_version: String,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    pub quadrature_nodes: usize,
    pub candidates: Vec<String>,
    pub truth: Vec<TruthEntry>,
    pub rmse: Vec<RmseEntry>,
    pub selection: Vec<SelectionEntry>,
    /// Per candidate, replications in which fitting or scoring failed.
    pub candidate_failures: Vec<SelectionCount>,
    pub aborted_replications: usize,
}

impl McResult {
    pub fn rmse(&self, focus: &str, candidate: &str) -> Option<f64> {
        self.rmse
            .iter()
            .find(|e| e.focus == focus && e.candidate == candidate)
            .and_then(|e| e.rmse)
    }

    pub fn selection(&self, focus: &str, comparator: Comparator) -> Option<&SelectionEntry> {
        self.selection
            .iter()
            .find(|e| e.focus == focus && e.comparator == comparator)
    }

    pub fn foci(&self) -> Vec<&str> {
        self.truth.iter().map(|t| t.focus.as_str()).collect()
    }

    /// Candidate labels ordered by root-mse for one focus, best first.
    pub fn rmse_order(&self, focus: &str) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .rmse
            .iter()
            .filter(|e| e.focus == focus)
            .filter_map(|e| e.rmse.map(|r| (e.candidate.as_str(), r)))
            .collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1));
        v
    }

    /// Root-mse divided by the largest root-mse of the same focus.
    pub fn relative_rmse(&self, focus: &str, candidate: &str) -> Option<f64> {
        let max = self
            .rmse
            .iter()
            .filter(|e| e.focus == focus)
            .filter_map(|e| e.rmse)
            .fold(f64::NAN, f64::max);
        let r = self.rmse(focus, candidate)?;
        (max > 0.0).then(|| r / max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// Long-format table with columns focus, candidate, metric, value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["focus", "candidate", "metric", "value"])?;
        let run = "_run";
        for (k, v) in [
            ("toolkit_version", self.toolkit_version.clone()),
            ("n", self.n.to_string()),
            ("replications", self.replications.to_string()),
            ("seed", self.seed.to_string()),
            ("quadrature_nodes", self.quadrature_nodes.to_string()),
            (
                "aborted_replications",
                self.aborted_replications.to_string(),
            ),
        ] {
            w.write_record([run, run, k, &v])?;
        }
        for t in &self.truth {
            w.write_record([t.focus.as_str(), "_truth", "mu_true", &t.value.to_string()])?;
        }
        for e in &self.rmse {
            if let Some(r) = e.rmse {
                w.write_record([e.focus.as_str(), &e.candidate, "rmse", &r.to_string()])?;
                if let Some(rel) = self.relative_rmse(&e.focus, &e.candidate) {
                    w.write_record([
                        e.focus.as_str(),
                        &e.candidate,
                        "relative_rmse",
                        &rel.to_string(),
                    ])?;
                }
            }
            w.write_record([
                e.focus.as_str(),
                &e.candidate,
                "successes",
                &e.successes.to_string(),
            ])?;
        }
        for s in &self.selection {
            let tag = s.comparator.name();
            for c in &s.counts {
                w.write_record([
                    s.focus.as_str(),
                    &c.candidate,
                    &format!("selected_by_{tag}"),
                    &c.count.to_string(),
                ])?;
            }
            if let Some(r) = s.achieved_rmse {
                w.write_record([
                    s.focus.as_str(),
                    &format!("_{tag}"),
                    "achieved_rmse",
                    &r.to_string(),
                ])?;
            }
        }
        for f in &self.candidate_failures {
            w.write_record([run, &f.candidate, "failures", &f.count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-replication record, aggregated after all replications finish.
struct Replication {
    /// [focus][candidate] squared error
    sq_err: Vec<Vec<Option<f64>>>,
    /// [focus][comparator] selected candidate
    picks: Vec<Vec<Option<usize>>>,
    failed: Vec<bool>,
}

fn run_replication(
    spec: &SimSpec,
    sampler: &Sampler,
    q: &QuadratureRule,
    truth: &[f64],
    index: usize,
) -> Replication {
    let y = sampler.draw(&mut replication_rng(spec.seed, index as u64));
    let n = y.len();
    let es = EmpiricalSpectrum::new(y, q);
    let reference = ReferenceGrid::empirical(&es, q);
    let scorer = Scorer::new(&reference, n, q);
    let need_ic = spec
        .comparators
        .iter()
        .any(|c| matches!(c, Comparator::Aic | Comparator::Bic));

    let nc = spec.candidates.len();
    let mut failed = vec![false; nc];
    let mut fits = Vec::with_capacity(nc);
    let mut ic: Vec<Option<(f64, f64)>> = vec![None; nc];
    for (ci, cand) in spec.candidates.iter().enumerate() {
        let fit = match cand.family() {
            Some(fam) => match fit_whittle_spectrum(&es, fam, q, &spec.optimizer) {
                Ok(fit) => {
                    if need_ic {
                        ic[ci] = fit_gaussian_ml_from(
                            es.series(),
                            fam,
                            q,
                            &spec.optimizer,
                            &[fit.theta().to_vec()],
                        )
                        .ok()
                        .and_then(|ml| aic_bic(&ml, n).ok());
                    }
                    Some(fit)
                }
                Err(_) => {
                    failed[ci] = true;
                    None
                }
            },
            None => None,
        };
        fits.push(fit);
    }

    let mut sq_err = Vec::with_capacity(spec.foci.len());
    let mut picks = Vec::with_capacity(spec.foci.len());
    for (fi, focus) in spec.foci.iter().enumerate() {
        let mut errs = vec![None; nc];
        let mut scores: Vec<(String, Option<usize>, f64)> = Vec::new();
        for (ci, cand) in spec.candidates.iter().enumerate() {
            let (est, term) = match (&cand.kind, &fits[ci]) {
                (CandidateKind::Nonparametric, _) => {
                    (np_focus(&es, focus, q), scorer.np_term(focus, 1.0))
                }
                (CandidateKind::Parametric(_), Some(fit)) => (
                    crate::fic::pm_focus(fit, focus, q),
                    scorer.pm_term(fit, focus, 1.0),
                ),
                (CandidateKind::Parametric(_), None) => continue,
            };
            match est {
                Ok(v) => errs[ci] = Some((v - truth[fi]).powi(2)),
                Err(_) => failed[ci] = true,
            }
            match term {
                Ok(t) if errs[ci].is_some() => {
                    scores.push((cand.label.clone(), cand.n_params(), t.fic))
                }
                Ok(_) => {}
                Err(_) => failed[ci] = true,
            }
        }
        let index_of = |label: &str| spec.candidates.iter().position(|c| c.label == label);
        let ic_pick = |which: usize| -> Option<usize> {
            let rows: Vec<(String, Option<usize>, f64)> = (0..nc)
                .filter(|&ci| errs[ci].is_some())
                .filter_map(|ci| {
                    let (aic, bic) = ic[ci]?;
                    let c = &spec.candidates[ci];
                    Some((
                        c.label.clone(),
                        c.n_params(),
                        if which == 0 { aic } else { bic },
                    ))
                })
                .collect();
            rank(&rows).first().and_then(|l| index_of(l))
        };
        let row: Vec<Option<usize>> = spec
            .comparators
            .iter()
            .map(|c| match c {
                Comparator::Fic => rank(&scores).first().and_then(|l| index_of(l)),
                Comparator::Aic => ic_pick(0),
                Comparator::Bic => ic_pick(1),
                Comparator::AlwaysNp => spec.np_index().filter(|&i| errs[i].is_some()),
            })
            .collect();
        sq_err.push(errs);
        picks.push(row);
    }
    Replication {
        sq_err,
        picks,
        failed,
    }
}

/// Runs the Monte Carlo study described by `spec`.
pub fn run_mc(spec: &SimSpec) -> Result<McResult> {
    spec.validate()?;
    let q = spec.quadrature();
    let truth = spec.truth_values(&q)?;
    let sampler = Sampler::new(&spec.truth_family.spectrum(&spec.truth_theta), spec.n, &q)?;

    let work = || -> Vec<Replication> {
        (0..spec.replications)
            .into_par_iter()
            .map(|r| run_replication(spec, &sampler, &q, &truth, r))
            .collect()
    };
    let reps = if spec.workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?
            .install(work)
    };
    Ok(aggregate(spec, &q, &truth, &reps))
}

fn aggregate(spec: &SimSpec, q: &QuadratureRule, truth: &[f64], reps: &[Replication]) -> McResult {
    let nc = spec.candidates.len();
    let labels: Vec<String> = spec.candidates.iter().map(|c| c.label.clone()).collect();
    let mut rmse = Vec::new();
    let mut selection = Vec::new();
    for (fi, focus) in spec.foci.iter().enumerate() {
        for ci in 0..nc {
            let (sum, count) = reps
                .iter()
                .filter_map(|r| r.sq_err[fi][ci])
                .fold((0.0, 0usize), |(s, c), e| (s + e, c + 1));
            rmse.push(RmseEntry {
                focus: focus.name().into(),
                candidate: labels[ci].clone(),
                rmse: (count > 0).then(|| (sum / count as f64).sqrt()),
                successes: count,
            });
        }
        for (k, comp) in spec.comparators.iter().enumerate() {
            let mut counts = vec![0usize; nc];
            let mut unselected = 0;
            let (mut sum, mut m) = (0.0, 0usize);
            for r in reps {
                match r.picks[fi][k] {
                    Some(ci) => {
                        counts[ci] += 1;
                        sum += r.sq_err[fi][ci].expect("picked candidates have estimates");
                        m += 1;
                    }
                    None => unselected += 1,
                }
            }
            selection.push(SelectionEntry {
                focus: focus.name().into(),
                comparator: *comp,
                counts: labels
                    .iter()
                    .zip(&counts)
                    .map(|(l, c)| SelectionCount {
                        candidate: l.clone(),
                        count: *c,
                    })
                    .collect(),
                unselected,
                achieved_rmse: (m > 0).then(|| (sum / m as f64).sqrt()),
            });
        }
    }
    let candidate_failures = labels
        .iter()
        .enumerate()
        .map(|(ci, l)| SelectionCount {
            candidate: l.clone(),
            count: reps.iter().filter(|r| r.failed[ci]).count(),
        })
        .collect();
    McResult {
        toolkit_version: TOOLKIT_VERSION.into(),
        n: spec.n,
        replications: spec.replications,
        seed: spec.seed,
        quadrature_nodes: q.len(),
        candidates: labels,
        truth: spec
            .foci
            .iter()
            .zip(truth)
            .map(|(f, v)| TruthEntry {
                focus: f.name().into(),
                value: *v,
            })
            .collect(),
        rmse,
        selection,
        candidate_failures,
        aborted_replications: reps.iter().filter(|r| r.failed.iter().all(|f| *f)).count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastFalseRow {
    pub family: String,
    pub theta: Option<Vec<f64>>,
    pub discrepancy: Option<f64>,
    pub converged: bool,
    /// C(0), …, C(K) of the least-false spectrum.
    pub autocovariances: Option<Vec<f64>>,
    pub error: Option<String>,
}

/// Least-false autocovariances of each family against an analytic truth.
pub fn least_false_table(
    truth: &dyn SpectralDensity,
    families: &[ArmaFamily],
    max_lag: usize,
    q: &QuadratureRule,
    opts: &OptimizerOptions,
) -> Result<Vec<LeastFalseRow>> {
    if families.is_empty() {
        return Err(Error::Precondition("no families given".into()));
    }
    Ok(families
        .iter()
        .map(|fam| match least_false(truth, fam, q, opts) {
            Ok(fit) => {
                let theta = fit.theta().to_vec();
                let grid = fam.density_grid(&theta, q);
                LeastFalseRow {
                    family: fam.label(),
                    discrepancy: discrepancy(truth, fam, &theta, q).ok(),
                    converged: fit.converged,
                    autocovariances: Some(autocovariances_from_grid(&grid, max_lag, q)),
                    theta: Some(theta),
                    error: None,
                }
            }
            Err(e) => LeastFalseRow {
                family: fam.label(),
                theta: None,
                discrepancy: None,
                converged: false,
                autocovariances: None,
                error: Some(e.to_string()),
            },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::focus::focus_lag_cov;
    use crate::spectral::default_quadrature;

    #[test]
    fn same_seed_same_series() {
        let f = ArmaFamily::ar(1).spectrum(&[0.5, 1.0]);
        let q = default_quadrature(64);
        let a = sample_gaussian(&f, 64, 7, &q).unwrap();
        let b = sample_gaussian(&f, 64, 7, &q).unwrap();
        let c = sample_gaussian(&f, 64, 8, &q).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn singular_covariance_jittered_indefinite_rejected() {
        let s = Sampler::from_autocovariances(vec![1.0, 1.0, 1.0, 1.0], 4).unwrap();
        assert!(s.jittered());
        let r = Sampler::from_autocovariances(vec![1.0, 1.5, 0.0, 0.0], 4);
        assert!(matches!(r, Err(Error::NumericDegeneracy(_))));
    }

    fn small_spec(b: usize, workers: usize) -> SimSpec {
        SimSpec {
            truth_family: ArmaFamily::ar(1),
            truth_theta: vec![0.5, 1.0],
            n: 40,
            replications: b,
            seed: 11,
            candidates: vec![
                CandidateModel::parametric(ArmaFamily::white_noise()),
                CandidateModel::parametric(ArmaFamily::ar(1)),
                CandidateModel::nonparametric(),
            ],
            foci: vec![focus_lag_cov(0), focus_lag_cov(1)],
            comparators: Comparator::ALL.to_vec(),
            workers,
            quad_nodes: None,
            optimizer: OptimizerOptions::default(),
        }
    }

    #[test]
    fn single_replication_rmse_is_absolute_error() {
        let spec = small_spec(1, 1);
        let res = run_mc(&spec).unwrap();
        let q = spec.quadrature();
        let y = Sampler::new(&ArmaFamily::ar(1).spectrum(&[0.5, 1.0]), 40, &q)
            .unwrap()
            .draw(&mut replication_rng(11, 0));
        let es = EmpiricalSpectrum::new(y, &q);
        let np = np_focus(&es, &focus_lag_cov(1), &q).unwrap();
        let truth = res.truth[1].value;
        assert!((truth - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(res.rmse("lag_cov(1)", "NP").unwrap(), (np - truth).abs());
    }

    #[test]
    fn counts_sum_to_b_and_always_np_matches() {
        let res = run_mc(&small_spec(6, 1)).unwrap();
        for s in &res.selection {
            let total: usize = s.counts.iter().map(|c| c.count).sum::<usize>() + s.unselected;
            assert_eq!(total, 6);
        }
        for f in res.foci() {
            let np = res.rmse(f, "NP").unwrap();
            let always = res
                .selection(f, Comparator::AlwaysNp)
                .unwrap()
                .achieved_rmse
                .unwrap();
            assert_eq!(np, always);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let a = run_mc(&small_spec(5, 1)).unwrap();
        let b = run_mc(&small_spec(5, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn least_false_white_noise_matches_variance() {
        let truth = ArmaFamily::ar(1).spectrum(&[0.6, 1.0]);
        let q = default_quadrature(200);
        let rows = least_false_table(
            &truth,
            &[ArmaFamily::white_noise()],
            3,
            &q,
            &OptimizerOptions::default(),
        )
        .unwrap();
        let c = rows[0].autocovariances.as_ref().unwrap();
        assert!((c[0] - 1.0 / 0.64).abs() < 1e-6);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-10));
    }
}
