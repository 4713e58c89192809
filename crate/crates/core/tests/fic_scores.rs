mod common;

use proptest::prelude::*;
use spectral_fic::estimation::{fit_at, OptimizerOptions, ReferenceGrid};
use spectral_fic::fic::{
    afic_scores, fic_scores, variances, AficWeights, CandidateModel, FicReport, NP_LABEL,
};
use spectral_fic::focus::{focus_lag_corr, focus_lag_cov, rule_for_foci, FocusFunctional};
use spectral_fic::periodogram::TimeSeries;
use spectral_fic::spectral::{default_quadrature, ArmaFamily};

use common::{ar1_recursion, rng};

fn candidates() -> Vec<CandidateModel> {
    vec![
        CandidateModel::parametric(ArmaFamily::white_noise()),
        CandidateModel::parametric(ArmaFamily::ar(1)),
        CandidateModel::parametric(ArmaFamily::ma(1)),
        CandidateModel::nonparametric(),
    ]
}

fn report(y: &TimeSeries, focus: &FocusFunctional) -> FicReport {
    let q = rule_for_foci(y.len(), [focus], None);
    fic_scores(y, &candidates(), focus, &q, &OptimizerOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scores_nonnegative_and_truncation_holds(seed in 0u64..10_000, rho in -0.7f64..0.7, k in 0usize..4) {
        let y = ar1_recursion(&mut rng(seed), rho, 1.0, 120);
        let r = report(&y, &focus_lag_cov(k));
        for row in &r.rows {
            let fic = row.fic.unwrap();
            prop_assert!(fic >= 0.0);
            for t in &row.terms {
                if let (Some(b), Some(kappa)) = (t.b_hat, t.kappa) {
                    let expect = (b * b - kappa / 120.0).max(0.0);
                    prop_assert!((t.bsq_trunc - expect).abs() <= 1e-14 * expect.max(1.0));
                }
            }
        }
        prop_assert_eq!(r.ranking.len(), r.rows.len());
    }
}

#[test]
fn covariance_equals_parametric_variance_under_model() {
    let q = default_quadrature(200);
    for (fam, theta) in [
        (ArmaFamily::white_noise(), vec![0.9]),
        (ArmaFamily::ar(1), vec![0.6, 1.0]),
        (ArmaFamily::ma(1), vec![0.4, 1.0]),
    ] {
        let reference = ReferenceGrid::analytic(&fam.spectrum(&theta), &q);
        let fit = fit_at(&reference, 200, &fam, &theta, &q).unwrap();
        for focus in [
            focus_lag_cov(0),
            focus_lag_cov(1),
            focus_lag_corr(1).unwrap(),
        ] {
            let v = variances(&reference, &fit, &focus, &q).unwrap();
            assert!(
                (v.v_c - v.v_pm).abs() < 1e-8,
                "{} {}",
                fam.label(),
                focus.name()
            );
            assert!(v.v_np >= v.v_pm - 1e-10);
        }
    }
}

#[test]
fn afic_point_mass_is_fic() {
    let y = ar1_recursion(&mut rng(1), 0.4, 1.0, 150);
    let focus = focus_lag_cov(1);
    let q = rule_for_foci(150, [&focus], None);
    let opts = OptimizerOptions::default();
    let a = fic_scores(&y, &candidates(), &focus, &q, &opts).unwrap();
    let b = afic_scores(
        &y,
        &candidates(),
        &AficWeights::point(focus.clone()),
        &q,
        &opts,
    )
    .unwrap();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        assert_eq!(ra.fic.unwrap().to_bits(), rb.fic.unwrap().to_bits());
    }
    assert_eq!(a.ranking, b.ranking);
}

#[test]
fn equal_weights_average_fic() {
    let y = ar1_recursion(&mut rng(2), 0.5, 1.0, 150);
    let foci = [focus_lag_cov(0), focus_lag_cov(1), focus_lag_cov(2)];
    let q = rule_for_foci(150, &foci, None);
    let opts = OptimizerOptions::default();
    let weights = AficWeights::new(foci.iter().map(|f| (f.clone(), 2.0)).collect()).unwrap();
    let afic = afic_scores(&y, &candidates(), &weights, &q, &opts).unwrap();
    let singles: Vec<FicReport> = foci
        .iter()
        .map(|f| fic_scores(&y, &candidates(), f, &q, &opts).unwrap())
        .collect();
    for row in &afic.rows {
        let mean = singles
            .iter()
            .map(|r| r.row(&row.label).unwrap().fic.unwrap())
            .sum::<f64>()
            / 3.0;
        let got = row.fic.unwrap();
        assert!(
            (got - mean).abs() <= 1e-12 * mean.max(1e-12),
            "{}: {got} vs {mean}",
            row.label
        );
    }
}

#[test]
fn ranking_invariant_to_candidate_order() {
    let y = ar1_recursion(&mut rng(3), 0.3, 1.0, 100);
    let focus = focus_lag_corr(1).unwrap();
    let q = rule_for_foci(100, [&focus], None);
    let opts = OptimizerOptions::default();
    let fwd = fic_scores(&y, &candidates(), &focus, &q, &opts).unwrap();
    let mut rev_c = candidates();
    rev_c.reverse();
    let rev = fic_scores(&y, &rev_c, &focus, &q, &opts).unwrap();
    assert_eq!(fwd.ranking, rev.ranking);
    for row in &fwd.rows {
        assert_eq!(row.fic, rev.row(&row.label).unwrap().fic);
    }
}

#[test]
fn nonparametric_only_report() {
    let y = ar1_recursion(&mut rng(4), 0.3, 1.0, 80);
    let focus = focus_lag_cov(1);
    let q = rule_for_foci(80, [&focus], None);
    let r = fic_scores(
        &y,
        &[CandidateModel::nonparametric()],
        &focus,
        &q,
        &OptimizerOptions::default(),
    )
    .unwrap();
    assert_eq!(r.ranking, vec![NP_LABEL.to_string()]);
    let term = &r.rows[0].terms[0];
    assert_eq!(r.rows[0].fic, Some(term.v_np / 80.0));
    assert!((term.mu_hat - common::lag_sum(y.values(), 1)).abs() < 1e-10);
}

#[test]
fn constant_series_errors_rows() {
    let y = TimeSeries::new(vec![2.0; 64]).unwrap();
    let r = report(&y, &focus_lag_cov(1));
    assert!(r.has_errors());
    let np = r.row(NP_LABEL).unwrap();
    assert!(np.error.as_deref().unwrap().contains("degenerate"));
    assert!(r.ranking.is_empty());
}

#[test]
fn report_serializes_with_stable_fields() {
    let y = ar1_recursion(&mut rng(6), 0.3, 1.0, 60);
    let r = report(&y, &focus_lag_cov(0));
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in [
        "toolkit_version",
        "criterion",
        "reference",
        "foci",
        "n",
        "quadrature_nodes",
        "rows",
        "ranking",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("focus,candidate,metric,value"));
    let back: FicReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}
