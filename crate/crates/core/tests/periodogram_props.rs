mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use spectral_fic::focus::FocusWeight;
use spectral_fic::periodogram::{
    integrate_distribution, np_focus_linear, periodogram_at, sample_autocovariance,
    EmpiricalSpectrum, TimeSeries,
};
use spectral_fic::spectral::{default_quadrature, toeplitz_weight_matrix};

use common::lag_sum;

fn series(max_len: usize) -> impl Strategy<Value = TimeSeries> {
    prop::collection::vec(-10.0f64..10.0, 2..max_len).prop_map(|v| TimeSeries::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(y in series(120)) {
        let q = default_quadrature(y.len());
        let spec = EmpiricalSpectrum::new(y.clone(), &q);
        let total = q.sum_full(spec.grid());
        let c0 = lag_sum(y.values(), 0);
        prop_assert!((total - c0).abs() <= 1e-8 * c0.max(1e-12));
    }

    #[test]
    fn cosine_weight_gives_lag_sums(y in series(60), k in 0usize..6) {
        let q = default_quadrature(y.len());
        let spec = EmpiricalSpectrum::new(y.clone(), &q);
        let est = np_focus_linear(&spec, &FocusWeight::cosine(k), &q);
        let direct = lag_sum(y.values(), k);
        let scale = lag_sum(y.values(), 0);
        prop_assert!((est - direct).abs() <= 1e-8 * scale.max(1e-12), "{est} vs {direct}");
        prop_assert!((sample_autocovariance(&y, k) - direct).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn quadratic_form_identity(y in series(40), k in 0usize..6) {
        let n = y.len();
        let q = default_quadrature(n);
        let spec = EmpiricalSpectrum::new(y.clone(), &q);
        let h = FocusWeight::cosine(k);
        let t = toeplitz_weight_matrix(&h, n, &q);
        let v = nalgebra::DVector::from_column_slice(y.values());
        let qf = (v.transpose() * &t * &v)[(0, 0)] / n as f64;
        let est = np_focus_linear(&spec, &h, &q);
        prop_assert!((qf - est).abs() <= 1e-8 * lag_sum(y.values(), 0).max(1e-12));
    }

    #[test]
    fn distribution_monotone_and_bounded(y in series(80), a in -PI..PI, b in -PI..PI) {
        let q = default_quadrature(y.len());
        let spec = EmpiricalSpectrum::new(y.clone(), &q);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let glo = integrate_distribution(&spec, lo, &q).unwrap();
        let ghi = integrate_distribution(&spec, hi, &q).unwrap();
        let total = integrate_distribution(&spec, PI, &q).unwrap();
        let tol = 1e-10 * total.max(1e-12);
        prop_assert!(glo <= ghi + tol);
        prop_assert!(glo >= -tol && ghi <= total + tol);
    }
}

#[test]
fn periodogram_matches_fft() {
    let mut rng = common::rng(11);
    for n in [16, 37, 100] {
        let y = common::normal_series(&mut rng, n);
        let mut buf: Vec<Complex<f64>> = y.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        for (j, z) in buf.iter().enumerate() {
            let w = 2.0 * PI * j as f64 / n as f64;
            let w = if w > PI { w - 2.0 * PI } else { w };
            let oracle = z.norm_sqr() / (2.0 * PI * n as f64);
            let got = periodogram_at(&y, w);
            assert!(
                (got - oracle).abs() <= 1e-10 * oracle.max(1.0),
                "n={n} j={j}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn distribution_is_odd_around_zero() {
    let mut rng = common::rng(3);
    let y = common::normal_series(&mut rng, 50);
    let q = default_quadrature(50);
    let spec = EmpiricalSpectrum::new(y, &q);
    let total = integrate_distribution(&spec, PI, &q).unwrap();
    let half = integrate_distribution(&spec, 0.0, &q).unwrap();
    assert!((half - total / 2.0).abs() < 1e-12 * total);
    let a = integrate_distribution(&spec, 1.1, &q).unwrap();
    let b = integrate_distribution(&spec, -1.1, &q).unwrap();
    assert!((a + b - total).abs() < 1e-10 * total);
    assert!(integrate_distribution(&spec, 4.0, &q).is_err());
}
