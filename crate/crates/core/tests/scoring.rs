use approx::assert_abs_diff_eq;
use gridgan::dataset::{generate_target, TargetSpec};
use gridgan::scoring::{frechet_between, frechet_distance, mode_coverage, summarize, GaussianSummary};
use gridgan::{seed, Matrix};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn normal_matrix(n: usize, d: usize, seed_value: u64) -> Matrix<f64> {
    let mut rng = seed::rng(seed_value);
    let data = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    Matrix::from_vec(n, d, data).unwrap()
}

fn spd2() -> impl Strategy<Value = Vec<f64>> {
    (0.1f64..3.0, 0.1f64..3.0, -1.0f64..1.0).prop_map(|(a, b, r)| {
        let c = r * (a * b).sqrt() * 0.95;
        vec![a, c, c, b]
    })
}

#[test]
fn duplicating_every_sample_shrinks_covariance_only() {
    let x = normal_matrix(40, 3, 5);
    let mut doubled = Vec::new();
    for row in x.iter_rows() {
        doubled.extend_from_slice(row);
        doubled.extend_from_slice(row);
    }
    let y = Matrix::from_vec(80, 3, doubled).unwrap();
    let sx = summarize(&x).unwrap();
    let n = 40.0;
    let c: f64 = 2.0 * (n - 1.0) / (2.0 * n - 1.0);
    let tr: f64 = (0..3).map(|i| sx.covariance[i * 3 + i]).sum();
    let expected = (1.0 - c.sqrt()).powi(2) * tr;
    let got = frechet_between(&x, &y).unwrap().value;
    assert_abs_diff_eq!(got, expected, epsilon = 1e-10);
}

#[test]
fn standard_normal_samples_are_close() {
    let a = normal_matrix(100_000, 2, 11);
    let b = normal_matrix(100_000, 2, 12);
    let s = summarize(&a).unwrap();
    for (i, m) in s.mean.iter().enumerate() {
        assert!(m.abs() < 0.02, "mean[{i}] = {m}");
    }
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((s.covariance[i * 2 + j] - want).abs() < 0.03);
        }
    }
    assert!(frechet_between(&a, &b).unwrap().value < 0.02);
}

#[test]
fn self_distance_is_zero() {
    let a = normal_matrix(500, 4, 3);
    assert_abs_diff_eq!(frechet_between(&a, &a).unwrap().value, 0.0, epsilon = 1e-9);
}

#[test]
fn singular_covariances_still_score() {
    // all samples on a line
    let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let a = Matrix::from_rows(&rows).unwrap();
    let v = frechet_between(&a, &a).unwrap().value;
    assert!(v.is_finite() && v.abs() < 1e-6);
}

#[test]
fn mismatched_widths_are_rejected() {
    let a = normal_matrix(10, 2, 1);
    let b = normal_matrix(10, 3, 2);
    assert!(frechet_between(&a, &b).unwrap_err().is_config());
    assert!(summarize(&normal_matrix(1, 2, 1)).is_err());
}

#[test]
fn ring_samples_cover_every_mode() {
    let spec = TargetSpec::ring(8, 2.0, 0.05, 8000);
    let data: Matrix<f64> = generate_target(&spec, 9).unwrap();
    let cov = mode_coverage(&data, &spec, 3.0).unwrap();
    assert_eq!(cov.modes_hit, 8);
    assert!(cov.high_quality_fraction >= 0.98, "{}", cov.high_quality_fraction);
}

#[test]
fn collapsed_samples_hit_one_mode() {
    let spec = TargetSpec::ring(8, 2.0, 0.05, 1);
    let center = spec.mode_centers()[3].clone();
    let data = Matrix::from_rows(&vec![center; 200]).unwrap();
    assert_eq!(mode_coverage(&data, &spec, 3.0).unwrap().modes_hit, 1);
}

fn summary(mean: Vec<f64>, covariance: Vec<f64>) -> GaussianSummary<f64> {
    GaussianSummary { mean, covariance, count: 100 }
}

proptest! {
    #[test]
    fn distance_is_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = normal_matrix(30, 3, s1);
        let b = normal_matrix(45, 3, s2);
        let ab = frechet_between(&a, &b).unwrap().value;
        let ba = frechet_between(&b, &a).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-9, "{ab} vs {ba}");
    }

    #[test]
    fn shifting_both_sets_changes_nothing(s1 in any::<u64>(), s2 in any::<u64>(), v in prop::collection::vec(-5.0f64..5.0, 3)) {
        let a = normal_matrix(30, 3, s1);
        let b = normal_matrix(30, 3, s2);
        let shift = |m: &Matrix<f64>| {
            let rows: Vec<Vec<f64>> = m.iter_rows().map(|r| r.iter().zip(&v).map(|(x, s)| x + s).collect()).collect();
            Matrix::from_rows(&rows).unwrap()
        };
        let base = frechet_between(&a, &b).unwrap().value;
        let moved = frechet_between(&shift(&a), &shift(&b)).unwrap().value;
        prop_assert!((base - moved).abs() < 1e-8);
    }

    #[test]
    fn shifting_one_set_adds_squared_norm(s in any::<u64>(), v in prop::collection::vec(-5.0f64..5.0, 3)) {
        let a = normal_matrix(30, 3, s);
        let rows: Vec<Vec<f64>> = a.iter_rows().map(|r| r.iter().zip(&v).map(|(x, s)| x + s).collect()).collect();
        let b = Matrix::from_rows(&rows).unwrap();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        let got = frechet_between(&a, &b).unwrap().value;
        prop_assert!((got - norm2).abs() < 1e-8 * (1.0 + norm2));
    }

    #[test]
    fn two_dimensional_matches_closed_form(sa in spd2(), sb in spd2(), ma in prop::collection::vec(-2.0f64..2.0, 2), mb in prop::collection::vec(-2.0f64..2.0, 2)) {
        // For 2x2 M with non-negative eigenvalues, Tr(sqrt M) = sqrt(Tr M + 2 sqrt(det M)).
        let m = [
            sa[0] * sb[0] + sa[1] * sb[2],
            sa[0] * sb[1] + sa[1] * sb[3],
            sa[2] * sb[0] + sa[3] * sb[2],
            sa[2] * sb[1] + sa[3] * sb[3],
        ];
        let det = m[0] * m[3] - m[1] * m[2];
        let cross = (m[0] + m[3] + 2.0 * det.max(0.0).sqrt()).sqrt();
        let mean: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y).powi(2)).sum();
        let want = mean + sa[0] + sa[3] + sb[0] + sb[3] - 2.0 * cross;
        let got = frechet_distance(&summary(ma, sa), &summary(mb, sb)).unwrap().value;
        prop_assert!((got - want.max(0.0)).abs() < 1e-9, "{got} vs {want}");
    }
}
