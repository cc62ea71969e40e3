//! Fréchet distance between Gaussian moment summaries of sample sets, and
//! mode-coverage diagnostics for mixture-of-Gaussian targets.

use crate::dataset::TargetSpec;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Eigenvalue floor below which a covariance counts as singular.
pub const SINGULAR_EIGEN: f64 = 1e-10;
/// Ridge added to both covariances when either is singular.
pub const COVARIANCE_RIDGE: f64 = 1e-6;
/// Negative totals down to this magnitude are rounding noise and read as zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary<T> {
    pub mean: Vec<T>,
    /// `d x d`, row-major, symmetric.
    pub covariance: Vec<T>,
    pub count: usize,
}

impl<T: Scalar> GaussianSummary<T> {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetScore<T> {
    pub value: T,
    pub n_real: usize,
    pub n_fake: usize,
}

/// Sample mean and unbiased covariance.
pub fn summarize<T: Scalar>(samples: &Matrix<T>) -> Result<GaussianSummary<T>> {
    let n = samples.rows();
    let d = samples.cols();
    if n < 2 {
        return Err(Error::Dimension(format!("need at least two samples to summarize, got {n}")));
    }
    let nt = T::of_usize(n);
    let mut mean = vec![T::zero(); d];
    for row in samples.iter_rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nt);
    let mut cov = vec![T::zero(); d * d];
    let mut centered = vec![T::zero(); d];
    for row in samples.iter_rows() {
        for j in 0..d {
            centered[j] = row[j] - mean[j];
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += centered[i] * centered[j];
            }
        }
    }
    let denom = T::of_usize(n - 1);
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Ok(GaussianSummary {
        mean,
        covariance: cov,
        count: n,
    })
}

fn min_eigenvalue<T: Scalar>(c: &[T], d: usize) -> T {
    let (vals, _) = linalg::symmetric_eigen(c, d);
    vals.into_iter().fold(T::infinity(), T::min)
}

/// `|mu_a - mu_b|^2 + Tr(S_a) + Tr(S_b) - 2 Tr((S_a S_b)^(1/2))`.
///
/// The trace of the cross term is computed from the eigenvalues of the
/// symmetric matrix `S_a^(1/2) S_b S_a^(1/2)`.
pub fn frechet_distance<T: Scalar>(a: &GaussianSummary<T>, b: &GaussianSummary<T>) -> Result<FrechetScore<T>> {
    let d = a.dimension();
    if b.dimension() != d || a.covariance.len() != d * d || b.covariance.len() != d * d {
        return Err(Error::Dimension(format!(
            "cannot compare summaries of width {} and {}",
            d,
            b.dimension()
        )));
    }
    let mut sa = a.covariance.clone();
    let mut sb = b.covariance.clone();
    linalg::symmetrize(&mut sa, d);
    linalg::symmetrize(&mut sb, d);
    let floor = T::of(SINGULAR_EIGEN);
    if min_eigenvalue(&sa, d) < floor || min_eigenvalue(&sb, d) < floor {
        let ridge = T::of(COVARIANCE_RIDGE);
        for i in 0..d {
            sa[i * d + i] += ridge;
            sb[i * d + i] += ridge;
        }
    }

    let mean_term: T = a
        .mean
        .iter()
        .zip(&b.mean)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    let root_a = linalg::psd_sqrt(&sa, d);
    let mut inner = linalg::matmul(&linalg::matmul(&root_a, &sb, d), &root_a, d);
    linalg::symmetrize(&mut inner, d);
    let (vals, _) = linalg::symmetric_eigen(&inner, d);
    let cross: T = vals.iter().map(|&l| l.max(T::zero()).sqrt()).sum();
    let tr_a = linalg::trace(&sa, d);
    let tr_b = linalg::trace(&sb, d);
    let total = mean_term + tr_a + tr_b - T::of(2.0) * cross;

    // Near-zero eigenvalues of `inner` carry absolute noise of order eps * |inner|,
    // which the square root lifts to sqrt(eps) * |S| per dimension.
    let noise = T::of_usize(d) * T::epsilon().sqrt() * (tr_a + tr_b) + T::of(64.0) * T::epsilon() * mean_term;
    let tolerance = T::of(NEGATIVE_TOLERANCE).max(noise);
    let value = if total >= T::zero() {
        total
    } else if total >= -tolerance {
        T::zero()
    } else {
        return Err(Error::Numerical(format!(
            "negative Fréchet distance {total}: a = {a:?}, b = {b:?}"
        )));
    };
    if !value.is_finite() {
        return Err(Error::NonFinite("Fréchet distance"));
    }
    Ok(FrechetScore {
        value,
        n_real: a.count,
        n_fake: b.count,
    })
}

/// Summarizes both sample sets and compares them; `real` first.
pub fn frechet_between<T: Scalar>(real: &Matrix<T>, fake: &Matrix<T>) -> Result<FrechetScore<T>> {
    frechet_distance(&summarize(real)?, &summarize(fake)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoverage {
    pub modes_hit: usize,
    pub high_quality_fraction: f64,
}

/// Counts target modes that received enough nearby samples.
///
/// A sample is high quality when it lies within `threshold * mode_std` of its
/// nearest mode center; a mode is hit when it collects at least
/// `max(1, n / (10 * modes))` high-quality samples.
pub fn mode_coverage<T: Scalar>(samples: &Matrix<T>, target: &TargetSpec, threshold: f64) -> Result<ModeCoverage> {
    if samples.cols() != target.dimension {
        return Err(Error::Dimension(format!(
            "samples have width {}, target {}",
            samples.cols(),
            target.dimension
        )));
    }
    let centers = target.mode_centers();
    let limit = threshold * target.mode_std;
    let mut per_mode = vec![0usize; centers.len()];
    let mut good = 0usize;
    for row in samples.iter_rows() {
        let (best, dist2) = centers
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let d2: f64 = c.iter().zip(row).map(|(&cj, &x)| (x.as_f64() - cj).powi(2)).sum();
                (k, d2)
            })
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if dist2.sqrt() <= limit {
            good += 1;
            per_mode[best] += 1;
        }
    }
    let n = samples.rows();
    let need = (n / (10 * centers.len())).max(1);
    Ok(ModeCoverage {
        modes_hit: per_mode.iter().filter(|&&c| c >= need).count(),
        high_quality_fraction: if n == 0 { 0.0 } else { good as f64 / n as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gauss(mean: Vec<f64>, covariance: Vec<f64>) -> GaussianSummary<f64> {
        GaussianSummary {
            mean,
            covariance,
            count: 100,
        }
    }

    #[test]
    fn two_point_summary() {
        let m = Matrix::from_vec(2, 2, vec![0.0, 0.0, 2.0, 0.0]).unwrap();
        let s = summarize(&m).unwrap();
        assert_eq!(s.mean, vec![1.0, 0.0]);
        assert_eq!(s.covariance, vec![2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn summarize_needs_two_rows() {
        assert!(summarize(&Matrix::<f64>::zeros(1, 2)).is_err());
    }

    #[test]
    fn one_dimensional_closed_forms() {
        let n01 = gauss(vec![0.0], vec![1.0]);
        assert_eq!(frechet_distance(&n01, &n01).unwrap().value, 0.0);
        let n11 = gauss(vec![1.0], vec![1.0]);
        assert_relative_eq!(frechet_distance(&n01, &n11).unwrap().value, 1.0, epsilon = 1e-12);
        let n04 = gauss(vec![0.0], vec![4.0]);
        assert_relative_eq!(frechet_distance(&n01, &n04).unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_covariances_follow_root_differences() {
        let a = gauss(vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.25]);
        let b = gauss(vec![0.0, 0.0, 0.0], vec![9.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.25]);
        let expected: f64 = [(1.0f64, 9.0f64), (4.0, 1.0), (0.25, 0.25)]
            .iter()
            .map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2))
            .sum();
        assert_relative_eq!(frechet_distance(&a, &b).unwrap().value, expected, epsilon = 1e-12);
    }

    #[test]
    fn collapsed_generators_are_regularized() {
        let pt = gauss(vec![1.0, 1.0], vec![0.0; 4]);
        let s = frechet_distance(&pt, &pt).unwrap();
        assert!(s.value.abs() < 1e-12);
        let spread = gauss(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]);
        let v = frechet_distance(&pt, &spread).unwrap().value;
        assert!((v - 4.0).abs() < 1e-2, "{v}");
    }

    #[test]
    fn width_mismatch_rejected() {
        let a = gauss(vec![0.0], vec![1.0]);
        let b = gauss(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]);
        assert!(frechet_distance(&a, &b).is_err());
    }

    #[test]
    fn single_precision_scores() {
        let a = GaussianSummary::<f32> {
            mean: vec![0.0],
            covariance: vec![1.0],
            count: 2,
        };
        let b = GaussianSummary::<f32> {
            mean: vec![0.0],
            covariance: vec![4.0],
            count: 2,
        };
        assert!((frechet_distance(&a, &b).unwrap().value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coverage_of_exact_centers_and_collapse() {
        let target = TargetSpec::ring(8, 2.0, 0.05, 10);
        let centers = target.mode_centers();
        let m = Matrix::from_rows(&centers).unwrap();
        let c = mode_coverage(&m, &target, 3.0).unwrap();
        assert_eq!(c.modes_hit, 8);
        assert_eq!(c.high_quality_fraction, 1.0);

        let collapsed = Matrix::from_rows(&vec![centers[3].clone(); 40]).unwrap();
        let c = mode_coverage(&collapsed, &target, 3.0).unwrap();
        assert_eq!(c.modes_hit, 1);
    }
}
