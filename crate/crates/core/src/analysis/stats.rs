//! Comparison statistics over repeated runs.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest combined sample size for which the rank-sum p-value is computed
/// from the exact permutation distribution.
pub const EXACT_RANK_SUM_LIMIT: usize = 50;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Relative improvement of `ensemble` over `base`, in percent:
/// `(mean(base) - mean(ensemble)) / mean(base) * 100`.
pub fn improvement_delta(base: &[f64], ensemble: &[f64]) -> Result<f64> {
    if base.is_empty() || ensemble.is_empty() {
        return Err(Error::Config("improvement needs two non-empty score lists".into()));
    }
    let mb = mean(base);
    if mb <= 0.0 {
        return Err(Error::Config(format!("improvement undefined for base mean {mb}")));
    }
    Ok((mb - mean(ensemble)) / mb * 100.0)
}

/// Mean, relative standard deviation and minimum of a set of scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample (n - 1) standard deviation as a percentage of the mean.
    pub std_percent: f64,
    pub min: f64,
}

impl RunSummary {
    pub fn std(&self) -> f64 {
        self.std_percent / 100.0 * self.mean
    }
}

pub fn summarize_runs(values: &[f64]) -> Result<RunSummary> {
    if values.is_empty() {
        return Err(Error::Config("no runs to summarize".into()));
    }
    let n = values.len();
    let m = mean(values);
    let std = if n > 1 {
        (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RunSummary {
        n,
        mean: m,
        std_percent: if m != 0.0 { std / m * 100.0 } else { 0.0 },
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSumMethod {
    /// Exact permutation distribution of the (mid-)rank sum.
    Exact,
    /// Normal approximation with tie and continuity correction.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Mann-Whitney U of the first sample: rank sum minus `n_a (n_a + 1) / 2`.
    pub u: f64,
    /// Two-sided p-value in `(0, 1]`.
    pub p_value: f64,
    pub method: RankSumMethod,
}

/// Doubled mid-ranks (integers) of the pooled sample, plus tie-group sizes.
fn doubled_ranks(a: &[f64], b: &[f64]) -> (Vec<u64>, Vec<u64>, Vec<usize>) {
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ra = Vec::with_capacity(a.len());
    let mut rb = Vec::with_capacity(b.len());
    let mut ties = Vec::new();
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // positions i+1 ..= j+1 share the mid-rank (i + j + 2) / 2
        let r2 = (i + j + 2) as u64;
        for item in &pooled[i..=j] {
            if item.1 {
                ra.push(r2);
            } else {
                rb.push(r2);
            }
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ra, rb, ties)
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney U) test.
///
/// Small samples (combined size up to [`EXACT_RANK_SUM_LIMIT`]) use the exact
/// permutation distribution of the mid-rank sum; larger ones the normal
/// approximation.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    if a.len() + b.len() <= EXACT_RANK_SUM_LIMIT {
        wilcoxon_rank_sum_exact(a, b)
    } else {
        wilcoxon_rank_sum_normal(a, b)
    }
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::Config("rank-sum test needs at least three values per sample".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Config("rank-sum test over non-finite values".into()));
    }
    Ok(())
}

pub fn wilcoxon_rank_sum_exact(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    check_samples(a, b)?;
    let (ra, rb, _) = doubled_ranks(a, b);
    let na = a.len();
    let n = a.len() + b.len();
    let observed: u64 = ra.iter().sum();
    let center = (na * (n + 1)) as i64;
    let deviation = (observed as i64 - center).abs();

    // ways[k][s]: subsets of size k with doubled rank sum s
    let max_sum = 2 * n * n;
    let mut ways = vec![vec![0u128; max_sum + 1]; na + 1];
    ways[0][0] = 1;
    for &r in ra.iter().chain(&rb) {
        let r = r as usize;
        for k in (1..=na).rev() {
            let (lo, hi) = ways.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (r..=max_sum).rev() {
                if prev[s - r] != 0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let total: u128 = ways[na].iter().sum();
    let extreme: u128 = ways[na]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - center).abs() >= deviation)
        .map(|(_, c)| *c)
        .sum();
    Ok(RankSumTest {
        u: observed as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0,
        p_value: extreme as f64 / total as f64,
        method: RankSumMethod::Exact,
    })
}

pub fn wilcoxon_rank_sum_normal(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    check_samples(a, b)?;
    let (ra, _, ties) = doubled_ranks(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let u = ra.iter().sum::<u64>() as f64 / 2.0 - na * (na + 1.0) / 2.0;
    let mu = na * nb / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(RankSumTest {
            u,
            p_value: 1.0,
            method: RankSumMethod::Normal,
        });
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * normal.sf(z)).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(RankSumTest {
        u,
        p_value: p,
        method: RankSumMethod::Normal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_of_identical_lists_is_zero() {
        assert_eq!(improvement_delta(&[3.0, 5.0], &[5.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn delta_requires_positive_base() {
        assert!(improvement_delta(&[0.0], &[1.0]).is_err());
        assert!(improvement_delta(&[], &[1.0]).is_err());
    }

    #[test]
    fn delta_reproduces_published_means() {
        assert!((improvement_delta(&[574.6], &[44.2]).unwrap() - 92.3).abs() < 0.15);
        let d = improvement_delta(&[71.2], &[35.4]).unwrap();
        assert!((d - 50.28).abs() < 0.01, "{d}");
    }

    #[test]
    fn summary_of_two_values() {
        let s = summarize_runs(&[10.0, 30.0]).unwrap();
        assert_eq!(s.mean, 20.0);
        assert_relative_eq!(s.std_percent, 200f64.sqrt() / 20.0 * 100.0, epsilon = 1e-12);
        assert!((s.std_percent - 70.71).abs() < 0.01);
        assert_eq!(s.min, 10.0);
    }

    #[test]
    fn summary_of_one_value_has_no_spread() {
        let s = summarize_runs(&[7.5]).unwrap();
        assert_eq!((s.mean, s.std_percent, s.min), (7.5, 0.0, 7.5));
    }

    #[test]
    fn relative_std_decodes_to_absolute() {
        let s = RunSummary {
            n: 30,
            mean: 574.6,
            std_percent: 51.3,
            min: 35.1,
        };
        assert!((s.std() - 294.8).abs() < 0.05);
    }

    #[test]
    fn same_multiset_is_not_significant() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let t = wilcoxon_rank_sum(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(t.p_value, 1.0);
        let t = wilcoxon_rank_sum_normal(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn all_values_tied() {
        let t = wilcoxon_rank_sum(&[2.0; 4], &[2.0; 5]).unwrap();
        assert_eq!(t.p_value, 1.0);
        let t = wilcoxon_rank_sum_normal(&[2.0; 4], &[2.0; 5]).unwrap();
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn separated_samples_are_significant() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let b: Vec<f64> = (101..=110).map(f64::from).collect();
        let t = wilcoxon_rank_sum(&a, &b).unwrap();
        assert_eq!(t.u, 0.0);
        assert!(t.p_value < 0.001);
        // 2 / C(20, 10)
        assert_relative_eq!(t.p_value, 2.0 / 184_756.0, max_relative = 1e-12);
        assert!(wilcoxon_rank_sum_normal(&a, &b).unwrap().p_value < 0.001);
    }

    #[test]
    fn normal_approximation_agrees_for_larger_samples() {
        let a: Vec<f64> = (0..20).map(|i| i as f64 * 1.3).collect();
        let b: Vec<f64> = (0..20).map(|i| i as f64 * 1.1 + 4.0).collect();
        let e = wilcoxon_rank_sum_exact(&a, &b).unwrap();
        let n = wilcoxon_rank_sum_normal(&a, &b).unwrap();
        assert_eq!(e.u, n.u);
        assert!((e.p_value - n.p_value).abs() < 0.02, "{} vs {}", e.p_value, n.p_value);
    }

    #[test]
    fn too_few_values_rejected() {
        assert!(wilcoxon_rank_sum(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
