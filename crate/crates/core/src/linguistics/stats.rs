//! Wilcoxon rank-sum (Mann-Whitney U) test and Bonferroni correction.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest smaller-sample size for which the p-value is computed exactly.
pub const EXACT_MAX_SMALL: usize = 8;
/// Pooled-size cap for the exact path; the subset-sum table grows as N².
pub const EXACT_MAX_TOTAL: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    Normal,
    /// Every pooled value is identical; no evidence either way.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumResult {
    /// U statistic of the first sample (count of pairs where a > b, ties 1/2).
    pub u_a: f64,
    pub u_b: f64,
    /// Continuity-corrected normal score; positive when `a` tends larger.
    pub z: f64,
    pub p_value: f64,
    pub method: PValueMethod,
}

/// Midranks of the pooled sample, doubled so that tied ranks stay integral.
fn doubled_midranks(pooled: &[f64]) -> (Vec<u64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && pooled[order[end + 1]] == pooled[order[start]] {
            end += 1;
        }
        // positions start..=end hold ranks start+1..=end+1
        let doubled = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        let t = (end - start + 1) as f64;
        tie_term += t * t * t - t;
        start = end + 1;
    }
    (ranks, tie_term)
}

/// Two-sided rank-sum test of `a` against `b`.
///
/// The p-value is exact (complete enumeration of label assignments, via a
/// subset-sum table over midranks) when the smaller sample has at most
/// [`EXACT_MAX_SMALL`] values and the pooled size is at most
/// [`EXACT_MAX_TOTAL`]; otherwise a tie-corrected normal approximation with
/// continuity correction is used.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("rank-sum test input contains NaN".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = doubled_midranks(&pooled);

    let rank_sum_a2: u64 = ranks[..n1].iter().sum();
    let (f1, f2, fnn) = (n1 as f64, n2 as f64, n as f64);
    let u_a = rank_sum_a2 as f64 / 2.0 - f1 * (f1 + 1.0) / 2.0;
    let u_b = f1 * f2 - u_a;

    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((fnn + 1.0) - tie_term / (fnn * (fnn - 1.0)));
    if var <= 0.0 {
        return Ok(RankSumResult {
            u_a,
            u_b,
            z: 0.0,
            p_value: 1.0,
            method: PValueMethod::Degenerate,
        });
    }
    let dev = u_a - mean;
    let z = dev.signum() * (dev.abs() - 0.5).max(0.0) / var.sqrt();

    let (p_value, method) = if n1.min(n2) <= EXACT_MAX_SMALL && n <= EXACT_MAX_TOTAL {
        (exact_two_sided(&ranks, n1), PValueMethod::Exact)
    } else {
        (erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0), PValueMethod::Normal)
    };
    Ok(RankSumResult {
        u_a,
        u_b,
        z,
        p_value,
        method,
    })
}

/// P(|S - E[S]| >= |s_obs - E[S]|) where S is the doubled rank sum of a
/// uniformly random subset the size of the smaller sample.
fn exact_two_sided(ranks: &[u64], n1: usize) -> f64 {
    let n = ranks.len();
    let (group, k) = if n1 <= n - n1 {
        (&ranks[..n1], n1)
    } else {
        (&ranks[n1..], n - n1)
    };
    let observed: u64 = group.iter().sum();
    // expected doubled sum is k * (n + 1)
    let centre = (k * (n + 1)) as i64;
    let obs_dev = (observed as i64 - centre).abs();

    let max_sum: u64 = {
        let mut sorted = ranks.to_vec();
        sorted.sort_unstable_by(|x, y| y.cmp(x));
        sorted[..k].iter().sum()
    };
    let width = max_sum as usize + 1;
    // counts[j * width + s] = number of j-subsets with doubled sum s
    let mut counts = vec![0u128; (k + 1) * width];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        reach = (reach + r).min(max_sum as usize);
        for j in (1..=k).rev() {
            let (lo, hi) = counts.split_at_mut(j * width);
            let prev = &lo[(j - 1) * width..];
            let cur = &mut hi[..width];
            for s in (r..=reach).rev() {
                let add = prev[s - r];
                if add != 0 {
                    cur[s] += add;
                }
            }
        }
    }
    let row = &counts[k * width..];
    let mut total = 0u128;
    let mut extreme = 0u128;
    for (s, &c) in row.iter().enumerate() {
        if c == 0 {
            continue;
        }
        total += c;
        if (s as i64 - centre).abs() >= obs_dev {
            extreme += c;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}

/// Per-test significance threshold `alpha / m`.
pub fn bonferroni_threshold(alpha: f64, family_size: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("alpha", format!("{alpha} is not in (0, 1)")));
    }
    if family_size == 0 {
        return Err(Error::config("family_size", "must be at least 1"));
    }
    Ok(alpha / family_size as f64)
}

/// Flags each p-value that survives a Bonferroni correction over a family
/// of `family_size` tests. The family may be larger than `p_values`.
pub fn bonferroni(p_values: &[f64], alpha: f64, family_size: usize) -> Result<Vec<bool>> {
    let t = bonferroni_threshold(alpha, family_size)?;
    Ok(p_values.iter().map(|&p| p <= t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.u_a, 4.5);
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn fully_separated_exact() {
        // 2 of the C(6,3) = 20 assignments are as extreme
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u_a, 0.0);
        assert_eq!(r.u_b, 9.0);
        assert_eq!(r.method, PValueMethod::Exact);
        assert!((r.p_value - 0.1).abs() < 1e-15);
        assert!(r.z < 0.0);
    }

    #[test]
    fn all_values_tied_is_defined() {
        let r = wilcoxon_rank_sum(&[2.0; 4], &[2.0; 30]).unwrap();
        assert_eq!(r.method, PValueMethod::Degenerate);
        assert_eq!((r.z, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn empty_sample_is_error() {
        assert!(wilcoxon_rank_sum(&[], &[1.0]).is_err());
        assert!(wilcoxon_rank_sum(&[1.0], &[]).is_err());
        assert!(wilcoxon_rank_sum(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn swap_negates_z_keeps_p() {
        let a = [0.1, 0.4, 0.4, 0.9, 1.3, 2.0, 2.0, 0.0, 0.5, 0.7];
        let b = [0.2, 0.4, 1.1, 1.2, 1.5, 2.5, 3.0, 0.3, 0.8, 1.9, 2.2];
        let ab = wilcoxon_rank_sum(&a, &b).unwrap();
        let ba = wilcoxon_rank_sum(&b, &a).unwrap();
        assert_eq!(ab.z, -ba.z);
        assert_eq!(ab.p_value, ba.p_value);
        assert_eq!(ab.u_a, ba.u_b);
        assert_eq!(ab.method, PValueMethod::Normal);
    }

    #[test]
    fn large_samples_use_normal_path() {
        let a: Vec<f64> = (0..40).map(f64::from).collect();
        let b: Vec<f64> = (20..60).map(f64::from).collect();
        let r = wilcoxon_rank_sum(&a, &b).unwrap();
        assert_eq!(r.method, PValueMethod::Normal);
        assert!(r.p_value < 1e-4);
    }

    #[test]
    fn small_vs_large_stays_exact() {
        let a = [10.0, 11.0, 12.0];
        let b: Vec<f64> = (0..200).map(|i| f64::from(i) * 0.01).collect();
        let r = wilcoxon_rank_sum(&a, &b).unwrap();
        assert_eq!(r.method, PValueMethod::Exact);
        // only the top and bottom triples are this extreme
        let expected = 2.0 / (203.0 * 202.0 * 201.0 / 6.0);
        assert!((r.p_value - expected).abs() < 1e-15);
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(
            bonferroni(&[0.001, 0.02, 0.04], 0.05, 3).unwrap(),
            vec![true, false, false]
        );
        assert_eq!(
            bonferroni(&[0.04, 0.06], 0.05, 1).unwrap(),
            vec![true, false]
        );
        let t = bonferroni_threshold(0.05, 18).unwrap();
        assert!((t - 0.002778).abs() < 1e-6);
        assert_eq!(bonferroni(&[0.0027, 0.0029], 0.05, 18).unwrap(), vec![true, false]);
        assert!(bonferroni(&[0.01], 0.05, 0).is_err());
        assert!(bonferroni(&[0.01], 1.5, 3).is_err());
    }
}
