//! Goodness-of-fit and interval helpers for the Monte-Carlo checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

/// Pearson chi-square test of observed counts against a reference law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of bins after pooling.
    pub bins: usize,
}

/// Chi-square test with adjacent bins pooled until every expected count reaches `min_expected`.
///
/// `probs` is the reference pmf over the same support as `counts`; any mass outside it is
/// ignored and the pmf is renormalized.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquareTest> {
    if counts.len() != probs.len() {
        return invalid("counts and probabilities differ in length");
    }
    let total: u64 = counts.iter().sum();
    let mass: f64 = probs.iter().sum();
    if total == 0 || mass <= 0.0 {
        return invalid("chi-square needs observations and a non-zero reference law");
    }
    let nf = total as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs += c as f64;
        exp += nf * p / mass;
        if exp >= min_expected {
            pooled.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    // The leftover tail joins the last full bin.
    match pooled.last_mut() {
        Some(last) => {
            last.0 += obs;
            last.1 += exp;
        }
        None => pooled.push((obs, exp)),
    }
    let bins = pooled.len();
    if bins < 2 {
        return Ok(ChiSquareTest { statistic: 0.0, dof: 0, p_value: 1.0, bins });
    }
    let statistic: f64 = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    Ok(ChiSquareTest { statistic, dof, p_value: dist.sf(statistic), bins })
}

/// Half the L1 distance between two probability vectors (shorter one zero-padded).
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(a, i) - at(b, i)).abs()).sum::<f64>()
}

/// Empirical frequencies from counts.
pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

/// Three-sigma sampling allowance for an empirical TV distance over `samples` draws:
/// `(3/2) sum_k sqrt(p_k (1 - p_k) / samples)`.
pub fn tv_sampling_allowance(probs: &[f64], samples: u64) -> f64 {
    let n = samples.max(1) as f64;
    1.5 * probs.iter().map(|&p| (p * (1.0 - p) / n).sqrt()).sum::<f64>()
}

/// 95% normal-approximation half width for a proportion.
pub fn proportion_ci95(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    let p = successes as f64 / trials as f64;
    1.959_963_984_540_054 * (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_reference_values() {
        // Fair die, 600 rolls: statistic by hand = (10^2 + 10^2 + 0 + 0 + 5^2 + 5^2) / 100.
        let counts = [110, 90, 100, 100, 105, 95];
        let t = chi_square_gof(&counts, &[1.0 / 6.0; 6], 5.0).unwrap();
        assert!((t.statistic - 2.5).abs() < 1e-12);
        assert_eq!(t.dof, 5);
        // Upper tail of chi2(5) at 2.5, from tables: 0.7765.
        assert!((t.p_value - 0.7765).abs() < 1e-3);
    }

    #[test]
    fn chi_square_pools_sparse_bins() {
        let counts = [1, 2, 50, 47, 0];
        let probs = [0.01, 0.02, 0.5, 0.46, 0.01];
        let t = chi_square_gof(&counts, &probs, 5.0).unwrap();
        assert_eq!(t.bins, 2);
        assert!(t.p_value > 0.5);
    }

    #[test]
    fn tv_and_ci() {
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0]), 0.5);
        assert_eq!(total_variation(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
        assert!((proportion_ci95(5000, 10000) - 0.0098).abs() < 1e-4);
        assert_eq!(frequencies(&[1, 3]), vec![0.25, 0.75]);
    }
}
