//! Mann-Whitney U test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest pooled sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample: pairs `(a, b)` with `a > b`, ties
    /// counting one half.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Whether `p_value` comes from the exact null distribution.
    pub exact: bool,
}

/// Midranks (1-based) of `values`; tied values share the mean of their ranks.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_sizes = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && values[order[end]] == values[order[k]] {
            end += 1;
        }
        let rank = (k + end + 1) as f64 / 2.0;
        for &i in &order[k..end] {
            ranks[i] = rank;
        }
        tie_sizes.push(end - k);
        k = end;
    }
    (ranks, tie_sizes)
}

/// Number of arrangements of `m` + `n` distinct values yielding each U in
/// `0..=m*n`.
fn u_distribution(m: usize, n: usize) -> Vec<u64> {
    // table[i][j] is the count vector for sizes (i, j)
    let mut table: Vec<Vec<Vec<u64>>> = vec![vec![Vec::new(); n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            let mut counts = vec![0u64; i * j + 1];
            if i == 0 || j == 0 {
                counts[0] = 1;
            } else {
                // largest value from the first sample: it beats all j others
                for (u, &c) in table[i - 1][j].iter().enumerate() {
                    counts[u + j] += c;
                }
                for (u, &c) in table[i][j - 1].iter().enumerate() {
                    counts[u] += c;
                }
            }
            table[i][j] = counts;
        }
    }
    std::mem::take(&mut table[m][n])
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("Mann-Whitney U needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("Mann-Whitney U needs finite values".into()));
    }
    let (m, n) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum: f64 = ranks[..m].iter().sum();
    let u = rank_sum - (m * (m + 1)) as f64 / 2.0;
    let has_ties = ties.iter().any(|&t| t > 1);

    if m + n <= EXACT_LIMIT && !has_ties {
        let dist = u_distribution(m, n);
        let total: u64 = dist.iter().sum();
        let k = u.round() as usize;
        let lower: u64 = dist[..=k].iter().sum();
        let upper: u64 = dist[k..].iter().sum();
        let p = (2.0 * lower.min(upper) as f64 / total as f64).min(1.0);
        return Ok(MannWhitney {
            u,
            p_value: p,
            exact: true,
        });
    }

    Ok(MannWhitney {
        u,
        p_value: normal_p(u, m, n, &ties),
        exact: false,
    })
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
fn normal_p(u: f64, m: usize, n: usize, ties: &[usize]) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    let total = mf + nf;
    let mean = mf * nf / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (total * (total - 1.0));
    let var = mf * nf / 12.0 * ((total + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}
