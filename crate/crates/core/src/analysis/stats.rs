//! Cross-pair ranked statistic: how often a value from `compared` exceeds a
//! value from `reference`, ties counting one half. Equal to the Mann-Whitney
//! U of `compared`; the maximum is `n * m`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedPair {
    pub ranked_sum: f64,
    /// `n_reference * n_compared`.
    pub max: f64,
    pub n_reference: usize,
    pub n_compared: usize,
    pub z: f64,
    /// Two-sided, normal approximation with tie correction.
    pub p_value: f64,
}

/// Average (mid) ranks, 1-based, of `values`.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        tie_sizes.push(j - i);
        i = j;
    }
    (ranks, tie_sizes)
}

pub fn ranked_pair_statistic(reference: &[f64], compared: &[f64]) -> Result<RankedPair> {
    if reference.is_empty() || compared.is_empty() {
        return Err(Error::EmptyInput);
    }
    if reference.iter().chain(compared).any(|x| x.is_nan()) {
        return Err(Error::InvalidConfig("NaN in ranked statistic input".into()));
    }
    let n = reference.len();
    let m = compared.len();
    let pooled: Vec<f64> = reference.iter().chain(compared).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_compared: f64 = ranks[n..].iter().sum();
    let mf = m as f64;
    let ranked_sum = rank_sum_compared - mf * (mf + 1.0) / 2.0;

    let nm = (n * m) as f64;
    let total = (n + m) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let variance = if total > 1.0 {
        nm / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)))
    } else {
        0.0
    };
    let diff = ranked_sum - nm / 2.0;
    let (z, p_value) = if variance > 0.0 {
        let z = diff / variance.sqrt();
        (z, erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0))
    } else {
        (0.0, 1.0)
    };
    Ok(RankedPair {
        ranked_sum,
        max: nm,
        n_reference: n,
        n_compared: m,
        z,
        p_value,
    })
}

/// Number of arrangements giving each U value, for group sizes `n`, `m`
/// without ties.
fn u_distribution(n: usize, m: usize) -> Vec<f64> {
    // counts[i][j] = distribution for sizes (i, j)
    let mut counts: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); m + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=m {
            counts[i][j] = if i == 0 || j == 0 {
                vec![1.0]
            } else {
                let mut d = vec![0.0; i * j + 1];
                // largest pooled value comes from the compared group: it beats all i references
                for (u, c) in counts[i][j - 1].iter().enumerate() {
                    d[u + i] += c;
                }
                for (u, c) in counts[i - 1][j].iter().enumerate() {
                    d[u] += c;
                }
                d
            };
        }
    }
    std::mem::take(&mut counts[n][m])
}

/// Exact two-sided p-value of the ranked sum. Defined for untied data with
/// `n * m <= 400`; returns `None` otherwise.
pub fn exact_p_value(reference: &[f64], compared: &[f64]) -> Result<Option<f64>> {
    let stat = ranked_pair_statistic(reference, compared)?;
    let n = reference.len();
    let m = compared.len();
    let pooled: Vec<f64> = reference.iter().chain(compared).copied().collect();
    let (_, ties) = midranks(&pooled);
    if n * m > 400 || ties.iter().any(|&t| t > 1) {
        return Ok(None);
    }
    let dist = u_distribution(n, m);
    let total: f64 = dist.iter().sum();
    let u = stat.ranked_sum.round() as usize;
    let lower: f64 = dist[..=u].iter().sum::<f64>() / total;
    let upper: f64 = dist[u..].iter().sum::<f64>() / total;
    Ok(Some((2.0 * lower.min(upper)).min(1.0)))
}
