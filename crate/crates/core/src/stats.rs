//! Rank statistics, percentiles and the one-sided Wilcoxon signed-rank test.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest sample handled by exact enumeration; above it the normal
/// approximation is used.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewRecords {
            needed: 2,
            found: a.len(),
        });
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("spearman input".into()));
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Percentile `q` in [0, 100] by linear interpolation between order statistics.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile input"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidParameter(alloc::format!("percentile {q} outside [0, 100]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let frac = pos - lo as f64;
    Ok(v[lo] + frac * (v[hi] - v[lo]))
}

/// `(A_99.375 - A_min) / (A_max - A_min)`.
pub fn difficulty(activities: &[f64]) -> Result<f64> {
    let p = percentile(activities, 99.375)?;
    let min = activities.iter().copied().fold(f64::INFINITY, f64::min);
    let max = activities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Err(Error::ZeroVariance);
    }
    Ok((p - min) / (max - min))
}

/// `ln(a + 1) - ln(b + 1)` per pair; the offset keeps zero counts finite.
pub fn log_differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            if x <= -1.0 || y <= -1.0 {
                return Err(Error::InvalidParameter("log difference needs values above -1".into()));
            }
            Ok(libm::log1p(x) - libm::log1p(y))
        })
        .collect()
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (divisor n - 1).
pub fn std_dev(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    Some(libm::sqrt(ss / (values.len() - 1) as f64))
}

pub fn std_error(values: &[f64]) -> Option<f64> {
    Some(std_dev(values)? / libm::sqrt(values.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    /// Nonzero differences used.
    pub n: usize,
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    /// P(W+ >= observed) under the symmetric null.
    pub p_value: f64,
    pub exact: bool,
}

/// Number of sign patterns reaching each doubled rank sum, indexed by sum.
/// Ranks are doubled so averaged ties stay integral.
pub fn signed_rank_null_counts(doubled_ranks: &[u32]) -> Vec<u64> {
    let total: usize = doubled_ranks.iter().map(|&r| r as usize).sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// One-sided signed-rank test of whether the differences tend to be positive.
/// Zeros are dropped, ties share average ranks. Exact for up to
/// [`WILCOXON_EXACT_MAX`] nonzero differences, otherwise a normal approximation
/// with tie-corrected variance.
pub fn wilcoxon_one_sided(differences: &[f64]) -> Result<Wilcoxon> {
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("wilcoxon difference".into()));
    }
    let nonzero: Vec<f64> = differences.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::AllZero);
    }
    let n = nonzero.len();
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    if n <= WILCOXON_EXACT_MAX {
        let doubled: Vec<u32> = ranks.iter().map(|r| libm::round(2.0 * r) as u32).collect();
        let counts = signed_rank_null_counts(&doubled);
        let observed = libm::round(2.0 * w_plus) as usize;
        let tail: u64 = counts[observed..].iter().sum();
        return Ok(Wilcoxon {
            n,
            w_plus,
            p_value: tail as f64 / libm::exp2(n as f64),
            exact: true,
        });
    }

    Ok(Wilcoxon {
        n,
        w_plus,
        p_value: normal_tail(&abs, w_plus),
        exact: false,
    })
}

/// Upper-tail normal approximation of the signed-rank statistic, tie-corrected,
/// without continuity correction.
fn normal_tail(abs: &[f64], w_plus: f64) -> f64 {
    let nf = abs.len() as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus - mean) / libm::sqrt(var);
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}
