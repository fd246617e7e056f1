//! Batch acquisition: top-N, UCB, and the constant-liar batch builder.
//!
//! Constant-liar picks the UCB-maximizing candidate, then conditions the
//! remaining candidates on a pessimistic imagined observation of it (the
//! "lie", the minimum initial mean). With `v` the covariance between the pick
//! and the rest and `s2` its variance plus observation noise:
//!
//! ```text
//! cov'  = cov_rest - v v^T / s2
//! mean' = mean_rest + v (lie - mean_pick) / s2
//! ```
//!
//! The observation noise is `alpha * median(diag cov)`: small `alpha` trusts
//! the lie and spreads the batch out, large `alpha` recovers top-N.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{median, Matrix};

pub const DEFAULT_BETA: f64 = 1.0;

/// Diagonal entries down to this far below zero are treated as zero.
pub const NEGATIVE_VARIANCE_TOLERANCE: f64 = 1e-12;

/// Relative size under which an effective variance counts as zero.
const SINGULAR_RELATIVE: f64 = 1e-12;

pub fn ucb_score(mean: &[f64], cov: &Matrix, beta: f64) -> Result<Vec<f64>> {
    if cov.rows() != mean.len() || !cov.is_square() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            found: cov.rows(),
        });
    }
    mean.iter()
        .enumerate()
        .map(|(i, &m)| {
            let var = cov[(i, i)];
            if var < -NEGATIVE_VARIANCE_TOLERANCE {
                return Err(Error::InvalidParameter(alloc::format!("negative variance {var} at {i}")));
            }
            Ok(m + beta * libm::sqrt(var.max(0.0)))
        })
        .collect()
}

/// Indices of the `n` largest scores, best first; ties go to the lower index.
pub fn top_n_select(scores: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// Where the `alpha * median variance` noise enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePlacement {
    /// Added to the picked candidate's variance at every update, with the
    /// median taken over the current diagonal.
    #[default]
    PerStep,
    /// Added once to the whole diagonal before the first pick.
    OneTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClOptions {
    pub alpha: f64,
    pub beta: f64,
    pub placement: NoisePlacement,
}

impl ClOptions {
    pub fn new(alpha: f64) -> Self {
        ClOptions {
            alpha,
            beta: DEFAULT_BETA,
            placement: NoisePlacement::PerStep,
        }
    }
}

/// Posterior over the candidates still available during batch construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CLState {
    /// Original candidate indices, aligned with `mean` and `cov`.
    pub remaining: Vec<usize>,
    pub mean: Vec<f64>,
    pub cov: Matrix,
    /// Noise multiplier applied at each update (zero after a one-time inflation).
    pub alpha: f64,
    pub lie: f64,
}

impl CLState {
    /// State with the pessimistic lie `min(mean)`.
    pub fn new(mean: Vec<f64>, cov: Matrix, alpha: f64) -> Result<Self> {
        let lie = mean.iter().copied().fold(f64::INFINITY, f64::min);
        CLState::with_lie(mean, cov, alpha, lie)
    }

    pub fn with_lie(mean: Vec<f64>, cov: Matrix, alpha: f64, lie: f64) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::Empty("candidates"));
        }
        if !cov.is_square() || cov.rows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.rows(),
            });
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidParameter(alloc::format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if mean.iter().any(|m| !m.is_finite()) || cov.as_slice().iter().any(|c| !c.is_finite()) || !lie.is_finite() {
            return Err(Error::NonFinite("constant-liar inputs".into()));
        }
        Ok(CLState {
            remaining: (0..mean.len()).collect(),
            mean,
            cov,
            alpha,
            lie,
        })
    }

    /// Folds the noise into the diagonal once and disables per-step noise.
    fn inflate_once(mut self) -> Self {
        let noise = self.alpha * median(&self.cov.diagonal()).unwrap_or(0.0);
        for i in 0..self.mean.len() {
            self.cov[(i, i)] += noise;
        }
        self.alpha = 0.0;
        self
    }

    pub fn len(&self) -> usize {
        self.remaining.len()
    }

    pub fn is_empty(&self) -> bool {
        self.remaining.is_empty()
    }
}

/// Removes original candidate `chosen` and conditions the rest on the lie.
pub fn cl_update(state: &CLState, chosen: usize) -> Result<CLState> {
    let k = state
        .remaining
        .iter()
        .position(|&r| r == chosen)
        .ok_or_else(|| Error::InvalidParameter(alloc::format!("candidate {chosen} is not available")))?;
    let n = state.remaining.len();
    let diag = state.cov.diagonal();
    let noise = state.alpha * median(&diag).unwrap_or(0.0);
    let s2 = state.cov[(k, k)] + noise;

    let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    let v: Vec<f64> = keep.iter().map(|&i| state.cov[(i, k)]).collect();
    let scale = diag.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    let remaining: Vec<usize> = keep.iter().map(|&i| state.remaining[i]).collect();

    if s2 <= SINGULAR_RELATIVE * scale || s2 <= 0.0 {
        let coupled = v.iter().any(|x| x.abs() > SINGULAR_RELATIVE * scale.max(f64::MIN_POSITIVE));
        if coupled {
            return Err(Error::SingularUpdate(s2));
        }
        // Nothing to learn from a zero-variance pick that is uncorrelated with the rest.
        return Ok(CLState {
            remaining,
            mean: keep.iter().map(|&i| state.mean[i]).collect(),
            cov: state.cov.without(k),
            alpha: state.alpha,
            lie: state.lie,
        });
    }

    let shift = (state.lie - state.mean[k]) / s2;
    let mean: Vec<f64> = keep
        .iter()
        .zip(&v)
        .map(|(&i, &vi)| state.mean[i] + vi * shift)
        .collect();
    let m = keep.len();
    let mut cov = Matrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let value = state.cov[(keep[a], keep[b])] - v[a] * v[b] / s2;
            cov[(a, b)] = value;
            cov[(b, a)] = value;
        }
        if cov[(a, a)] < 0.0 {
            cov[(a, a)] = 0.0;
        }
    }
    Ok(CLState {
        remaining,
        mean,
        cov,
        alpha: state.alpha,
        lie: state.lie,
    })
}

/// Greedy batch of `n` candidates: repeatedly take the UCB maximizer of the
/// current state (ties to the lower original index) and condition on the lie.
pub fn constant_liar_select(mean: &[f64], cov: &Matrix, n: usize, options: &ClOptions) -> Result<Vec<usize>> {
    if n > mean.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "batch of {n} from {} candidates",
            mean.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut state = CLState::new(mean.to_vec(), cov.clone(), options.alpha)?;
    if options.placement == NoisePlacement::OneTime {
        state = state.inflate_once();
    }
    let mut batch = Vec::with_capacity(n);
    while batch.len() < n {
        let ucb = ucb_score(&state.mean, &state.cov, options.beta)?;
        let best = (0..ucb.len())
            .max_by(|&a, &b| {
                ucb[a]
                    .total_cmp(&ucb[b])
                    .then(state.remaining[b].cmp(&state.remaining[a]))
            })
            .expect("state is nonempty while the batch is short");
        let chosen = state.remaining[best];
        batch.push(chosen);
        if batch.len() < n {
            state = cl_update(&state, chosen)?;
        }
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ucb_basics() {
        let cov = Matrix::from_rows(&[vec![4.0]]);
        assert_eq!(ucb_score(&[1.0], &cov, 1.0).unwrap(), vec![3.0]);
        assert_eq!(ucb_score(&[1.0], &cov, 0.0).unwrap(), vec![1.0]);
        let zero = Matrix::zeros(3, 3);
        let s = ucb_score(&[0.2, 0.9, 0.5], &zero, 2.0).unwrap();
        assert_eq!(top_n_select(&s, 3), vec![1, 2, 0]);
        let bad = Matrix::from_rows(&[vec![-1e-6]]);
        assert!(ucb_score(&[0.0], &bad, 1.0).is_err());
        let tiny = Matrix::from_rows(&[vec![-1e-13]]);
        assert_eq!(ucb_score(&[0.0], &tiny, 1.0).unwrap(), vec![0.0]);
    }

    #[test]
    fn top_n() {
        assert_eq!(top_n_select(&[3.0, 1.0, 2.0], 2), vec![0, 2]);
        assert_eq!(top_n_select(&[3.0, 1.0, 2.0], 3), vec![0, 2, 1]);
        assert_eq!(top_n_select(&[1.0, 1.0, 1.0], 2), vec![0, 1]);
    }

    #[test]
    fn uncorrelated_pick_changes_nothing() {
        let cov = Matrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.3], vec![0.0, 0.3, 1.5]]);
        let s = CLState::new(vec![1.0, 0.5, -0.2], cov.clone(), 1.0).unwrap();
        let next = cl_update(&s, 0).unwrap();
        assert_eq!(next.mean, vec![0.5, -0.2]);
        assert_eq!(next.cov, cov.without(0));
        assert_eq!(next.remaining, vec![1, 2]);
    }

    #[test]
    fn exact_two_by_two() {
        let cov = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let s = CLState::with_lie(vec![1.0, 0.0], cov.clone(), 0.0, 0.0).unwrap();
        let next = cl_update(&s, 0).unwrap();
        assert!((next.cov[(0, 0)] - 1.5).abs() < 1e-15);
        assert!((next.mean[0] + 0.5).abs() < 1e-15);

        // median diag 2, alpha 6: effective variance 2 + 12 = 14
        let s = CLState::with_lie(vec![1.0, 0.0], cov, 6.0, 0.0).unwrap();
        let next = cl_update(&s, 0).unwrap();
        assert!((next.cov[(0, 0)] - (2.0 - 1.0 / 14.0)).abs() < 1e-15);
        assert!((next.mean[0] + 1.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn twins_are_split_up() {
        let cov = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let mean = [2.0, 1.9, 1.0];
        let batch = constant_liar_select(&mean, &cov, 2, &ClOptions::new(0.0)).unwrap();
        assert_eq!(batch, vec![0, 2]);
        // Pure top-N would take both twins.
        assert_eq!(top_n_select(&ucb_score(&mean, &cov, 1.0).unwrap(), 2), vec![0, 1]);
    }

    #[test]
    fn full_batch_is_permutation() {
        let cov = Matrix::from_rows(&[vec![1.0, 0.5, 0.2], vec![0.5, 1.0, 0.1], vec![0.2, 0.1, 1.0]]);
        let mut batch = constant_liar_select(&[0.1, 0.3, 0.2], &cov, 3, &ClOptions::new(1.0)).unwrap();
        batch.sort();
        assert_eq!(batch, vec![0, 1, 2]);
    }

    #[test]
    fn singular_update_is_reported() {
        let cov = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 1.0]]);
        let s = CLState::new(vec![1.0, 0.0], cov, 0.0).unwrap();
        assert!(matches!(cl_update(&s, 0), Err(Error::SingularUpdate(_))));
    }

    #[test]
    fn rejects_oversized_batch() {
        let cov = Matrix::identity(2);
        assert!(constant_liar_select(&[0.0, 1.0], &cov, 3, &ClOptions::new(1.0)).is_err());
    }

    #[test]
    fn one_time_noise_inflates_diagonal() {
        let cov = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let s = CLState::with_lie(vec![1.0, 0.0], cov, 6.0, 0.0).unwrap().inflate_once();
        assert_eq!(s.cov.diagonal(), vec![14.0, 14.0]);
        let next = cl_update(&s, 0).unwrap();
        assert!((next.cov[(0, 0)] - (14.0 - 1.0 / 14.0)).abs() < 1e-12);
    }
}
