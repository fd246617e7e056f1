//! Independently seeded rankers and their consensus / covariance outputs.
//!
//! Ranking losses are translation invariant, so each member's predictions are
//! de-meaned over the candidate set before they are combined.

use alloc::vec::Vec;

use super::mlp::{MlpConfig, MlpModel, Real};
use super::train::{train_model, History, Objective, TrainPhaseConfig};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

pub const DEFAULT_MEMBERS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T: Real = f32> {
    config: MlpConfig,
    members: Vec<MlpModel<T>>,
}

/// Seed of member `index` given the ensemble seed.
pub fn member_seed(seed: u64, index: usize) -> u64 {
    rng::derive(seed, index as u64)
}

impl<T: Real> Ensemble<T> {
    /// `k` freshly initialized members; member `j` draws its weights from
    /// `member_seed(config.seed, j)`.
    pub fn new(config: MlpConfig, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("ensemble needs at least one member".into()));
        }
        let members = (0..k)
            .map(|j| {
                let mut c = config.clone();
                c.seed = member_seed(config.seed, j);
                MlpModel::new(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble { config, members })
    }

    pub fn from_members(config: MlpConfig, members: Vec<MlpModel<T>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("ensemble members"));
        }
        if members.iter().any(|m| m.config().hidden_dims != config.hidden_dims || m.input_dim() != config.input_dim) {
            return Err(Error::InvalidParameter("members must share the ensemble architecture".into()));
        }
        Ok(Ensemble { config, members })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn members(&self) -> &[MlpModel<T>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Trains one member with its own random stream derived from `(seed, index)`.
    pub fn train_member(
        &mut self,
        index: usize,
        inputs: &[T],
        labels: &[f64],
        phase: &TrainPhaseConfig,
        objective: Objective,
        seed: u64,
    ) -> Result<History> {
        let member = self
            .members
            .get_mut(index)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("no member {index}")))?;
        train_model(member, inputs, labels, phase, objective, member_seed(seed, index))
    }

    /// Trains every member in turn. Member results do not depend on order.
    pub fn train(
        &mut self,
        inputs: &[T],
        labels: &[f64],
        phase: &TrainPhaseConfig,
        objective: Objective,
        seed: u64,
    ) -> Result<Vec<History>> {
        (0..self.members.len())
            .map(|j| self.train_member(j, inputs, labels, phase, objective, seed))
            .collect()
    }

    /// Raw eval-mode predictions, one vector per member.
    pub fn member_predictions(&self, inputs: &[T]) -> Result<Vec<Vec<f64>>> {
        self.members
            .iter()
            .map(|m| {
                Ok(m.predict(inputs)?
                    .into_iter()
                    .map(|x| x.to_f64().unwrap_or(f64::NAN))
                    .collect())
            })
            .collect()
    }
}

fn demeaned(preds: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = preds.first().map(Vec::len).ok_or(Error::Empty("ensemble predictions"))?;
    if n == 0 {
        return Err(Error::Empty("candidate inputs"));
    }
    if preds.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: preds.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
        });
    }
    Ok(preds
        .iter()
        .map(|p| {
            let mean = p.iter().sum::<f64>() / n as f64;
            p.iter().map(|x| x - mean).collect()
        })
        .collect())
}

/// Element-wise mean of the de-meaned member predictions.
pub fn consensus_of(preds: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = demeaned(preds)?;
    let k = d.len() as f64;
    let n = d[0].len();
    Ok((0..n).map(|i| d.iter().map(|p| p[i]).sum::<f64>() / k).collect())
}

/// Sample covariance across members (divisor `k - 1`) of de-meaned predictions.
pub fn covariance_of(preds: &[Vec<f64>]) -> Result<Matrix> {
    if preds.len() < 2 {
        return Err(Error::InvalidParameter("covariance needs at least two members".into()));
    }
    let d = demeaned(preds)?;
    let n = d[0].len();
    let k = d.len();
    // Offsets from the first member keep identical members exactly at zero.
    let offsets: Vec<Vec<f64>> = d
        .iter()
        .map(|p| p.iter().zip(&d[0]).map(|(x, x0)| x - x0).collect())
        .collect();
    let centered: Vec<Vec<f64>> = offsets
        .iter()
        .map(|o| {
            (0..n)
                .map(|i| o[i] - offsets.iter().map(|q| q[i]).sum::<f64>() / k as f64)
                .collect()
        })
        .collect();
    let mut cov = Matrix::zeros(n, n);
    let denom = (k - 1) as f64;
    for i in 0..n {
        for j in i..n {
            let s: f64 = centered.iter().map(|c| c[i] * c[j]).sum::<f64>() / denom;
            cov[(i, j)] = s;
            cov[(j, i)] = s;
        }
    }
    Ok(cov)
}

pub fn predict_consensus<T: Real>(ensemble: &Ensemble<T>, inputs: &[T]) -> Result<Vec<f64>> {
    consensus_of(&ensemble.member_predictions(inputs)?)
}

pub fn prediction_covariance<T: Real>(ensemble: &Ensemble<T>, inputs: &[T]) -> Result<Matrix> {
    covariance_of(&ensemble.member_predictions(inputs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn consensus_demeans_each_member() {
        let c = consensus_of(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(c, vec![-0.5, 0.5]);
        let shifted = consensus_of(&[vec![101.0, 102.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(shifted, c);
        assert_eq!(consensus_of(&[vec![5.0, 7.0, 9.0]]).unwrap(), vec![-2.0, 0.0, 2.0]);
        assert!(consensus_of(&[vec![]]).is_err());
    }

    #[test]
    fn identical_members_have_zero_covariance() {
        let cov = covariance_of(&[vec![1.0, 5.0, 2.0], vec![1.0, 5.0, 2.0], vec![1.0, 5.0, 2.0]]).unwrap();
        assert_eq!(cov.max_abs(), 0.0);
    }

    #[test]
    fn opposed_members() {
        // De-meaned member predictions (+a, -a) and (-a, +a): each candidate's
        // deviations from the consensus are +a and -a, so with divisor k - 1 = 1
        // the variance is a^2 + a^2.
        let a = 1.5;
        let cov = covariance_of(&[vec![a, -a], vec![-a, a]]).unwrap();
        let v = 2.0 * a * a;
        assert_eq!(cov, Matrix::from_rows(&[vec![v, -v], vec![-v, v]]));
        assert!(cov.is_symmetric(0.0));
    }

    #[test]
    fn covariance_needs_two_members() {
        assert!(covariance_of(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn members_have_distinct_seeds() {
        let mut c = MlpConfig::new(4);
        c.hidden_dims = vec![3];
        let e = Ensemble::<f32>::new(c, 3).unwrap();
        assert_ne!(e.members()[0].params(), e.members()[1].params());
    }
}
