//! Bagged CART regression forest used as the embedding + random-forest baseline.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features_fraction: f64,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features_fraction: 1.0 / 3.0,
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    dim: usize,
    trees: Vec<Tree>,
}

struct Builder<'a> {
    inputs: &'a [f64],
    labels: &'a [f64],
    dim: usize,
    n_features: usize,
    config: &'a ForestConfig,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn x(&self, i: usize, f: usize) -> f64 {
        self.inputs[i * self.dim + f]
    }

    fn build(&mut self, samples: &mut [usize], depth: usize, rng: &mut rng::Rng) -> usize {
        let id = self.nodes.len();
        let mean = samples.iter().map(|&i| self.labels[i]).sum::<f64>() / samples.len() as f64;
        self.nodes.push(Node::Leaf(mean));
        let pure = samples.iter().all(|&i| self.labels[i] == self.labels[samples[0]]);
        if pure
            || samples.len() < self.config.min_samples_split.max(2)
            || self.config.max_depth.is_some_and(|d| depth >= d)
        {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(samples, rng) else {
            return id;
        };
        samples.sort_by(|&a, &b| self.x(a, feature).total_cmp(&self.x(b, feature)));
        let cut = samples.partition_point(|&i| self.x(i, feature) <= threshold);
        let (lo, hi) = samples.split_at_mut(cut);
        let left = self.build(lo, depth + 1, rng);
        let right = self.build(hi, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Variance-reduction split over a random feature subset.
    fn best_split(&self, samples: &[usize], rng: &mut rng::Rng) -> Option<(usize, f64)> {
        let features = index::sample(rng, self.dim, self.n_features).into_vec();
        let n = samples.len() as f64;
        let total: f64 = samples.iter().map(|&i| self.labels[i]).sum();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = samples.to_vec();
        for f in features {
            order.sort_by(|&a, &b| self.x(a, f).total_cmp(&self.x(b, f)));
            let mut left_sum = 0.0;
            for k in 0..order.len() - 1 {
                left_sum += self.labels[order[k]];
                let (xa, xb) = (self.x(order[k], f), self.x(order[k + 1], f));
                if xa == xb {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let right_sum = total - left_sum;
                // Maximizing this is equivalent to minimizing the children's squared error.
                let gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if best.is_none_or(|(g, _, _)| gain > g + 1e-12 * g.abs()) {
                    let mid = 0.5 * (xa + xb);
                    let threshold = if mid < xb { mid } else { xa };
                    best = Some((gain, f, threshold));
                }
            }
        }
        let parent = total * total / n;
        best.filter(|(g, _, _)| *g > parent + 1e-12 * parent.abs()).map(|(_, f, t)| (f, t))
    }
}

impl Forest {
    /// Fits `config.n_trees` trees, each on a bootstrap resample of the rows.
    pub fn fit(inputs: &[f64], labels: &[f64], dim: usize, config: &ForestConfig) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("forest training set"));
        }
        if dim == 0 || inputs.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dim,
                found: inputs.len(),
            });
        }
        if config.n_trees == 0 || !(config.max_features_fraction > 0.0 && config.max_features_fraction <= 1.0) {
            return Err(Error::InvalidParameter("forest needs trees and a feature fraction in (0, 1]".into()));
        }
        if inputs.iter().chain(labels).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("forest input".into()));
        }
        let n_features = (libm::round(config.max_features_fraction * dim as f64) as usize).clamp(1, dim);
        let n = labels.len();
        let trees = (0..config.n_trees)
            .map(|t| {
                let mut r = rng::stream(rng::derive(config.seed, t as u64), tag::FOREST);
                let mut samples: Vec<usize> = (0..n).map(|_| r.gen_range(0..n)).collect();
                let mut b = Builder {
                    inputs,
                    labels,
                    dim,
                    n_features,
                    config,
                    nodes: Vec::new(),
                };
                b.build(&mut samples, 0, &mut r);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(Forest { dim, trees })
    }

    pub fn predict(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if !inputs.len().is_multiple_of(self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: inputs.len() % self.dim,
            });
        }
        let k = self.trees.len() as f64;
        Ok(inputs
            .chunks(self.dim)
            .map(|row| self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / k)
            .collect())
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn rf_fit(inputs: &[f64], labels: &[f64], dim: usize, n_trees: usize, max_features_fraction: f64, seed: u64) -> Result<Forest> {
    Forest::fit(
        inputs,
        labels,
        dim,
        &ForestConfig {
            n_trees,
            max_features_fraction,
            seed,
            ..ForestConfig::default()
        },
    )
}

pub fn rf_predict(forest: &Forest, inputs: &[f64]) -> Result<Vec<f64>> {
    forest.predict(inputs)
}
