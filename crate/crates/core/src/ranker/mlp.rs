//! Feed-forward scorer: `Linear -> BatchNorm -> ReLU -> Dropout` per hidden
//! layer and a single-output linear head.
//!
//! All trainable parameters live in one flat vector so the optimizer and the
//! checkpoint format can treat them uniformly. Batch-norm running statistics are
//! kept apart; they are state, not parameters.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating-point type usable for weights.
pub trait Real: Float + FromPrimitive + ToPrimitive + Default + Debug + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + ToPrimitive + Default + Debug + Send + Sync + 'static {}

#[inline]
fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("representable constant")
}

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub dropout: f64,
    pub final_bias: bool,
    pub seed: u64,
}

impl MlpConfig {
    /// The production architecture: `input -> 100 -> 50 -> 1`, dropout 0.2, no output bias.
    pub fn new(input_dim: usize) -> Self {
        MlpConfig {
            input_dim,
            hidden_dims: vec![100, 50],
            dropout: 0.2,
            final_bias: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::InvalidParameter("layer sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter("dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Offsets of each block inside the flat parameter vector.
    fn layout(&self) -> Layout {
        let mut hidden = Vec::with_capacity(self.hidden_dims.len());
        let mut offset = 0;
        let mut fan_in = self.input_dim;
        for &out in &self.hidden_dims {
            let l = HiddenLayout {
                fan_in,
                out,
                weight: offset,
                bias: offset + out * fan_in,
                gamma: offset + out * fan_in + out,
                beta: offset + out * fan_in + 2 * out,
            };
            offset = l.beta + out;
            hidden.push(l);
            fan_in = out;
        }
        let head_weight = offset;
        offset += fan_in;
        let head_bias = self.final_bias.then(|| {
            offset += 1;
            offset - 1
        });
        Layout {
            hidden,
            head_fan_in: fan_in,
            head_weight,
            head_bias,
            total: offset,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

#[derive(Debug, Clone)]
struct HiddenLayout {
    fan_in: usize,
    out: usize,
    weight: usize,
    bias: usize,
    gamma: usize,
    beta: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    hidden: Vec<HiddenLayout>,
    head_fan_in: usize,
    head_weight: usize,
    head_bias: Option<usize>,
    total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T: Real = f32> {
    config: MlpConfig,
    layout_total: usize,
    params: Vec<T>,
    running: Vec<RunningStats<T>>,
    mode: Mode,
}

/// Activations kept from a training-mode forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    batch: usize,
    /// Input to each hidden layer and to the head, row-major `batch x fan_in`.
    inputs: Vec<Vec<T>>,
    xhat: Vec<Vec<T>>,
    inv_std: Vec<Vec<T>>,
    batch_mean: Vec<Vec<T>>,
    batch_var: Vec<Vec<T>>,
    /// Post-BN pre-ReLU values.
    normalized: Vec<Vec<T>>,
    /// Dropout multipliers (0 or 1/(1-p)), empty when dropout is off.
    masks: Vec<Vec<T>>,
    pub output: Vec<T>,
}

impl<T: Real> MlpModel<T> {
    /// Fresh model with uniform fan-in scaled weights drawn from `config.seed`.
    pub fn new(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = crate::rng::stream(config.seed, crate::rng::tag::INIT);
        let layout = config.layout();
        let mut params = vec![T::zero(); layout.total];
        let fill = |params: &mut [T], fan_in: usize, rng: &mut crate::rng::Rng| {
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            for p in params.iter_mut() {
                *p = real(rng.gen_range(-bound..bound));
            }
        };
        for l in &layout.hidden {
            fill(&mut params[l.weight..l.bias], l.fan_in, &mut rng);
            fill(&mut params[l.bias..l.gamma], l.fan_in, &mut rng);
            for g in &mut params[l.gamma..l.beta] {
                *g = T::one();
            }
        }
        let head_end = layout.head_weight + layout.head_fan_in;
        fill(&mut params[layout.head_weight..head_end], layout.head_fan_in, &mut rng);
        if let Some(b) = layout.head_bias {
            fill(&mut params[b..b + 1], layout.head_fan_in, &mut rng);
        }
        let running = config
            .hidden_dims
            .iter()
            .map(|&d| RunningStats {
                mean: vec![T::zero(); d],
                var: vec![T::one(); d],
            })
            .collect();
        Ok(MlpModel {
            layout_total: layout.total,
            config,
            params,
            running,
            mode: Mode::Train,
        })
    }

    /// Reassembles a model from stored parts.
    pub fn from_parts(config: MlpConfig, params: Vec<T>, running: Vec<RunningStats<T>>) -> Result<Self> {
        config.validate()?;
        let total = config.param_count();
        if params.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: params.len(),
            });
        }
        if running.len() != config.hidden_dims.len()
            || running
                .iter()
                .zip(&config.hidden_dims)
                .any(|(r, &d)| r.mean.len() != d || r.var.len() != d)
        {
            return Err(Error::InvalidParameter("running statistics do not match layers".into()));
        }
        Ok(MlpModel {
            layout_total: total,
            config,
            params,
            running,
            mode: Mode::Eval,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn running_stats(&self) -> &[RunningStats<T>] {
        &self.running
    }

    pub(crate) fn restore(&mut self, params: &[T], running: &[RunningStats<T>]) {
        self.params.copy_from_slice(params);
        self.running.clone_from_slice(running);
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn check_input(&self, inputs: &[T]) -> Result<usize> {
        let d = self.config.input_dim;
        if inputs.is_empty() {
            return Err(Error::Empty("model inputs"));
        }
        if !inputs.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: inputs.len() % d,
            });
        }
        Ok(inputs.len() / d)
    }

    /// Deterministic inference with running statistics and no dropout.
    pub fn predict(&self, inputs: &[T]) -> Result<Vec<T>> {
        let batch = self.check_input(inputs)?;
        let layout = self.config.layout();
        let eps = real::<T>(BN_EPS);
        let mut act = inputs.to_vec();
        for (l, stats) in layout.hidden.iter().zip(&self.running) {
            let mut z = self.linear(l, &act, batch);
            for row in z.chunks_mut(l.out) {
                for (k, x) in row.iter_mut().enumerate() {
                    let norm = (*x - stats.mean[k]) / (stats.var[k] + eps).sqrt();
                    let y = self.params[l.gamma + k] * norm + self.params[l.beta + k];
                    *x = y.max(T::zero());
                }
            }
            act = z;
        }
        Ok(self.head(&layout, &act, batch))
    }

    fn linear(&self, l: &HiddenLayout, input: &[T], batch: usize) -> Vec<T> {
        let w = &self.params[l.weight..l.bias];
        let b = &self.params[l.bias..l.gamma];
        let mut out = vec![T::zero(); batch * l.out];
        for (x, z) in input.chunks(l.fan_in).zip(out.chunks_mut(l.out)) {
            for (k, zk) in z.iter_mut().enumerate() {
                let row = &w[k * l.fan_in..(k + 1) * l.fan_in];
                let mut acc = b[k];
                for (wi, xi) in row.iter().zip(x) {
                    acc = acc + *wi * *xi;
                }
                *zk = acc;
            }
        }
        out
    }

    fn head(&self, layout: &Layout, act: &[T], batch: usize) -> Vec<T> {
        let w = &self.params[layout.head_weight..layout.head_weight + layout.head_fan_in];
        let bias = layout.head_bias.map(|b| self.params[b]).unwrap_or_else(T::zero);
        let mut out = Vec::with_capacity(batch);
        for x in act.chunks(layout.head_fan_in) {
            let mut acc = bias;
            for (wi, xi) in w.iter().zip(x) {
                acc = acc + *wi * *xi;
            }
            out.push(acc);
        }
        out
    }

    /// Training-mode forward pass using batch statistics and fresh dropout masks
    /// from `rng`. Running statistics are not touched; see [`Self::update_running_stats`].
    pub fn forward_train<R: Rng + ?Sized>(&self, inputs: &[T], rng: &mut R) -> Result<ForwardCache<T>> {
        let batch = self.check_input(inputs)?;
        let layout = self.config.layout();
        let eps = real::<T>(BN_EPS);
        let n = real::<T>(batch as f64);
        let p = self.config.dropout;
        let keep_scale = real::<T>(1.0 / (1.0 - p));
        let mut cache = ForwardCache {
            batch,
            inputs: Vec::new(),
            xhat: Vec::new(),
            inv_std: Vec::new(),
            batch_mean: Vec::new(),
            batch_var: Vec::new(),
            normalized: Vec::new(),
            masks: Vec::new(),
            output: Vec::new(),
        };
        let mut act = inputs.to_vec();
        for l in &layout.hidden {
            let z = self.linear(l, &act, batch);
            let mut mean = vec![T::zero(); l.out];
            let mut var = vec![T::zero(); l.out];
            for row in z.chunks(l.out) {
                for (m, x) in mean.iter_mut().zip(row) {
                    *m = *m + *x;
                }
            }
            for m in mean.iter_mut() {
                *m = *m / n;
            }
            for row in z.chunks(l.out) {
                for k in 0..l.out {
                    let d = row[k] - mean[k];
                    var[k] = var[k] + d * d;
                }
            }
            for v in var.iter_mut() {
                *v = *v / n;
            }
            let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
            let mut xhat = z;
            let mut normalized = vec![T::zero(); batch * l.out];
            let mut next = vec![T::zero(); batch * l.out];
            let mut mask = if p > 0.0 { vec![T::zero(); batch * l.out] } else { Vec::new() };
            for b in 0..batch {
                for k in 0..l.out {
                    let i = b * l.out + k;
                    xhat[i] = (xhat[i] - mean[k]) * inv_std[k];
                    let y = self.params[l.gamma + k] * xhat[i] + self.params[l.beta + k];
                    normalized[i] = y;
                    let mut a = y.max(T::zero());
                    if p > 0.0 {
                        let keep = if rng.gen::<f64>() >= p { keep_scale } else { T::zero() };
                        mask[i] = keep;
                        a = a * keep;
                    }
                    next[i] = a;
                }
            }
            cache.inputs.push(act);
            cache.xhat.push(xhat);
            cache.inv_std.push(inv_std);
            cache.batch_mean.push(mean);
            cache.batch_var.push(var);
            cache.normalized.push(normalized);
            cache.masks.push(mask);
            act = next;
        }
        cache.output = self.head(&layout, &act, batch);
        cache.inputs.push(act);
        Ok(cache)
    }

    /// Folds the batch statistics of a training pass into the running averages.
    pub fn update_running_stats(&mut self, cache: &ForwardCache<T>) {
        let m = real::<T>(BN_MOMENTUM);
        let keep = T::one() - m;
        let n = cache.batch as f64;
        let unbias = real::<T>(if cache.batch > 1 { n / (n - 1.0) } else { 1.0 });
        for (stats, (mean, var)) in self.running.iter_mut().zip(cache.batch_mean.iter().zip(&cache.batch_var)) {
            for k in 0..stats.mean.len() {
                stats.mean[k] = keep * stats.mean[k] + m * mean[k];
                stats.var[k] = keep * stats.var[k] + m * var[k] * unbias;
            }
        }
    }

    /// Gradient of the loss with respect to every parameter, given the loss
    /// gradient with respect to each output of the cached pass.
    pub fn backward(&self, cache: &ForwardCache<T>, d_output: &[T]) -> Vec<T> {
        let layout = self.config.layout();
        let batch = cache.batch;
        assert_eq!(d_output.len(), batch, "one output gradient per row");
        let mut grad = vec![T::zero(); self.layout_total];

        let head_in = cache.inputs.last().expect("head input cached");
        let fan = layout.head_fan_in;
        let hw = layout.head_weight;
        let mut d_act = vec![T::zero(); batch * fan];
        for b in 0..batch {
            let g = d_output[b];
            let x = &head_in[b * fan..(b + 1) * fan];
            for k in 0..fan {
                grad[hw + k] = grad[hw + k] + g * x[k];
                d_act[b * fan + k] = g * self.params[hw + k];
            }
            if let Some(bi) = layout.head_bias {
                grad[bi] = grad[bi] + g;
            }
        }

        let n = real::<T>(batch as f64);
        for (li, l) in layout.hidden.iter().enumerate().rev() {
            let xhat = &cache.xhat[li];
            let normalized = &cache.normalized[li];
            let mask = &cache.masks[li];
            let inv_std = &cache.inv_std[li];
            // Through dropout and ReLU.
            for i in 0..batch * l.out {
                if !mask.is_empty() {
                    d_act[i] = d_act[i] * mask[i];
                }
                if normalized[i] <= T::zero() {
                    d_act[i] = T::zero();
                }
            }
            // Batch norm.
            let mut sum_d = vec![T::zero(); l.out];
            let mut sum_dx = vec![T::zero(); l.out];
            for b in 0..batch {
                for k in 0..l.out {
                    let i = b * l.out + k;
                    grad[l.gamma + k] = grad[l.gamma + k] + d_act[i] * xhat[i];
                    grad[l.beta + k] = grad[l.beta + k] + d_act[i];
                    let dxhat = d_act[i] * self.params[l.gamma + k];
                    sum_d[k] = sum_d[k] + dxhat;
                    sum_dx[k] = sum_dx[k] + dxhat * xhat[i];
                }
            }
            let mut dz = vec![T::zero(); batch * l.out];
            for b in 0..batch {
                for k in 0..l.out {
                    let i = b * l.out + k;
                    let dxhat = d_act[i] * self.params[l.gamma + k];
                    dz[i] = inv_std[k] / n * (n * dxhat - sum_d[k] - xhat[i] * sum_dx[k]);
                }
            }
            // Linear.
            let input = &cache.inputs[li];
            let mut d_in = vec![T::zero(); batch * l.fan_in];
            for b in 0..batch {
                let x = &input[b * l.fan_in..(b + 1) * l.fan_in];
                let dxrow = &mut d_in[b * l.fan_in..(b + 1) * l.fan_in];
                for k in 0..l.out {
                    let g = dz[b * l.out + k];
                    if g == T::zero() {
                        continue;
                    }
                    grad[l.bias + k] = grad[l.bias + k] + g;
                    let wrow = l.weight + k * l.fan_in;
                    for i in 0..l.fan_in {
                        grad[wrow + i] = grad[wrow + i] + g * x[i];
                        dxrow[i] = dxrow[i] + g * self.params[wrow + i];
                    }
                }
            }
            d_act = d_in;
        }
        grad
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(seed: u64) -> MlpModel<f64> {
        let mut c = MlpConfig::new(3);
        c.hidden_dims = vec![4, 2];
        c.seed = seed;
        MlpModel::new(c).unwrap()
    }

    #[test]
    fn param_count_matches_layout() {
        let c = MlpConfig::new(960);
        // 960*100 + 3*100 + 100*50 + 3*50 + 50, no output bias
        assert_eq!(c.param_count(), 96_000 + 300 + 5_000 + 150 + 50);
        let mut with_bias = c.clone();
        with_bias.final_bias = true;
        assert_eq!(with_bias.param_count(), c.param_count() + 1);
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(toy(3).params(), toy(3).params());
        assert_ne!(toy(3).params(), toy(4).params());
    }

    #[test]
    fn eval_is_deterministic() {
        let m = toy(1);
        let x = [0.1, 0.2, 0.3, -1.0, 0.5, 2.0];
        assert_eq!(m.predict(&x).unwrap(), m.predict(&x).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        let m = toy(1);
        assert!(m.predict(&[]).is_err());
        assert!(m.predict(&[1.0, 2.0]).is_err());
        let mut c = MlpConfig::new(2);
        c.dropout = 1.0;
        assert!(MlpModel::<f32>::new(c).is_err());
    }

    #[test]
    fn running_stats_move_toward_batch() {
        let mut m = toy(2);
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.0, 0.0, 1.0];
        let mut rng = crate::rng::stream(0, 0);
        let cache = m.forward_train(&x, &mut rng).unwrap();
        m.update_running_stats(&cache);
        let stats = &m.running_stats()[0];
        for k in 0..4 {
            let expected = 0.1 * cache.batch_mean[0][k];
            assert!((stats.mean[k] - expected).abs() < 1e-12);
        }
    }
}
