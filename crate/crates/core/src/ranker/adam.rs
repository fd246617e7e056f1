use alloc::vec;
use alloc::vec::Vec;

use super::mlp::Real;

/// Adam with coupled L2 weight decay (the decay term is added to the gradient).
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    pub fn new(n_params: usize, learning_rate: f64, weight_decay: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let c = |x: f64| T::from_f64(x).expect("finite optimizer constant");
        let (b1, b2) = (c(self.beta1), c(self.beta2));
        let (one_b1, one_b2) = (c(1.0 - self.beta1), c(1.0 - self.beta2));
        let bc1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        let step = c(self.learning_rate / bc1);
        let bc2_sqrt = c(libm::sqrt(bc2));
        let eps = c(self.eps);
        let wd = c(self.weight_decay);
        for i in 0..params.len() {
            let g = grad[i] + wd * params[i];
            self.m[i] = b1 * self.m[i] + one_b1 * g;
            self.v[i] = b2 * self.v[i] + one_b2 * g * g;
            let denom = self.v[i].sqrt() / bc2_sqrt + eps;
            params[i] = params[i] - step * self.m[i] / denom;
        }
    }
}
