//! Adam optimizer with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators for one parameter tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Optimizer state across all parameter tensors of a model, keyed by the
/// order in which the tensors are visited each step (which is fixed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    slots: Vec<Moments>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            slots: Vec::new(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update across the full parameter list. `params` and `grads`
    /// must line up one-to-one and keep the same order between calls.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) {
        assert_eq!(
            params.len(),
            grads.len(),
            "parameter/gradient list length mismatch"
        );
        if self.slots.is_empty() {
            self.slots = params
                .iter()
                .map(|p| Moments {
                    m: vec![0.0; p.len()],
                    v: vec![0.0; p.len()],
                })
                .collect();
        }
        assert_eq!(
            self.slots.len(),
            params.len(),
            "optimizer slot count changed"
        );
        self.step += 1;
        let t = self.step as i32;
        let c = &self.config;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for ((param, grad), slot) in params.iter_mut().zip(grads).zip(&mut self.slots) {
            assert_eq!(
                param.len(),
                slot.m.len(),
                "parameter size changed under optimizer"
            );
            for (i, (pv, &gv)) in param.data_mut().iter_mut().zip(grad.data()).enumerate() {
                let m = c.beta1 * slot.m[i] + (1.0 - c.beta1) * gv;
                let v = c.beta2 * slot.v[i] + (1.0 - c.beta2) * gv * gv;
                slot.m[i] = m;
                slot.v[i] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                *pv -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With bias correction the very first Adam update has magnitude
        // lr * g / (|g| + eps) ~= lr * sign(g).
        let mut p = Tensor::from_vec(&[2], vec![1.0, -1.0]);
        let g = Tensor::from_vec(&[2], vec![0.5, -0.25]);
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut [&mut p], &[&g]);
        assert!((p.data()[0] - (1.0 - 0.001)).abs() < 1e-6);
        assert!((p.data()[1] - (-1.0 + 0.001)).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_leaves_parameters_alone() {
        let mut p = Tensor::from_vec(&[3], vec![0.3, -0.7, 2.0]);
        let before = p.data().to_vec();
        let g = Tensor::zeros(&[3]);
        let mut opt = Adam::new(AdamConfig::default());
        for _ in 0..5 {
            opt.step(&mut [&mut p], &[&g]);
        }
        assert_eq!(p.data(), &before[..]);
    }

    #[test]
    fn converges_on_quadratic_bowl() {
        // Minimize f(x) = x^2 from x = 3; gradient is 2x.
        let mut p = Tensor::from_vec(&[1], vec![3.0]);
        let mut opt = Adam::new(AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        });
        for _ in 0..2000 {
            let g = Tensor::from_vec(&[1], vec![2.0 * p.data()[0]]);
            opt.step(&mut [&mut p], &[&g]);
        }
        assert!(p.data()[0].abs() < 1e-3, "ended at {}", p.data()[0]);
    }

    #[test]
    fn state_is_per_parameter() {
        // Two tensors with different gradient histories get different moments.
        let mut a = Tensor::from_vec(&[1], vec![0.0]);
        let mut b = Tensor::from_vec(&[1], vec![0.0]);
        let big = Tensor::from_vec(&[1], vec![10.0]);
        let small = Tensor::from_vec(&[1], vec![1e-4]);
        let mut opt = Adam::new(AdamConfig::default());
        for _ in 0..10 {
            opt.step(&mut [&mut a, &mut b], &[&big, &small]);
        }
        // Both move toward negative territory but stay distinct and finite.
        assert!(a.data()[0] < 0.0 && b.data()[0] < 0.0);
        assert!(a.data()[0].is_finite() && b.data()[0].is_finite());
    }
}
