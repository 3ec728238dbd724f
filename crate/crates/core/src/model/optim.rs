//! Decoupled-weight-decay Adam and the cosine learning-rate schedule.

use std::f64::consts::PI;

use super::head::{FusionHead, Grads};

/// `floor + (max − floor)·(1 + cos(π·t/T))/2`.
pub fn cosine_lr(step: usize, total_steps: usize, lr_max: f64, floor: f64) -> f64 {
    let frac = if total_steps == 0 { 1.0 } else { step.min(total_steps) as f64 / total_steps as f64 };
    floor + (lr_max - floor) * (1.0 + (PI * frac).cos()) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

/// First and second moment estimates for every parameter group.
#[derive(Clone, Debug)]
pub struct AdamW {
    cfg: AdamWConfig,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(head: &FusionHead, cfg: AdamWConfig) -> Self {
        let sizes: Vec<usize> = Grads::zeros_like(head).groups().iter().map(|g| g.len()).collect();
        Self {
            cfg,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One update at learning rate `lr`; decay applies only to groups
    /// flagged for it.
    pub fn step(&mut self, head: &mut FusionHead, grads: &Grads, lr: f64) {
        self.step += 1;
        let AdamWConfig { beta1, beta2, eps, weight_decay } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        for (gi, ((params, decay), grad)) in head.groups_mut().into_iter().zip(grads.groups()).enumerate() {
            let (m, v) = (&mut self.m[gi], &mut self.v[gi]);
            for j in 0..params.len() {
                let g = grad[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * g;
                v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
                if decay {
                    params[j] *= 1.0 - lr * weight_decay;
                }
                params[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
            }
        }
    }
}
