use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta::derive_seed;

/// LayerNorm variance offset.
pub const LN_EPS: f64 = 1e-5;
/// Probability floor inside the log of the cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    /// Logistic regression on the gated descriptor alone (no backbone block).
    DgmeOnly,
    /// Backbone embedding concatenated with the gated descriptor.
    Fusion,
}

impl std::str::FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dgme-only" | "dgme_only" => Ok(HeadKind::DgmeOnly),
            "fusion" => Ok(HeadKind::Fusion),
            other => Err(Error::Config(format!("unknown head {other:?} (expected dgme-only or fusion)"))),
        }
    }
}

impl std::fmt::Display for HeadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HeadKind::DgmeOnly => "dgme-only",
            HeadKind::Fusion => "fusion",
        })
    }
}

/// `logits = W·[f_swin, α·LN(f_dgme)] + b`. `W` is row-major with one row of
/// `backbone_dim + dgme_dim` weights per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionHead {
    pub class_names: Vec<String>,
    pub backbone_dim: usize,
    pub dgme_dim: usize,
    pub alpha: f64,
    pub ln_gain: Vec<f64>,
    pub ln_bias: Vec<f64>,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// Gradients with the same layout as [`FusionHead`]'s parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub alpha: f64,
    pub ln_gain: Vec<f64>,
    pub ln_bias: Vec<f64>,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// One training or inference example. `swin` is empty for the descriptor-only
/// head.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub swin: Vec<f64>,
    pub dgme: Vec<f64>,
    pub label: usize,
}

/// `gain ⊙ (x − mean) / √(var + eps) + bias`, variance with divisor D.
pub fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64], eps: f64) -> Vec<f64> {
    let xhat = standardize(x, eps);
    xhat.iter().zip(gain).zip(bias).map(|((h, g), b)| g * h + b).collect()
}

fn standardize(x: &[f64], eps: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    x.iter().map(|v| (v - mean) * inv).collect()
}

/// Softmax with the maximum logit subtracted first.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// `−ln max(p[class], 1e-12)`.
pub fn cross_entropy(probs: &[f64], class: usize) -> Result<f64> {
    let p = probs.get(class).ok_or(Error::Dimension {
        expected: probs.len(),
        actual: class,
        context: "class index out of range",
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Index of the largest probability; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl FusionHead {
    /// `α = 1`, unit gain, zero bias, `W ~ U(±1/√(C+D))`, `b = 0`.
    pub fn init(class_names: Vec<String>, backbone_dim: usize, dgme_dim: usize, seed: u64) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::Config("a classifier needs at least 2 classes".into()));
        }
        if dgme_dim < 2 {
            return Err(Error::Config("descriptor dimension must be >= 2".into()));
        }
        let width = backbone_dim + dgme_dim;
        let bound = 1.0 / (width as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "head/init"));
        let k = class_names.len();
        let w = (0..k * width).map(|_| rng.random_range(-bound..bound)).collect();
        Ok(Self {
            class_names,
            backbone_dim,
            dgme_dim,
            alpha: 1.0,
            ln_gain: vec![1.0; dgme_dim],
            ln_bias: vec![0.0; dgme_dim],
            w,
            b: vec![0.0; k],
        })
    }

    pub fn kind(&self) -> HeadKind {
        if self.backbone_dim == 0 {
            HeadKind::DgmeOnly
        } else {
            HeadKind::Fusion
        }
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    fn width(&self) -> usize {
        self.backbone_dim + self.dgme_dim
    }

    fn check(&self, swin: &[f64], dgme: &[f64]) -> Result<()> {
        if swin.len() != self.backbone_dim {
            return Err(Error::Dimension {
                expected: self.backbone_dim,
                actual: swin.len(),
                context: "backbone embedding",
            });
        }
        if dgme.len() != self.dgme_dim {
            return Err(Error::Dimension { expected: self.dgme_dim, actual: dgme.len(), context: "descriptor" });
        }
        Ok(())
    }

    fn logits_from(&self, z: &[f64]) -> Vec<f64> {
        let width = self.width();
        self.w
            .chunks_exact(width)
            .zip(&self.b)
            .map(|(row, b)| row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    fn fused(&self, swin: &[f64], xhat: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.width());
        z.extend_from_slice(swin);
        z.extend(xhat.iter().zip(&self.ln_gain).zip(&self.ln_bias).map(|((h, g), b)| self.alpha * (g * h + b)));
        z
    }

    pub fn logits(&self, swin: &[f64], dgme: &[f64]) -> Result<Vec<f64>> {
        self.check(swin, dgme)?;
        let xhat = standardize(dgme, LN_EPS);
        Ok(self.logits_from(&self.fused(swin, &xhat)))
    }

    /// Class probabilities.
    pub fn forward(&self, swin: &[f64], dgme: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(swin, dgme)?))
    }

    pub fn predict(&self, swin: &[f64], dgme: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(swin, dgme)?))
    }

    /// Mean cross-entropy over `batch`.
    pub fn loss(&self, batch: &[Example]) -> Result<f64> {
        let mut total = 0.0;
        for ex in batch {
            total += cross_entropy(&self.forward(&ex.swin, &ex.dgme)?, ex.label)?;
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean cross-entropy over `batch` and its analytic gradient.
    pub fn loss_and_grad(&self, batch: &[Example]) -> Result<(f64, Grads)> {
        if batch.is_empty() {
            return Err(Error::Empty("gradient batch"));
        }
        let (k, c, width) = (self.num_classes(), self.backbone_dim, self.width());
        let mut g = Grads::zeros_like(self);
        let mut total = 0.0;
        for ex in batch {
            self.check(&ex.swin, &ex.dgme)?;
            if ex.label >= k {
                return Err(Error::Dimension { expected: k, actual: ex.label, context: "class index out of range" });
            }
            let xhat = standardize(&ex.dgme, LN_EPS);
            let z = self.fused(&ex.swin, &xhat);
            let probs = softmax(&self.logits_from(&z));
            total += cross_entropy(&probs, ex.label)?;

            let mut dz = vec![0.0; width];
            for (class, p) in probs.iter().enumerate() {
                let dl = p - f64::from(u8::from(class == ex.label));
                let row = &self.w[class * width..(class + 1) * width];
                for ((gw, zi), (d, wi)) in
                    g.w[class * width..(class + 1) * width].iter_mut().zip(&z).zip(dz.iter_mut().zip(row))
                {
                    *gw += dl * zi;
                    *d += dl * wi;
                }
                g.b[class] += dl;
            }
            for (j, h) in xhat.iter().enumerate() {
                let dzj = dz[c + j];
                g.alpha += dzj * (self.ln_gain[j] * h + self.ln_bias[j]);
                let dn = self.alpha * dzj;
                g.ln_gain[j] += dn * h;
                g.ln_bias[j] += dn;
            }
        }
        let n = batch.len() as f64;
        g.scale(1.0 / n);
        Ok((total / n, g))
    }

    /// Parameter groups in a fixed order with their weight-decay flag.
    pub(crate) fn groups_mut(&mut self) -> [(&mut [f64], bool); 5] {
        [
            (std::slice::from_mut(&mut self.alpha), false),
            (&mut self.ln_gain, false),
            (&mut self.ln_bias, false),
            (&mut self.w, true),
            (&mut self.b, false),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite()
            && [&self.ln_gain, &self.ln_bias, &self.w, &self.b].iter().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

impl Grads {
    pub fn zeros_like(head: &FusionHead) -> Self {
        Self {
            alpha: 0.0,
            ln_gain: vec![0.0; head.dgme_dim],
            ln_bias: vec![0.0; head.dgme_dim],
            w: vec![0.0; head.w.len()],
            b: vec![0.0; head.b.len()],
        }
    }

    fn scale(&mut self, s: f64) {
        self.alpha *= s;
        for v in [&mut self.ln_gain, &mut self.ln_bias, &mut self.w, &mut self.b] {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub(crate) fn groups(&self) -> [&[f64]; 5] {
        [std::slice::from_ref(&self.alpha), &self.ln_gain, &self.ln_bias, &self.w, &self.b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn layer_norm_examples() {
        assert_eq!(layer_norm(&[3.0; 4], &[1.0; 4], &[0.0; 4], LN_EPS), vec![0.0; 4]);
        let y = layer_norm(&[1.0, -1.0], &[1.0; 2], &[0.0; 2], 0.0);
        assert_eq!(y, vec![1.0, -1.0]);
        let x = [0.3, -2.0, 5.5, 0.1, 1.7];
        let y = layer_norm(&x, &[1.0; 5], &[0.0; 5], LN_EPS);
        assert!(y.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let mut head = FusionHead::init(names(5), 3, 4, 0).unwrap();
        head.w.iter_mut().for_each(|w| *w = 0.0);
        let p = head.forward(&[1.0, 2.0, 3.0], &[0.1, 0.5, 0.2, 0.9]).unwrap();
        for v in p {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn alpha_zero_ignores_descriptor() {
        let mut head = FusionHead::init(names(3), 2, 4, 1).unwrap();
        head.alpha = 0.0;
        let a = head.forward(&[0.5, -1.0], &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = head.forward(&[0.5, -1.0], &[0.9, 0.0, 0.0, 0.7]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_descriptor_matches_alpha_zero_up_to_bias() {
        let head = FusionHead::init(names(3), 2, 4, 2).unwrap();
        let mut gated = head.clone();
        gated.alpha = 0.0;
        // zero ln_bias makes the constant-descriptor contribution vanish
        let a = head.forward(&[0.5, -1.0], &[0.25; 4]).unwrap();
        let b = gated.forward(&[0.5, -1.0], &[0.7; 4]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy(&[0.2; 5], 3).unwrap() - 5f64.ln()).abs() < 1e-12);
        assert_eq!(cross_entropy(&[0.0, 1.0], 1).unwrap(), 0.0);
        assert!((cross_entropy(&[0.0, 1.0], 0).unwrap() - 27.631021115928547).abs() < 1e-9);
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[1.0, 2.0, -3.0]);
        let b = softmax(&[1001.0, 1002.0, 997.0]);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let head = FusionHead::init(names(2), 2, 3, 0).unwrap();
        assert!(head.forward(&[1.0], &[0.0; 3]).is_err());
        assert!(head.forward(&[1.0, 1.0], &[0.0; 4]).is_err());
        assert!(FusionHead::init(names(1), 0, 3, 0).is_err());
    }
}
