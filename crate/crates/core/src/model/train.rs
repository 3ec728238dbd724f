use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::head::{Example, FusionHead, HeadKind};
use super::optim::{cosine_lr, AdamW, AdamWConfig};
use crate::error::{Error, Result};
use crate::eval::ConfusionMatrix;
use crate::meta::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_max: f64,
    pub weight_decay: f64,
    pub adamw_betas: (f64, f64),
    pub adamw_eps: f64,
    pub cosine_floor: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 12,
            batch_size: 32,
            lr_max: 1e-3,
            weight_decay: 0.01,
            adamw_betas: (0.9, 0.999),
            adamw_eps: 1e-8,
            cosine_floor: 1e-5,
            early_stop_patience: 3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let (b1, b2) = self.adamw_betas;
        let checks = [
            (self.epochs >= 1, "epochs must be >= 1"),
            (self.batch_size >= 1, "batch size must be >= 1"),
            (self.lr_max > 0.0, "lr_max must be > 0"),
            (self.cosine_floor > 0.0, "cosine floor must be > 0"),
            (self.weight_decay >= 0.0, "weight decay must be >= 0"),
            (self.adamw_eps > 0.0, "adamw eps must be > 0"),
            (b1 > 0.0 && b1 < 1.0 && b2 > 0.0 && b2 < 1.0, "betas must lie in (0, 1)"),
            (self.early_stop_patience >= 1, "patience must be >= 1"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).into())),
            None => Ok(()),
        }
    }
}

/// One row per completed epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    /// Optimizer steps taken so far.
    pub step: usize,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    /// Mean per-example loss over the epoch.
    pub train_loss: f64,
    pub val_macro_f1: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters after the best validation epoch.
    pub head: FusionHead,
    pub best_epoch: usize,
    pub log: Vec<LogRow>,
}

/// Macro F1 of `head` on `examples`.
pub fn macro_f1(head: &FusionHead, examples: &[Example]) -> Result<f64> {
    let truth: Vec<usize> = examples.iter().map(|e| e.label).collect();
    let predicted = examples.iter().map(|e| head.predict(&e.swin, &e.dgme)).collect::<Result<Vec<_>>>()?;
    Ok(ConfusionMatrix::from_indices(head.class_names.clone(), &truth, &predicted).report().macro_f1)
}

/// Mini-batch AdamW under a cosine schedule spanning all planned steps, with
/// early stopping on validation macro F1.
pub fn train(
    kind: HeadKind,
    class_names: Vec<String>,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let first = train_set.first().ok_or(Error::Empty("training set"))?;
    if val_set.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let backbone_dim = match kind {
        HeadKind::DgmeOnly => 0,
        HeadKind::Fusion if first.swin.is_empty() => {
            return Err(Error::Config("fusion head needs backbone embeddings".into()))
        }
        HeadKind::Fusion => first.swin.len(),
    };
    let mut head = FusionHead::init(class_names, backbone_dim, first.dgme.len(), cfg.seed)?;
    let strip = |set: &[Example]| -> Vec<Example> {
        set.iter()
            .map(|e| Example {
                swin: if kind == HeadKind::DgmeOnly { Vec::new() } else { e.swin.clone() },
                dgme: e.dgme.clone(),
                label: e.label,
            })
            .collect()
    };
    let (train_set, val_set) = (strip(train_set), strip(val_set));

    let batches_per_epoch = train_set.len().div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * batches_per_epoch;
    let mut opt = AdamW::new(
        &head,
        AdamWConfig {
            beta1: cfg.adamw_betas.0,
            beta2: cfg.adamw_betas.1,
            eps: cfg.adamw_eps,
            weight_decay: cfg.weight_decay,
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "train/shuffle"));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let (mut step, mut lr) = (0, cfg.lr_max);
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, FusionHead)> = None;
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set[i].clone()));
            let (loss, grads) = head.loss_and_grad(&batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}, step {step}")));
            }
            lr = cosine_lr(step, total_steps, cfg.lr_max, cfg.cosine_floor);
            opt.step(&mut head, &grads, lr);
            step += 1;
            loss_sum += loss * chunk.len() as f64;
        }
        if !head.is_finite() {
            return Err(Error::NonFinite(format!("parameters after epoch {epoch}")));
        }
        let val_f1 = macro_f1(&head, &val_set)?;
        log.push(LogRow {
            epoch,
            step,
            lr,
            train_loss: loss_sum / train_set.len() as f64,
            val_macro_f1: val_f1,
            alpha: head.alpha,
        });
        if best.as_ref().is_none_or(|(f, _, _)| val_f1 > *f) {
            best = Some((val_f1, epoch, head.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                break;
            }
        }
    }
    let (_, best_epoch, head) = best.expect("at least one epoch ran");
    Ok(TrainOutcome { head, best_epoch, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize, seed: u64) -> Vec<Example> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = i % 2;
                let mut dgme: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..0.3)).collect();
                dgme[label] += 1.0;
                Example { swin: Vec::new(), dgme, label }
            })
            .collect()
    }

    fn names() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn separable_toy_reaches_full_training_accuracy() {
        let (tr, va) = (separable(64, 1), separable(16, 2));
        let out = train(HeadKind::DgmeOnly, names(), &tr, &va, &TrainConfig::default()).unwrap();
        let acc = tr.iter().filter(|e| out.head.predict(&e.swin, &e.dgme).unwrap() == e.label).count();
        assert_eq!(acc, tr.len());
        let cfg = TrainConfig { early_stop_patience: 100, ..TrainConfig::default() };
        let full = train(HeadKind::DgmeOnly, names(), &tr, &va, &cfg).unwrap();
        assert_eq!(full.log.len(), 12);
        assert!(full.log[11].train_loss < full.log[0].train_loss);
        assert_ne!(full.log[11].alpha, 1.0);
    }

    #[test]
    fn same_seed_same_result() {
        let (tr, va) = (separable(40, 3), separable(10, 4));
        let cfg = TrainConfig::default();
        let a = train(HeadKind::DgmeOnly, names(), &tr, &va, &cfg).unwrap();
        let b = train(HeadKind::DgmeOnly, names(), &tr, &va, &cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.head, b.head);
    }

    #[test]
    fn early_stopping_returns_best_epoch() {
        let (tr, va) = (separable(40, 5), separable(10, 6));
        let out = train(HeadKind::DgmeOnly, names(), &tr, &va, &TrainConfig::default()).unwrap();
        let best = out.log.iter().map(|r| r.val_macro_f1).fold(f64::MIN, f64::max);
        assert_eq!(out.log[out.best_epoch - 1].val_macro_f1, best);
        assert!(out.log.len() <= 12);
        assert_eq!(macro_f1(&out.head, &va).unwrap(), best);
    }

    #[test]
    fn bad_inputs_rejected() {
        let tr = separable(8, 1);
        assert!(train(HeadKind::DgmeOnly, names(), &[], &tr, &TrainConfig::default()).is_err());
        assert!(train(HeadKind::DgmeOnly, names(), &tr, &[], &TrainConfig::default()).is_err());
        assert!(train(HeadKind::Fusion, names(), &tr, &tr, &TrainConfig::default()).is_err());
        let cfg = TrainConfig { adamw_betas: (1.0, 0.9), ..TrainConfig::default() };
        assert!(train(HeadKind::DgmeOnly, names(), &tr, &tr, &cfg).is_err());
    }
}
