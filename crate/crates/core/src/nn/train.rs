//! Mini-batch stochastic gradient descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Optimizer {
    Sgd,
    Momentum { beta: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Momentum { beta: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 60,
            batch_size: 16,
            seed: 0,
            optimizer: Optimizer::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::invalid(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if let Optimizer::Momentum { beta } = self.optimizer {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::invalid(format!("momentum {beta} must lie in [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Trains `model` in place and returns the mean loss of every epoch.
///
/// The example order of each epoch is a seeded shuffle; gradients are summed
/// in that order and averaged per batch before the update.
pub fn train<N: Network>(model: &mut N, inputs: &[N::Input], labels: &[usize], cfg: &TrainConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if inputs.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= model.class_count()) {
        return Err(Error::invalid(format!(
            "label {bad} outside the model's {} classes",
            model.class_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut velocity: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            model.zero_grad();
            for &i in chunk {
                let loss = model.accumulate(&inputs[i], labels[i])?;
                if !loss.is_finite() {
                    return Err(Error::numerical(format!(
                        "non-finite loss at epoch {epoch}, batch {batch}"
                    )));
                }
                total += loss;
            }
            let scale = 1.0 / chunk.len() as f64;
            for (p, v) in model.params_mut().into_iter().zip(velocity.iter_mut()) {
                match cfg.optimizer {
                    Optimizer::Sgd => {
                        for (w, g) in p.value.iter_mut().zip(&p.grad) {
                            *w -= cfg.learning_rate * g * scale;
                        }
                    }
                    Optimizer::Momentum { beta } => {
                        for ((w, g), m) in p.value.iter_mut().zip(&p.grad).zip(v.iter_mut()) {
                            *m = beta * *m + g * scale;
                            *w -= cfg.learning_rate * *m;
                        }
                    }
                }
            }
        }
        let mean = total / inputs.len() as f64;
        if !mean.is_finite() {
            return Err(Error::numerical(format!("non-finite mean loss at epoch {epoch}")));
        }
        curve.push(mean);
    }
    model.zero_grad();
    Ok(curve)
}
