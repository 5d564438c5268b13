//! Small deterministic neural-network engine: layers, the wavelet CNN, the
//! plain CNN baseline, SGD training and checkpoints.

pub mod baseline;
pub mod checkpoint;
pub mod layers;
pub mod train;
pub mod wcnn;

use crate::error::Result;
use layers::{cross_entropy, Param};

pub use baseline::{BaselineCnn, BaselineSchedule, BASELINE_INPUT_LEN};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, AnyModel, Checkpoint};
pub use layers::Tensor1d;
pub use train::{train, Optimizer, TrainConfig};
pub use wcnn::{WcnnInput, WcnnModel, WcnnSchedule, WcnnTrace};

/// A classifier the trainer can drive.
pub trait Network {
    type Input: Sync;

    fn class_count(&self) -> usize;

    fn probabilities(&self, input: &Self::Input) -> Result<Vec<f64>>;

    /// Runs forward and backward for one example, adding into every
    /// parameter's gradient. Returns the loss.
    fn accumulate(&mut self, input: &Self::Input, label: usize) -> Result<f64>;

    /// Parameters in declaration order.
    fn params(&self) -> Vec<&Param>;

    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn predict(&self, input: &Self::Input) -> Result<usize> {
        Ok(argmax(&self.probabilities(input)?))
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Outcome of comparing analytic and central finite-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub checked: usize,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
}

/// Absolute scale below which gradient differences are compared without
/// normalization.
pub const GRADIENT_FLOOR: f64 = 1e-6;

/// Checks every parameter of `model` on a single example with step `eps`.
///
/// The relative error of each entry is `|a - n| / max(|a|, |n|, GRADIENT_FLOOR)`.
pub fn gradient_check<N: Network + Clone>(
    model: &N,
    input: &N::Input,
    label: usize,
    eps: f64,
) -> Result<GradientCheck> {
    let mut analytic = model.clone();
    analytic.zero_grad();
    analytic.accumulate(input, label)?;
    let grads: Vec<Vec<f64>> = analytic.params().iter().map(|p| p.grad.clone()).collect();

    let mut probe = model.clone();
    let mut out = GradientCheck {
        checked: 0,
        max_relative_error: 0.0,
        max_absolute_error: 0.0,
    };
    for (group, grad) in grads.iter().enumerate() {
        for (i, a) in grad.iter().enumerate() {
            let original = probe.params()[group].value[i];
            probe.params_mut()[group].value[i] = original + eps;
            let plus = cross_entropy(&probe.probabilities(input)?, label)?;
            probe.params_mut()[group].value[i] = original - eps;
            let minus = cross_entropy(&probe.probabilities(input)?, label)?;
            probe.params_mut()[group].value[i] = original;
            let numeric = (plus - minus) / (2.0 * eps);
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(GRADIENT_FLOOR);
            out.checked += 1;
            out.max_absolute_error = out.max_absolute_error.max(abs);
            out.max_relative_error = out.max_relative_error.max(rel);
        }
    }
    Ok(out)
}
