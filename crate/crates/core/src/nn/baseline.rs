//! Plain 1-D CNN on a flat 384-sample vector, without wavelet concatenation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{
    cross_entropy, relu, relu_backward, softmax, softmax_cross_entropy_grad, Conv1d, Dense, Param, Tensor1d,
};
use super::Network;
use crate::error::{Error, Result};

pub const BASELINE_INPUT_LEN: usize = 384;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineSchedule {
    pub input_len: usize,
    pub conv1: usize,
    pub conv2: usize,
}

impl Default for BaselineSchedule {
    fn default() -> Self {
        Self {
            input_len: BASELINE_INPUT_LEN,
            conv1: 8,
            conv2: 16,
        }
    }
}

impl BaselineSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || !self.input_len.is_multiple_of(4) {
            return Err(Error::invalid(format!(
                "baseline input length {} must be a positive multiple of 4",
                self.input_len
            )));
        }
        if self.conv1 == 0 || self.conv2 == 0 {
            return Err(Error::invalid("baseline channel counts must be positive"));
        }
        Ok(())
    }

    pub fn flat_len(&self) -> usize {
        self.conv2 * self.input_len / 4
    }
}

/// Zero-pads or truncates `x` to `len` samples.
pub fn fit_length(x: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let n = x.len().min(len);
    out[..n].copy_from_slice(&x[..n]);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCnn {
    pub schedule: BaselineSchedule,
    pub class_count: usize,
    pub conv1: Conv1d,
    pub conv2: Conv1d,
    pub head: Dense,
}

#[derive(Debug, Clone)]
pub struct BaselineTrace {
    input: Tensor1d,
    h1: Tensor1d,
    h2: Tensor1d,
    pub probabilities: Vec<f64>,
}

impl BaselineTrace {
    pub fn lengths(&self) -> [usize; 3] {
        [self.input.length, self.h1.length, self.h2.length]
    }
}

impl BaselineCnn {
    pub fn zeros(schedule: BaselineSchedule, class_count: usize) -> Result<Self> {
        schedule.validate()?;
        if class_count == 0 {
            return Err(Error::invalid("class count must be positive"));
        }
        Ok(Self {
            conv1: Conv1d::zeros(1, schedule.conv1, 2),
            conv2: Conv1d::zeros(schedule.conv1, schedule.conv2, 2),
            head: Dense::zeros(schedule.flat_len(), class_count),
            schedule,
            class_count,
        })
    }

    pub fn new(schedule: BaselineSchedule, class_count: usize, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(schedule, class_count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &model.schedule;
        model.conv1 = Conv1d::init(1, s.conv1, 2, &mut rng);
        model.conv2 = Conv1d::init(s.conv1, s.conv2, 2, &mut rng);
        model.head = Dense::init(s.flat_len(), class_count, &mut rng);
        Ok(model)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<BaselineTrace> {
        if x.len() != self.schedule.input_len {
            return Err(Error::shape(format!(
                "baseline expects {} samples, got {}",
                self.schedule.input_len,
                x.len()
            )));
        }
        let input = Tensor1d::new(1, x.len(), x.to_vec())?;
        let h1 = relu(self.conv1.forward(&input)?);
        let h2 = relu(self.conv2.forward(&h1)?);
        let probabilities = softmax(&self.head.forward(&h2.data)?)?;
        Ok(BaselineTrace {
            input,
            h1,
            h2,
            probabilities,
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.probabilities)
    }
}

impl Network for BaselineCnn {
    type Input = Vec<f64>;

    fn class_count(&self) -> usize {
        self.class_count
    }

    fn probabilities(&self, input: &Vec<f64>) -> Result<Vec<f64>> {
        self.forward(input)
    }

    fn accumulate(&mut self, input: &Vec<f64>, label: usize) -> Result<f64> {
        let trace = self.forward_trace(input)?;
        let loss = cross_entropy(&trace.probabilities, label)?;
        let dlogits = softmax_cross_entropy_grad(&trace.probabilities, label);
        let dflat = self.head.backward(&trace.h2.data, &dlogits);
        let dh2 = Tensor1d::new(trace.h2.channels, trace.h2.length, dflat)?;
        let dh2 = relu_backward(&trace.h2, dh2);
        let dh1 = self.conv2.backward(&trace.h1, &dh2, true).expect("input gradient requested");
        let dh1 = relu_backward(&trace.h1, dh1);
        self.conv1.backward(&trace.input, &dh1, false);
        Ok(loss)
    }

    fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = self.conv1.params().into();
        out.extend(self.conv2.params());
        out.extend(self.head.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.conv1.params_mut().into();
        out.extend(self.conv2.params_mut());
        out.extend(self.head.params_mut());
        out
    }
}
