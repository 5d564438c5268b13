//! Wavelet-augmented 1-D CNN.
//!
//! ```text
//! window (C x L) ─ stem conv s1 ─ relu
//!   ─ stage conv s2 ─ relu ─ ⊕ approx₁ (C x L/2)
//!   ─ stage conv s2 ─ relu ─ ⊕ approx₂ (C x L/4)
//!   ─ stage conv s2 ─ relu ─ ⊕ approx₃ (C x L/8)
//!   ─ post conv s1 ─ relu ─ global average pool ─ dense ─ softmax
//! ```
//!
//! `⊕` is channel concatenation. Every stride-2 stage halves the length, so
//! the stage-`j` feature map lines up with the level-`j` DWT approximation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{
    concat_channels, global_avg_pool, global_avg_pool_backward, relu, relu_backward, softmax,
    softmax_cross_entropy_grad, split_channels, cross_entropy, Conv1d, Dense, Param, Tensor1d,
};
use super::Network;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::wavelet::WaveletPyramid;

/// Guard added to the variance when standardizing approximation channels.
pub const STANDARDIZE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WcnnSchedule {
    pub input_channels: usize,
    pub wavelet_channels: usize,
    pub stem: usize,
    pub stages: Vec<usize>,
    pub post: usize,
}

impl Default for WcnnSchedule {
    fn default() -> Self {
        Self {
            input_channels: 2,
            wavelet_channels: 2,
            stem: 16,
            stages: vec![32, 64, 128],
            post: 128,
        }
    }
}

impl WcnnSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.stem == 0 || self.post == 0 || self.stages.is_empty() {
            return Err(Error::invalid(format!("degenerate WCNN schedule {self:?}")));
        }
        if self.stages.contains(&0) {
            return Err(Error::invalid("stage widths must be positive"));
        }
        Ok(())
    }

    /// Input channel count of stage `i`.
    pub fn stage_input(&self, i: usize) -> usize {
        if i == 0 {
            self.stem
        } else {
            self.stages[i - 1] + self.wavelet_channels
        }
    }

    pub fn post_input(&self) -> usize {
        self.stages.last().copied().unwrap_or(self.stem) + self.wavelet_channels
    }
}

/// Network input: the raw component window and standardized approximations.
#[derive(Debug, Clone, PartialEq)]
pub struct WcnnInput {
    pub window: Tensor1d,
    pub wavelets: Vec<Tensor1d>,
}

impl WcnnInput {
    /// Pairs a channels x L window with its pyramid, standardizing each
    /// approximation channel to zero mean and unit variance.
    pub fn new(window: &Matrix, pyramid: &WaveletPyramid) -> Result<Self> {
        let (channels, len) = window.shape();
        if pyramid.channels() != channels {
            return Err(Error::shape(format!(
                "pyramid has {} channels but the window has {channels}",
                pyramid.channels()
            )));
        }
        let mut wavelets = Vec::with_capacity(pyramid.levels());
        for j in 1..=pyramid.levels() {
            let level = pyramid.level(j);
            if level.cols() << j != len {
                return Err(Error::shape(format!(
                    "pyramid level {j} has length {} but a window of {len} needs {}",
                    level.cols(),
                    len >> j
                )));
            }
            let mut data = Vec::with_capacity(level.rows() * level.cols());
            for c in 0..level.rows() {
                data.extend(standardize(level.row(c)));
            }
            wavelets.push(Tensor1d::new(level.rows(), level.cols(), data)?);
        }
        Ok(Self {
            window: Tensor1d::new(channels, len, window.as_slice().to_vec())?,
            wavelets,
        })
    }
}

pub fn standardize(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = 1.0 / (var + STANDARDIZE_EPS).sqrt();
    x.iter().map(|v| (v - mean) * scale).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WcnnModel {
    pub schedule: WcnnSchedule,
    pub class_count: usize,
    pub stem: Conv1d,
    pub stages: Vec<Conv1d>,
    pub post: Conv1d,
    pub head: Dense,
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct WcnnTrace {
    stem_out: Tensor1d,
    stage_out: Vec<Tensor1d>,
    concat: Vec<Tensor1d>,
    post_out: Tensor1d,
    pooled: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl WcnnTrace {
    /// `(conv output length, approximation length)` at every concatenation point.
    pub fn concat_lengths(&self) -> Vec<(usize, usize)> {
        self.stage_out
            .iter()
            .zip(&self.concat)
            .map(|(s, c)| (s.length, c.length))
            .collect()
    }

    /// Channel counts after each concatenation.
    pub fn concat_channels(&self) -> Vec<usize> {
        self.concat.iter().map(|c| c.channels).collect()
    }

    pub fn stem_shape(&self) -> (usize, usize) {
        self.stem_out.shape()
    }

    pub fn post_shape(&self) -> (usize, usize) {
        self.post_out.shape()
    }
}

impl WcnnModel {
    pub fn zeros(schedule: WcnnSchedule, class_count: usize) -> Result<Self> {
        schedule.validate()?;
        if class_count == 0 {
            return Err(Error::invalid("class count must be positive"));
        }
        let stages = (0..schedule.stages.len())
            .map(|i| Conv1d::zeros(schedule.stage_input(i), schedule.stages[i], 2))
            .collect();
        Ok(Self {
            stem: Conv1d::zeros(schedule.input_channels, schedule.stem, 1),
            stages,
            post: Conv1d::zeros(schedule.post_input(), schedule.post, 1),
            head: Dense::zeros(schedule.post, class_count),
            schedule,
            class_count,
        })
    }

    /// Seeded fan-in scaled uniform initialization.
    pub fn new(schedule: WcnnSchedule, class_count: usize, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(schedule, class_count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &model.schedule;
        model.stem = Conv1d::init(s.input_channels, s.stem, 1, &mut rng);
        model.stages = (0..s.stages.len())
            .map(|i| Conv1d::init(s.stage_input(i), s.stages[i], 2, &mut rng))
            .collect();
        model.post = Conv1d::init(s.post_input(), s.post, 1, &mut rng);
        model.head = Dense::init(s.post, class_count, &mut rng);
        Ok(model)
    }

    pub fn forward_trace(&self, input: &WcnnInput) -> Result<WcnnTrace> {
        if input.wavelets.len() != self.stages.len() {
            return Err(Error::shape(format!(
                "model has {} stages but the input carries {} pyramid levels",
                self.stages.len(),
                input.wavelets.len()
            )));
        }
        if !input.window.length.is_multiple_of(1 << self.stages.len()) {
            return Err(Error::shape(format!(
                "window length {} is not divisible by 2^{}",
                input.window.length,
                self.stages.len()
            )));
        }
        let stem_out = relu(self.stem.forward(&input.window)?);
        let mut stage_out = Vec::with_capacity(self.stages.len());
        let mut concat: Vec<Tensor1d> = Vec::with_capacity(self.stages.len());
        for (i, (stage, wavelet)) in self.stages.iter().zip(&input.wavelets).enumerate() {
            let x = if i == 0 { &stem_out } else { &concat[i - 1] };
            let f = relu(stage.forward(x)?);
            let c = concat_channels(&f, wavelet)?;
            stage_out.push(f);
            concat.push(c);
        }
        let post_out = relu(self.post.forward(concat.last().expect("at least one stage"))?);
        let pooled = global_avg_pool(&post_out)?;
        let probabilities = softmax(&self.head.forward(&pooled)?)?;
        Ok(WcnnTrace {
            stem_out,
            stage_out,
            concat,
            post_out,
            pooled,
            probabilities,
        })
    }

    /// Class probabilities for a channels x L window and its pyramid.
    pub fn forward(&self, window: &Matrix, pyramid: &WaveletPyramid) -> Result<Vec<f64>> {
        Ok(self.forward_trace(&WcnnInput::new(window, pyramid)?)?.probabilities)
    }

    fn backward(&mut self, input: &WcnnInput, trace: &WcnnTrace, label: usize) {
        let dlogits = softmax_cross_entropy_grad(&trace.probabilities, label);
        let dpooled = self.head.backward(&trace.pooled, &dlogits);
        let dpost = relu_backward(&trace.post_out, global_avg_pool_backward(&dpooled, trace.post_out.length));
        let last = self.stages.len() - 1;
        let mut dconcat = self
            .post
            .backward(&trace.concat[last], &dpost, true)
            .expect("input gradient requested");
        for i in (0..self.stages.len()).rev() {
            let (dfeat, _dwavelet) = split_channels(&dconcat, trace.stage_out[i].channels);
            let dpre = relu_backward(&trace.stage_out[i], dfeat);
            let stage_in = if i == 0 { &trace.stem_out } else { &trace.concat[i - 1] };
            dconcat = self.stages[i]
                .backward(stage_in, &dpre, true)
                .expect("input gradient requested");
        }
        let dstem = relu_backward(&trace.stem_out, dconcat);
        self.stem.backward(&input.window, &dstem, false);
    }
}

impl Network for WcnnModel {
    type Input = WcnnInput;

    fn class_count(&self) -> usize {
        self.class_count
    }

    fn probabilities(&self, input: &WcnnInput) -> Result<Vec<f64>> {
        Ok(self.forward_trace(input)?.probabilities)
    }

    fn accumulate(&mut self, input: &WcnnInput, label: usize) -> Result<f64> {
        let trace = self.forward_trace(input)?;
        let loss = cross_entropy(&trace.probabilities, label)?;
        self.backward(input, &trace, label);
        Ok(loss)
    }

    fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = self.stem.params().into();
        for s in &self.stages {
            out.extend(s.params());
        }
        out.extend(self.post.params());
        out.extend(self.head.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.stem.params_mut().into();
        for s in &mut self.stages {
            out.extend(s.params_mut());
        }
        out.extend(self.post.params_mut());
        out.extend(self.head.params_mut());
        out
    }
}
