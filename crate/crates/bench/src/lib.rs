//! Deterministic fixtures shared by the benchmarks.

use csiwave::nn::{WcnnInput, WcnnModel, WcnnSchedule};
use csiwave::synth::{preset_profile, synthesize_recording, SynthConfig};
use csiwave::{dwt_pyramid, ActivityLabel, CsiRecording, Matrix, WaveletSpec};

/// Pseudo-random but reproducible value in [-1, 1].
fn wobble(i: usize, salt: usize) -> f64 {
    ((i as f64 * 12.9898 + salt as f64 * 78.233).sin() * 43_758.545).fract()
}

/// `n` x `n` symmetric matrix with a full spectrum.
pub fn symmetric(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = wobble(i * n + j, 1);
            m.as_mut_slice()[i * n + j] = v;
            m.as_mut_slice()[j * n + i] = v;
        }
    }
    m
}

/// `t` x `n` nonnegative amplitude matrix.
pub fn streams(t: usize, n: usize) -> Matrix {
    let data = (0..t * n).map(|i| 1.0 + 0.5 * wobble(i, 2)).collect();
    Matrix::from_vec(t, n, data).expect("shape")
}

pub fn signal(len: usize) -> Vec<f64> {
    (0..len).map(|i| (i as f64 * 0.21).sin() + 0.1 * wobble(i, 3)).collect()
}

/// Two-channel window with its three-level pyramid.
pub fn wcnn_input(len: usize, spec: &WaveletSpec) -> WcnnInput {
    let window = Matrix::from_rows(&[signal(len), signal(len + 7)[7..].to_vec()]).expect("shape");
    let pyramid = dwt_pyramid(&window, 3, spec).expect("pyramid");
    WcnnInput::new(&window, &pyramid).expect("input")
}

pub fn wcnn_model(classes: usize) -> WcnnModel {
    WcnnModel::new(WcnnSchedule::default(), classes, 1).expect("model")
}

pub fn recording(class_id: u8, index: usize) -> CsiRecording {
    let label = ActivityLabel::new(class_id).expect("label");
    let cfg = SynthConfig {
        seed: 7 + index as u64,
        ..SynthConfig::default()
    };
    synthesize_recording(&preset_profile(label), &cfg).expect("synthesis")
}
