//! Recording → feature example: fusion, smoothing, segmentation, windowing
//! and wavelet decomposition.

use rayon::prelude::*;

use super::config::{DwtSection, PipelineConfig, SgSection};
use crate::data::{stream_matrix, ActivityLabel, CsiRecording};
use crate::error::{Error, Result};
use crate::fusion::principal_components;
use crate::linalg::Matrix;
use crate::nn::baseline::fit_length;
use crate::nn::wcnn::standardize;
use crate::nn::WcnnInput;
use crate::segment::{adaptive_segment_series, Segment, SegmentParams};
use crate::sgolay::{apply_sg, design_sg_filter};
use crate::wavelet::{dwt_pyramid, WaveletPyramid};

/// Minimum stream count a recording needs before fusion.
pub const MIN_STREAMS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub indices: Vec<usize>,
    pub sg: SgSection,
    pub seg: SegmentParams,
    pub dwt: DwtSection,
    pub window_len: usize,
    pub baseline_len: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self::from(&PipelineConfig::default())
    }
}

impl From<&PipelineConfig> for PreprocessConfig {
    fn from(cfg: &PipelineConfig) -> Self {
        Self {
            indices: cfg.fusion.indices.clone(),
            sg: cfg.sg.clone(),
            seg: cfg.seg.clone(),
            dwt: cfg.dwt.clone(),
            window_len: cfg.model.window_len,
            baseline_len: cfg.baseline.input_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub recording_id: String,
    pub segment: Segment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExample {
    /// channels x window_len.
    pub window: Matrix,
    pub pyramid: WaveletPyramid,
    /// Input of the plain CNN baseline.
    pub flat: Vec<f64>,
    pub label: Option<ActivityLabel>,
    pub provenance: Provenance,
}

impl FeatureExample {
    pub fn wcnn_input(&self) -> Result<WcnnInput> {
        WcnnInput::new(&self.window, &self.pyramid)
    }

    /// Deepest-level approximation coefficients of every channel, concatenated.
    pub fn knn_features(&self) -> Vec<f64> {
        self.pyramid.deepest_flat()
    }
}

/// Fits `x` to `len` samples: linear interpolation when longer, zero padding
/// at the end when shorter.
pub fn fit_window(x: &[f64], len: usize) -> Vec<f64> {
    let n = x.len();
    if n <= len {
        return fit_length(x, len);
    }
    if len == 1 {
        return vec![x[0]];
    }
    let step = (n - 1) as f64 / (len - 1) as f64;
    (0..len)
        .map(|i| {
            let pos = i as f64 * step;
            let lo = (pos.floor() as usize).min(n - 2);
            let frac = pos - lo as f64;
            x[lo] + frac * (x[lo + 1] - x[lo])
        })
        .collect()
}

fn recording_name(recording: &CsiRecording) -> String {
    recording.id().unwrap_or("<unnamed>").to_string()
}

pub fn preprocess(recording: &CsiRecording, cfg: &PreprocessConfig) -> Result<FeatureExample> {
    let id = recording_name(recording);
    preprocess_inner(recording, cfg, &id).map_err(|e| e.in_recording(id))
}

fn preprocess_inner(recording: &CsiRecording, cfg: &PreprocessConfig, id: &str) -> Result<FeatureExample> {
    if recording.stream_count() < MIN_STREAMS {
        return Err(Error::invalid(format!(
            "fusion needs at least {MIN_STREAMS} streams, recording has {}",
            recording.stream_count()
        )));
    }
    let pcs = principal_components(stream_matrix(recording), &cfg.indices)?;
    let filter = design_sg_filter(cfg.sg.half_width, cfg.sg.poly_order)?;
    let smoothed = (0..pcs.channel_count())
        .map(|j| apply_sg(&pcs.component(j), &filter, cfg.sg.edge_mode))
        .collect::<Result<Vec<_>>>()?;
    let segment = adaptive_segment_series(&smoothed, &cfg.seg)?;

    let channels: Vec<Vec<f64>> = smoothed
        .iter()
        .map(|s| standardize(&s[segment.start..segment.end]))
        .collect();
    let rows: Vec<Vec<f64>> = channels.iter().map(|c| fit_window(c, cfg.window_len)).collect();
    let window = Matrix::from_rows(&rows)?;
    let pyramid = dwt_pyramid(&window, cfg.dwt.levels, &cfg.dwt.spec())?;
    let flat = fit_length(&channels.concat(), cfg.baseline_len);
    Ok(FeatureExample {
        window,
        pyramid,
        flat,
        label: recording.label(),
        provenance: Provenance {
            recording_id: id.to_string(),
            segment,
        },
    })
}

/// Preprocesses recordings in parallel; the output keeps the input order and
/// the first failure (in that order) is returned.
pub fn preprocess_all(recordings: &[CsiRecording], cfg: &PreprocessConfig) -> Result<Vec<FeatureExample>> {
    recordings.par_iter().map(|r| preprocess(r, cfg)).collect::<Vec<_>>().into_iter().collect()
}
