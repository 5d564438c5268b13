//! Wi-Fi CSI human activity recognition.
//!
//! Recordings of CSI amplitudes are fused into principal components,
//! smoothed with a Savitzky-Golay filter, segmented around the activity,
//! decomposed with a discrete wavelet transform and classified by a small
//! wavelet-augmented 1-D CNN.

pub mod data;
pub mod error;
pub mod fusion;
pub mod linalg;
pub mod nn;
pub mod pipeline;
pub mod segment;
pub mod sgolay;
pub mod synth;
pub mod wavelet;

pub use data::{ActivityLabel, CsiRecording, Dataset, StreamLayout};
pub use error::{Error, FormatError, Result};
pub use fusion::{principal_components, PrincipalComponents};
pub use linalg::Matrix;
pub use segment::{adaptive_segment, adaptive_segment_series, Segment, SegmentParams};
pub use sgolay::{apply_sg, design_sg_filter, EdgeMode, SgFilter};
pub use wavelet::{dwt_pyramid, WaveletFamily, WaveletPyramid, WaveletSpec};
