//! Experiment configuration, read from TOML. Unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ActivityLabel, StreamLayout};
use crate::error::{Error, Result};
use crate::nn::{BaselineSchedule, TrainConfig, WcnnSchedule};
use crate::segment::SegmentParams;
use crate::sgolay::EdgeMode;
use crate::synth::{preset_profile, profile_from_components, ActivityProfile, SynthConfig};
use crate::wavelet::{WaveletFamily, WaveletSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub label: u8,
    /// `[frequency_hz, depth]` pairs of the envelope.
    pub components: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub seed: u64,
    pub samples_per_class: usize,
    /// Built-in activity presets to generate.
    pub classes: Vec<u8>,
    pub sample_rate_hz: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_subcarriers: usize,
    pub noise_sigma: f64,
    pub per_stream_gain_jitter: f64,
    /// Custom spectral signatures, generated in addition to `classes`.
    pub profiles: Vec<ProfileSpec>,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            seed: 7,
            samples_per_class: 30,
            classes: vec![1, 4, 7, 10, 13, 15],
            sample_rate_hz: 30.0,
            n_tx: 1,
            n_rx: 3,
            n_subcarriers: 30,
            noise_sigma: 0.02,
            per_stream_gain_jitter: 0.05,
            profiles: Vec::new(),
        }
    }
}

impl SynthSection {
    pub fn synth_config(&self) -> Result<SynthConfig> {
        Ok(SynthConfig {
            sample_rate_hz: self.sample_rate_hz,
            layout: StreamLayout::new(self.n_tx, self.n_rx, self.n_subcarriers)?,
            noise_sigma: self.noise_sigma,
            per_stream_gain_jitter: self.per_stream_gain_jitter,
            seed: self.seed,
            ..SynthConfig::default()
        })
    }

    /// Presets followed by custom profiles, in the order listed.
    pub fn activity_profiles(&self) -> Result<Vec<ActivityProfile>> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for &id in &self.classes {
            let label = ActivityLabel::new(id)?;
            seen.push(id);
            out.push(preset_profile(label));
        }
        for spec in &self.profiles {
            let label = ActivityLabel::new(spec.label)?;
            if spec.components.is_empty() {
                return Err(Error::Config(format!("profile for class {} has no components", spec.label)));
            }
            seen.push(spec.label);
            let comps: Vec<(f64, f64)> = spec.components.iter().map(|c| (c[0], c[1])).collect();
            let template = preset_profile(label);
            let window = template.activity_window_s().expect("presets are dynamic");
            out.push(profile_from_components(label, &comps, template.duration_s, window));
        }
        let mut sorted = seen.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seen.len() {
            return Err(Error::Config(format!("class listed twice among {seen:?}")));
        }
        if out.is_empty() {
            return Err(Error::Config("synth needs at least one class or profile".into()));
        }
        for p in &out {
            p.validate()?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionSection {
    /// One-based principal component indices.
    pub indices: Vec<usize>,
}

impl Default for FusionSection {
    fn default() -> Self {
        Self { indices: vec![2, 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgSection {
    pub half_width: usize,
    pub poly_order: usize,
    pub edge_mode: EdgeMode,
}

impl Default for SgSection {
    fn default() -> Self {
        Self {
            half_width: 7,
            poly_order: 3,
            edge_mode: EdgeMode::Mirror,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwtSection {
    pub levels: usize,
    pub family: WaveletFamily,
}

impl Default for DwtSection {
    fn default() -> Self {
        Self {
            levels: 3,
            family: WaveletFamily::Haar,
        }
    }
}

impl DwtSection {
    pub fn spec(&self) -> WaveletSpec {
        WaveletSpec::new(self.family)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub window_len: usize,
    pub stem: usize,
    pub stages: Vec<usize>,
    pub post: usize,
    pub init_seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let s = WcnnSchedule::default();
        Self {
            window_len: 256,
            stem: s.stem,
            stages: s.stages,
            post: s.post,
            init_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub enabled: bool,
    pub input_len: usize,
    pub conv1: usize,
    pub conv2: usize,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let s = BaselineSchedule::default();
        Self {
            enabled: true,
            input_len: s.input_len,
            conv1: s.conv1,
            conv2: s.conv2,
        }
    }
}

impl BaselineSection {
    pub fn schedule(&self) -> BaselineSchedule {
        BaselineSchedule {
            input_len: self.input_len,
            conv1: self.conv1,
            conv2: self.conv2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub test_fraction: f64,
    pub seed: u64,
    /// Restrict to one subject before splitting.
    pub subject: Option<String>,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 1,
            subject: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnSection {
    pub k: usize,
}

impl Default for KnnSection {
    fn default() -> Self {
        Self { k: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub synth: SynthSection,
    pub fusion: FusionSection,
    pub sg: SgSection,
    pub seg: SegmentParams,
    pub dwt: DwtSection,
    pub model: ModelSection,
    pub baseline: BaselineSection,
    pub train: TrainConfig,
    pub split: SplitSection,
    pub knn: KnnSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn wcnn_schedule(&self) -> WcnnSchedule {
        WcnnSchedule {
            input_channels: self.fusion.indices.len(),
            wavelet_channels: self.fusion.indices.len(),
            stem: self.model.stem,
            stages: self.model.stages.clone(),
            post: self.model.post,
        }
    }

    /// Cross-section consistency, checked before any work starts.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if self.fusion.indices.is_empty() || self.fusion.indices.contains(&0) {
            return Err(Error::Config(format!(
                "fusion.indices {:?} must be non-empty and one-based",
                self.fusion.indices
            )));
        }
        crate::sgolay::design_sg_filter(self.sg.half_width, self.sg.poly_order).map_err(cfg_err)?;
        self.seg.validate().map_err(cfg_err)?;
        if self.dwt.levels == 0 {
            return Err(Error::Config("dwt.levels must be positive".into()));
        }
        if self.model.stages.len() != self.dwt.levels {
            return Err(Error::Config(format!(
                "model.stages has {} entries but dwt.levels is {}",
                self.model.stages.len(),
                self.dwt.levels
            )));
        }
        if self.model.window_len == 0 || !self.model.window_len.is_multiple_of(1 << self.dwt.levels) {
            return Err(Error::Config(format!(
                "model.window_len {} must be a positive multiple of 2^{}",
                self.model.window_len, self.dwt.levels
            )));
        }
        self.wcnn_schedule().validate().map_err(cfg_err)?;
        self.baseline.schedule().validate().map_err(cfg_err)?;
        self.train.validate().map_err(cfg_err)?;
        if !(0.0..1.0).contains(&self.split.test_fraction) {
            return Err(Error::Config(format!(
                "split.test_fraction {} must lie in [0, 1)",
                self.split.test_fraction
            )));
        }
        if self.knn.k == 0 {
            return Err(Error::Config("knn.k must be at least 1".into()));
        }
        Ok(())
    }
}
