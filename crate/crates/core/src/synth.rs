//! Synthetic CSI amplitude recordings from a static + dynamic multipath model.
//!
//! Each stream sees the phasor sum of all scatterer paths. Static paths are
//! time invariant; dynamic paths have their amplitude modulated by a sum of
//! sinusoids inside an activity window. The stream amplitude is the magnitude
//! of that sum, scaled by a per-stream gain and perturbed by Gaussian noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ActivityLabel, CsiRecording, Dataset, StreamLayout};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Length of the raised-cosine taper at each end of an activity window.
const GATE_RAMP_S: f64 = 0.1;

/// Free-space received power `Pt Gt Gr λ² / ((4π)² d²)`.
pub fn friis_received_power(p_t: f64, g_t: f64, g_r: f64, lambda_m: f64, d_m: f64) -> Result<f64> {
    for (name, v) in [("p_t", p_t), ("g_t", g_t), ("g_r", g_r), ("lambda", lambda_m), ("distance", d_m)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(p_t * g_t * g_r * lambda_m * lambda_m / ((4.0 * PI).powi(2) * d_m * d_m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeComponent {
    pub frequency_hz: f64,
    pub depth: f64,
    pub phase_rad: f64,
}

/// Band-limited amplitude modulation active over a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub components: Vec<EnvelopeComponent>,
    pub active_window_s: (f64, f64),
}

impl Envelope {
    /// Multiplicative amplitude factor at time `t`.
    fn factor(&self, t: f64) -> f64 {
        let (start, end) = self.active_window_s;
        let gate = window_gate(t, start, end);
        if gate == 0.0 {
            return 1.0;
        }
        let s: f64 = self
            .components
            .iter()
            .map(|c| c.depth * (2.0 * PI * c.frequency_hz * (t - start) + c.phase_rad).sin())
            .sum();
        (1.0 + gate * s).max(0.0)
    }

    fn max_frequency(&self) -> f64 {
        self.components.iter().map(|c| c.frequency_hz).fold(0.0, f64::max)
    }
}

/// Unit gate on `[start, end]` with raised-cosine edges.
fn window_gate(t: f64, start: f64, end: f64) -> f64 {
    if t < start || t > end {
        return 0.0;
    }
    let ramp = GATE_RAMP_S.min(0.5 * (end - start));
    let edge = (t - start).min(end - t);
    if edge >= ramp {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge / ramp).cos()
    }
}

/// One propagation path. A path without modulation is static.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererPath {
    pub amplitude: f64,
    pub delay_s: f64,
    pub phase_rad: f64,
    /// Angle of arrival; sets the phase progression across antennas at
    /// half-wavelength spacing.
    pub aoa_rad: f64,
    pub modulation: Option<Envelope>,
}

impl ScattererPath {
    pub fn fixed(amplitude: f64, delay_s: f64, phase_rad: f64, aoa_rad: f64) -> Self {
        Self {
            amplitude,
            delay_s,
            phase_rad,
            aoa_rad,
            modulation: None,
        }
    }

    pub fn is_static(&self) -> bool {
        self.modulation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityProfile {
    pub label: ActivityLabel,
    pub paths: Vec<ScattererPath>,
    pub duration_s: f64,
}

impl ActivityProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::invalid(format!("profile duration {} must be positive", self.duration_s)));
        }
        if !self.paths.iter().any(ScattererPath::is_static) {
            return Err(Error::invalid("profile needs at least one static path"));
        }
        for p in &self.paths {
            if !(p.amplitude >= 0.0 && p.delay_s >= 0.0) {
                return Err(Error::invalid("path amplitude and delay must be >= 0"));
            }
            if let Some(env) = &p.modulation {
                let (s, e) = env.active_window_s;
                if !(0.0 <= s && s < e && e <= self.duration_s) {
                    return Err(Error::invalid(format!(
                        "activity window [{s}, {e}] does not fit a {} s profile",
                        self.duration_s
                    )));
                }
                for c in &env.components {
                    if !(c.frequency_hz > 0.0 && (0.0..=1.0).contains(&c.depth)) {
                        return Err(Error::invalid(format!(
                            "envelope component {c:?} needs frequency > 0 and depth in [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Union of all dynamic-path windows, in seconds.
    pub fn activity_window_s(&self) -> Option<(f64, f64)> {
        self.paths
            .iter()
            .filter_map(|p| p.modulation.as_ref().map(|m| m.active_window_s))
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate_hz: f64,
    pub layout: StreamLayout,
    pub noise_sigma: f64,
    pub per_stream_gain_jitter: f64,
    pub seed: u64,
    /// Frequency spacing between reported subcarriers.
    pub subcarrier_spacing_hz: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 30.0,
            layout: StreamLayout::default(),
            noise_sigma: 0.0,
            per_stream_gain_jitter: 0.0,
            seed: 0,
            // 30 reported groups spread over a 20 MHz channel.
            subcarrier_spacing_hz: 625e3,
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-recording seeds.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn synthesize_recording(profile: &ActivityProfile, config: &SynthConfig) -> Result<CsiRecording> {
    profile.validate()?;
    let fs = config.sample_rate_hz;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid(format!("sample rate {fs} must be positive")));
    }
    if !(config.noise_sigma >= 0.0 && config.per_stream_gain_jitter >= 0.0) {
        return Err(Error::invalid("noise_sigma and per_stream_gain_jitter must be >= 0"));
    }
    let nyquist = fs / 2.0;
    for env in profile.paths.iter().filter_map(|p| p.modulation.as_ref()) {
        if env.max_frequency() >= nyquist {
            return Err(Error::invalid(format!(
                "envelope frequency {} Hz is not below the {nyquist} Hz Nyquist limit",
                env.max_frequency()
            )));
        }
    }
    let t_len = (profile.duration_s * fs).round() as usize;
    let layout = config.layout;
    let n = layout.stream_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gains: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (1.0 + config.per_stream_gain_jitter * z).max(0.05)
        })
        .collect();

    // Per-stream unit phasors e^{-jθ} of every path.
    let n_paths = profile.paths.len();
    let mut phasors = vec![(0.0, 0.0); n * n_paths];
    for col in 0..n {
        let (tx, rx, k) = layout.triple(col);
        for (p, path) in profile.paths.iter().enumerate() {
            let theta = path.phase_rad
                + 2.0 * PI * k as f64 * config.subcarrier_spacing_hz * path.delay_s
                + PI * (tx + rx) as f64 * path.aoa_rad.sin();
            phasors[col * n_paths + p] = (theta.cos(), -theta.sin());
        }
    }

    let mut data = vec![0.0; t_len * n];
    let mut amps = vec![0.0; n_paths];
    for t in 0..t_len {
        let time = t as f64 / fs;
        for (a, path) in amps.iter_mut().zip(&profile.paths) {
            *a = path.amplitude * path.modulation.as_ref().map_or(1.0, |m| m.factor(time));
        }
        let row = &mut data[t * n..(t + 1) * n];
        for (col, out) in row.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (a, (c, s)) in amps.iter().zip(&phasors[col * n_paths..(col + 1) * n_paths]) {
                re += a * c;
                im += a * s;
            }
            let mut v = gains[col] * re.hypot(im);
            if config.noise_sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                v += config.noise_sigma * z;
            }
            *out = v.max(0.0);
        }
    }
    let streams = Matrix::from_vec(t_len, n, data)?;
    let mut rec = CsiRecording::new(fs, streams, layout, Some(profile.label))?;
    if let Some((s, e)) = profile.activity_window_s() {
        let start = (s * fs).round() as usize;
        let end = ((e * fs).round() as usize).min(t_len);
        if start < end {
            rec = rec.with_activity_window(start, end)?;
        }
    }
    Ok(rec)
}

/// Static environment shared by every built-in profile.
pub fn default_static_paths() -> Vec<ScattererPath> {
    vec![
        ScattererPath::fixed(1.0, 8e-9, 0.0, 0.3),
        ScattererPath::fixed(0.55, 22e-9, 1.1, -0.7),
        ScattererPath::fixed(0.4, 41e-9, 2.3, 1.0),
        ScattererPath::fixed(0.3, 67e-9, 4.0, -1.2),
    ]
}

/// Spectral signature of a built-in activity: `(frequency_hz, depth)` pairs.
pub fn preset_components(label: ActivityLabel) -> &'static [(f64, f64)] {
    match label.class_id() {
        0 => &[(2.3, 0.5), (1.15, 0.2)],
        1 => &[(2.1, 0.55)],
        2 => &[(1.9, 0.45), (0.95, 0.25)],
        3 => &[(1.75, 0.5), (2.45, 0.2)],
        4 => &[(1.6, 0.55)],
        5 => &[(1.45, 0.45), (2.3, 0.25)],
        6 => &[(1.3, 0.5), (0.65, 0.25)],
        7 => &[(1.2, 0.55)],
        8 => &[(1.05, 0.45), (2.1, 0.3)],
        9 => &[(0.95, 0.5), (1.9, 0.2)],
        10 => &[(0.85, 0.55)],
        11 => &[(0.8, 0.45), (1.6, 0.3)],
        12 => &[(0.75, 0.5), (2.2, 0.2)],
        13 => &[(0.7, 0.55)],
        14 => &[(0.65, 0.45), (1.3, 0.3)],
        _ => &[(0.6, 0.5), (1.8, 0.25)],
    }
}

/// Builds a profile whose dynamic paths all carry the given spectral
/// signature, with path geometry derived from the class id.
pub fn profile_from_components(
    label: ActivityLabel,
    components: &[(f64, f64)],
    duration_s: f64,
    active_window_s: (f64, f64),
) -> ActivityProfile {
    let c = f64::from(label.class_id());
    let mut paths = default_static_paths();
    for (i, scale) in [1.0, 0.8, 0.6].into_iter().enumerate() {
        let i = i as f64;
        let envelope = Envelope {
            components: components
                .iter()
                .map(|&(frequency_hz, depth)| EnvelopeComponent {
                    frequency_hz,
                    depth: depth * scale,
                    phase_rad: 1.7 * i,
                })
                .collect(),
            active_window_s,
        };
        paths.push(ScattererPath {
            amplitude: 0.3 - 0.05 * i,
            delay_s: (30.0 + 9.0 * i + 2.5 * c) * 1e-9,
            phase_rad: 0.9 * i + 0.35 * c,
            aoa_rad: -1.0 + 0.9 * i + 0.08 * c,
            modulation: Some(envelope),
        });
    }
    ActivityProfile {
        label,
        paths,
        duration_s,
    }
}

/// Built-in profile for one of the sixteen activities: a 7 s trace with the
/// activity in [2.0 s, 4.5 s].
pub fn preset_profile(label: ActivityLabel) -> ActivityProfile {
    profile_from_components(label, preset_components(label), 7.0, (2.0, 4.5))
}

/// Re-times a profile template: new duration, new activity window and fresh
/// random envelope phases.
fn jittered_profile(template: &ActivityProfile, rng: &mut ChaCha8Rng) -> ActivityProfile {
    let total = 7.0 + rng.random_range(0.0..0.5);
    let active = rng.random_range(2.0..3.0);
    let start = rng.random_range(1.0..(total - active - 1.0));
    let mut profile = template.clone();
    profile.duration_s = total;
    for env in profile.paths.iter_mut().filter_map(|p| p.modulation.as_mut()) {
        env.active_window_s = (start, start + active);
        for c in &mut env.components {
            c.phase_rad = rng.random_range(0.0..2.0 * PI);
        }
    }
    profile
}

/// `n_per_class` seeded variations of every profile, class by class.
///
/// Every sample lasts at least 7 s with 2-3 s of activity placed at a random
/// offset; envelope phases are redrawn per sample. Sample `i` of profile `c`
/// depends only on `(config.seed, c, i)`.
pub fn generate_dataset(profiles: &[ActivityProfile], n_per_class: usize, config: &SynthConfig) -> Result<Dataset> {
    if profiles.is_empty() {
        return Err(Error::invalid("profile list is empty"));
    }
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class must be at least 1"));
    }
    for p in profiles {
        p.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..profiles.len())
        .flat_map(|c| (0..n_per_class).map(move |i| (c, i)))
        .collect();
    let recordings = jobs
        .par_iter()
        .map(|&(c, i)| {
            let seed = mix_seed(config.seed, c as u64, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let profile = jittered_profile(&profiles[c], &mut rng);
            let cfg = SynthConfig {
                seed: rng.random(),
                ..config.clone()
            };
            let label = profile.label;
            synthesize_recording(&profile, &cfg).map(|r| {
                r.with_id(format!("c{:02}_{:03}", label.class_id(), i))
                    .with_subject(format!("synth{:02}", i % 10))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(recordings, ActivityLabel::COUNT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::stream_matrix;
    use crate::linalg::variance;

    fn label(id: u8) -> ActivityLabel {
        ActivityLabel::new(id).unwrap()
    }

    fn single_tone(freq: f64) -> ActivityProfile {
        let mut paths = default_static_paths();
        paths.push(ScattererPath {
            amplitude: 0.3,
            delay_s: 35e-9,
            phase_rad: 0.4,
            aoa_rad: 0.2,
            modulation: Some(Envelope {
                components: vec![EnvelopeComponent {
                    frequency_hz: freq,
                    depth: 0.5,
                    phase_rad: 0.0,
                }],
                active_window_s: (0.0, 8.0),
            }),
        });
        ActivityProfile {
            label: label(0),
            paths,
            duration_s: 8.0,
        }
    }

    #[test]
    fn friis_cases() {
        let p = friis_received_power(1.0, 1.0, 1.0, 0.06, 1.0).unwrap();
        let expected = 0.06f64.powi(2) / (16.0 * PI * PI);
        assert!((p - expected).abs() < 1e-18);
        assert!((p - 2.2797e-5).abs() < 1e-9);
        let far = friis_received_power(1.0, 1.0, 1.0, 0.06, 2.0).unwrap();
        assert!((p / far - 4.0).abs() < 1e-12);
        assert!(matches!(friis_received_power(1.0, 1.0, 1.0, 0.06, 0.0), Err(Error::InvalidValue(_))));
        assert!(friis_received_power(1.0, 1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn static_only_profile_is_constant() {
        let profile = ActivityProfile {
            label: label(3),
            paths: default_static_paths(),
            duration_s: 7.0,
        };
        let cfg = SynthConfig {
            per_stream_gain_jitter: 0.1,
            ..SynthConfig::default()
        };
        let rec = synthesize_recording(&profile, &cfg).unwrap();
        assert_eq!(rec.len(), 210);
        let m = stream_matrix(&rec);
        for j in 0..m.cols() {
            let col = m.column(j);
            assert!(col.iter().all(|&v| v == col[0]));
        }
        assert_eq!(rec.activity_window(), None);
    }

    #[test]
    fn dominant_bin_matches_envelope_frequency() {
        let rec = synthesize_recording(&single_tone(8.0), &SynthConfig::default()).unwrap();
        let fs = rec.sample_rate_hz();
        for col in [0, 45, 89] {
            let x = stream_matrix(&rec).column(col);
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let n = x.len();
            let power = |k: usize| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let w = 2.0 * PI * (k * t) as f64 / n as f64;
                    re += (v - mean) * w.cos();
                    im -= (v - mean) * w.sin();
                }
                re * re + im * im
            };
            let best = (1..n / 2).max_by(|&a, &b| power(a).total_cmp(&power(b))).unwrap();
            let bin_hz = fs / n as f64;
            assert!((best as f64 * bin_hz - 8.0).abs() <= bin_hz + 1e-9, "stream {col}: {best}");
        }
    }

    #[test]
    fn nyquist_violation_rejected() {
        assert!(matches!(
            synthesize_recording(&single_tone(15.0), &SynthConfig::default()),
            Err(Error::InvalidValue(_))
        ));
    }

    #[test]
    fn synthesis_is_seeded() {
        let cfg = SynthConfig {
            noise_sigma: 0.05,
            per_stream_gain_jitter: 0.05,
            seed: 11,
            ..SynthConfig::default()
        };
        let p = preset_profile(label(9));
        assert_eq!(synthesize_recording(&p, &cfg).unwrap(), synthesize_recording(&p, &cfg).unwrap());
        let other = SynthConfig { seed: 12, ..cfg };
        assert_ne!(synthesize_recording(&p, &cfg).unwrap(), synthesize_recording(&p, &other).unwrap());
    }

    #[test]
    fn variance_is_confined_to_activity_window() {
        let rec = synthesize_recording(&preset_profile(label(0)), &SynthConfig::default()).unwrap();
        assert_eq!(rec.activity_window(), Some((60, 135)));
        let m = stream_matrix(&rec);
        for j in [0, 17, 50, 88] {
            let col = m.column(j);
            let inside = variance(&col[60..135]);
            let before = variance(&col[..60]);
            let after = variance(&col[135..]);
            assert!(inside > 0.0);
            assert!(before < 0.1 * inside && after < 0.1 * inside, "stream {j}");
        }
    }

    #[test]
    fn dataset_counts_and_windows() {
        let profiles: Vec<_> = [0, 2, 7, 9, 11, 15].iter().map(|&c| preset_profile(label(c))).collect();
        let ds = generate_dataset(&profiles, 30, &SynthConfig::default()).unwrap();
        assert_eq!(ds.len(), 180);
        for p in &profiles {
            let count = ds.recordings().iter().filter(|r| r.label() == Some(p.label)).count();
            assert_eq!(count, 30);
        }
        for r in ds.recordings() {
            assert!(r.duration_s() >= 7.0 - 1e-9);
            let (s, e) = r.activity_window().unwrap();
            let active = (e - s) as f64 / r.sample_rate_hz();
            assert!((2.0 - 0.05..=3.0 + 0.05).contains(&active), "{active}");
        }
        assert!(generate_dataset(&[], 3, &SynthConfig::default()).is_err());
    }

    #[test]
    fn dataset_is_reproducible() {
        let profiles = vec![preset_profile(label(1)), preset_profile(label(4))];
        let cfg = SynthConfig {
            noise_sigma: 0.02,
            seed: 5,
            ..SynthConfig::default()
        };
        assert_eq!(
            generate_dataset(&profiles, 4, &cfg).unwrap(),
            generate_dataset(&profiles, 4, &cfg).unwrap()
        );
    }
}
