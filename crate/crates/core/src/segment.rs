//! Adaptive sliding-window activity segmentation.
//!
//! A variance profile `V` is computed over a sliding window of each component
//! and summed across components; a second sliding window averages it into `M`.
//! Samples where `M >= T = p·max(M)` are kept and the longest such run is the
//! activity. `p` is adjusted geometrically until the run's length, normalized
//! by the recording length, falls strictly inside `(t1, t2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::PrincipalComponents;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentParams {
    pub var_window: usize,
    pub mean_window: usize,
    pub t1: f64,
    pub t2: f64,
    pub p_init: f64,
    pub p_growth: f64,
    pub max_iters: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            var_window: 15,
            mean_window: 8,
            t1: 0.3,
            t2: 0.5,
            p_init: 0.1,
            p_growth: 1.15,
            max_iters: 64,
        }
    }
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        if self.var_window < 2 || self.mean_window < 1 {
            return Err(Error::invalid("var_window must be >= 2 and mean_window >= 1"));
        }
        if !(0.0 < self.t1 && self.t1 < self.t2 && self.t2 < 1.0) {
            return Err(Error::invalid(format!(
                "need 0 < t1 < t2 < 1, got t1 = {}, t2 = {}",
                self.t1, self.t2
            )));
        }
        if !(0.0 < self.p_init && self.p_init < 1.0) {
            return Err(Error::invalid(format!("p_init {} must be in (0, 1)", self.p_init)));
        }
        if !(self.p_growth > 1.0 && self.p_growth.is_finite()) {
            return Err(Error::invalid(format!("p_growth {} must be > 1", self.p_growth)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        Ok(())
    }

    /// Shift from profile index to the centre of its sample span.
    fn offset(&self) -> usize {
        (self.var_window + self.mean_window) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub normalized_length_t: f64,
    pub p_used: f64,
    pub threshold_t: f64,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Intersection over union with another `[start, end)` span.
    pub fn iou(&self, start: usize, end: usize) -> f64 {
        let inter = self.end.min(end).saturating_sub(self.start.max(start));
        let union = self.end.max(end) - self.start.min(start);
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Population variance of every length-`w` window, stride 1.
pub fn windowed_variance(x: &[f64], w: usize) -> Result<Vec<f64>> {
    if w < 2 {
        return Err(Error::invalid(format!("variance window {w} must be >= 2")));
    }
    if w > x.len() {
        return Err(Error::invalid(format!(
            "variance window {w} exceeds sequence length {}",
            x.len()
        )));
    }
    Ok(x.windows(w)
        .map(|win| {
            // Shifting by the first sample keeps constant windows at exactly zero.
            let origin = win[0];
            let mean = win.iter().map(|v| v - origin).sum::<f64>() / w as f64;
            win.iter().map(|v| (v - origin - mean).powi(2)).sum::<f64>() / w as f64
        })
        .collect())
}

pub fn windowed_mean(v: &[f64], w: usize) -> Result<Vec<f64>> {
    if w == 0 || w > v.len() {
        return Err(Error::invalid(format!(
            "mean window {w} must be in 1..={}",
            v.len()
        )));
    }
    Ok(v.windows(w).map(|win| win.iter().sum::<f64>() / w as f64).collect())
}

/// Smoothed joint variance profile `M` of several equal-length series.
pub fn activity_profile(series: &[Vec<f64>], params: &SegmentParams) -> Result<Vec<f64>> {
    let first = series.first().ok_or_else(|| Error::invalid("no series to segment"))?;
    let mut joint = windowed_variance(first, params.var_window)?;
    for s in &series[1..] {
        if s.len() != first.len() {
            return Err(Error::shape("component series differ in length"));
        }
        for (acc, v) in joint.iter_mut().zip(windowed_variance(s, params.var_window)?) {
            *acc += v;
        }
    }
    windowed_mean(&joint, params.mean_window)
}

/// Longest run of `profile[i] >= threshold` as `[start, end)`; the earliest wins ties.
pub fn longest_run_at_or_above(profile: &[f64], threshold: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for (i, &v) in profile.iter().chain(std::iter::once(&f64::NEG_INFINITY)).enumerate() {
        match (v >= threshold, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    best
}

struct Probe {
    segment: Segment,
}

fn probe(profile: &[f64], peak: f64, p: f64, total: usize, params: &SegmentParams) -> Probe {
    let threshold = p * peak;
    let (a, b) = longest_run_at_or_above(profile, threshold).unwrap_or((0, 0));
    let offset = params.offset();
    let start = (a + offset).min(total);
    let end = (b + offset).min(total).max(start);
    Probe {
        segment: Segment {
            start,
            end,
            normalized_length_t: (end - start) as f64 / total as f64,
            p_used: p,
            threshold_t: threshold,
        },
    }
}

/// Activity segment of the (already denoised) components.
pub fn adaptive_segment(pcs: &PrincipalComponents, params: &SegmentParams) -> Result<Segment> {
    let series: Vec<Vec<f64>> = (0..pcs.channel_count()).map(|j| pcs.component(j)).collect();
    adaptive_segment_series(&series, params)
}

pub fn adaptive_segment_series(series: &[Vec<f64>], params: &SegmentParams) -> Result<Segment> {
    params.validate()?;
    let total = series.first().map_or(0, Vec::len);
    if total < params.var_window + params.mean_window {
        return Err(Error::invalid(format!(
            "series of length {total} is shorter than var_window + mean_window = {}",
            params.var_window + params.mean_window
        )));
    }
    let profile = activity_profile(series, params)?;
    let peak = profile.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::NoActivity);
    }
    let inside = |s: &Segment| params.t1 < s.normalized_length_t && s.normalized_length_t < params.t2;
    let distance = |s: &Segment| {
        if s.normalized_length_t >= params.t2 {
            s.normalized_length_t - params.t2
        } else {
            params.t1 - s.normalized_length_t
        }
    };

    let mut p = params.p_init;
    let mut best: Option<Segment> = None;
    // +1 raises p (shorter runs), -1 lowers it.
    let mut direction = 0i32;
    for _ in 0..params.max_iters {
        let seg = probe(&profile, peak, p, total, params).segment;
        if inside(&seg) {
            // Try one more step up and keep it if the run is still admissible and shorter.
            let next_p = p * params.p_growth;
            if next_p < 1.0 {
                let next = probe(&profile, peak, next_p, total, params).segment;
                if inside(&next) && next.normalized_length_t < seg.normalized_length_t {
                    return Ok(next);
                }
            }
            return Ok(seg);
        }
        if best.is_none_or(|b| distance(&seg) < distance(&b)) {
            best = Some(seg);
        }
        let step = if seg.normalized_length_t >= params.t2 { 1 } else { -1 };
        if direction != 0 && step != direction {
            // The admissible band lies between two consecutive probes.
            break;
        }
        direction = step;
        p = if step > 0 { p * params.p_growth } else { p / params.p_growth };
        if p >= 1.0 {
            break;
        }
    }
    let best = best.expect("at least one probe ran");
    Err(Error::SegmentationFailed {
        best_p: best.p_used,
        best_t: best.normalized_length_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burst(total: usize, start: usize, end: usize, freq: f64) -> Vec<f64> {
        (0..total)
            .map(|t| {
                if (start..end).contains(&t) {
                    (2.0 * std::f64::consts::PI * freq * t as f64 / 30.0).sin()
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn variance_cases() {
        assert_eq!(windowed_variance(&[0.1; 20], 5).unwrap(), vec![0.0; 16]);
        assert_eq!(windowed_variance(&[0.0, 0.0, 3.0, 3.0], 2).unwrap(), vec![0.0, 2.25, 0.0]);
        assert!(matches!(windowed_variance(&[1.0, 2.0], 3), Err(Error::InvalidValue(_))));
        assert!(windowed_variance(&[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn mean_cases() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(windowed_mean(&v, 1).unwrap(), v.to_vec());
        assert_eq!(windowed_mean(&v, 2).unwrap(), vec![1.5, 2.5]);
        assert!(windowed_mean(&v, 4).is_err());
    }

    #[test]
    fn longest_run_picks_dominant_burst() {
        let m = [0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        assert_eq!(longest_run_at_or_above(&m, 0.5), Some((4, 7)));
        assert_eq!(longest_run_at_or_above(&[1.0, 1.0], 0.5), Some((0, 2)));
        assert_eq!(longest_run_at_or_above(&[0.0, 0.0], 0.5), None);
    }

    #[test]
    fn constant_components_have_no_activity() {
        let series = vec![vec![0.4; 210], vec![-1.3; 210]];
        assert!(matches!(
            adaptive_segment_series(&series, &SegmentParams::default()),
            Err(Error::NoActivity)
        ));
    }

    #[test]
    fn finds_burst_within_bounds() {
        let series = vec![burst(210, 60, 135, 5.0), burst(210, 60, 135, 3.0)];
        let seg = adaptive_segment_series(&series, &SegmentParams::default()).unwrap();
        assert!(seg.normalized_length_t > 0.3 && seg.normalized_length_t < 0.5);
        assert!(seg.iou(60, 135) >= 0.8, "{seg:?}");
        assert!(seg.end <= 210);
    }

    #[test]
    fn run_length_is_monotone_in_p() {
        let series = vec![burst(210, 50, 140, 4.0), burst(210, 70, 120, 9.0)];
        let params = SegmentParams::default();
        let profile = activity_profile(&series, &params).unwrap();
        let peak = profile.iter().copied().fold(0.0, f64::max);
        let mut last = usize::MAX;
        for i in 1..100 {
            let len = probe(&profile, peak, i as f64 / 100.0, 210, &params).segment.len();
            assert!(len <= last);
            last = len;
        }
    }

    #[test]
    fn unreachable_band_reports_best_probe() {
        // A burst covering almost the whole trace cannot be cut below t2 by
        // thresholding alone once the profile is flat.
        let series = vec![burst(100, 0, 100, 7.5)];
        let params = SegmentParams {
            var_window: 2,
            mean_window: 1,
            ..SegmentParams::default()
        };
        match adaptive_segment_series(&series, &params) {
            Err(Error::SegmentationFailed { best_t, .. }) => assert!(best_t >= 0.5 || best_t <= 0.3),
            Ok(seg) => panic!("unexpected success {seg:?}"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn translation_shifts_segment() {
        let params = SegmentParams::default();
        let a = adaptive_segment_series(&[burst(240, 60, 135, 6.0)], &params).unwrap();
        let b = adaptive_segment_series(&[burst(240, 80, 155, 6.0)], &params).unwrap();
        let slack = (params.var_window + params.mean_window) as i64;
        assert!(((b.start as i64 - a.start as i64) - 20).abs() <= slack);
        assert!(((b.end as i64 - a.end as i64) - 20).abs() <= slack);
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(matches!(
            adaptive_segment_series(&[vec![1.0; 10]], &SegmentParams::default()),
            Err(Error::InvalidValue(_))
        ));
    }
}
