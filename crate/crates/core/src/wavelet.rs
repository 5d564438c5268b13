//! Orthonormal discrete wavelet transform by the two-filter recursion with
//! dyadic decimation and periodic boundary extension.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    #[default]
    Haar,
    Db2,
}

impl std::str::FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(WaveletFamily::Haar),
            "db2" => Ok(WaveletFamily::Db2),
            other => Err(Error::invalid(format!("unknown wavelet family {other:?}"))),
        }
    }
}

/// Scaling filter `h_phi` and its quadrature mirror `h_psi[n] = (-1)^n h_phi[L-1-n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    pub h_phi: Vec<f64>,
    pub h_psi: Vec<f64>,
}

impl WaveletSpec {
    pub fn new(family: WaveletFamily) -> Self {
        let h_phi = match family {
            WaveletFamily::Haar => vec![1.0 / SQRT_2, 1.0 / SQRT_2],
            WaveletFamily::Db2 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * SQRT_2;
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
        };
        let n = h_phi.len();
        let h_psi = (0..n)
            .map(|i| if i % 2 == 0 { h_phi[n - 1 - i] } else { -h_phi[n - 1 - i] })
            .collect();
        Self { family, h_phi, h_psi }
    }

    pub fn haar() -> Self {
        Self::new(WaveletFamily::Haar)
    }

    pub fn db2() -> Self {
        Self::new(WaveletFamily::Db2)
    }

    pub fn filter_len(&self) -> usize {
        self.h_phi.len()
    }
}

/// One analysis step: `approx[k] = Σ_n h_phi(n-2k) x(n)`, likewise for detail.
pub fn dwt_step(x: &[f64], spec: &WaveletSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = x.len();
    if !len.is_multiple_of(2) {
        return Err(Error::invalid(format!("DWT input length {len} is odd")));
    }
    if len < spec.filter_len() {
        return Err(Error::invalid(format!(
            "DWT input length {len} is shorter than the {}-tap filter",
            spec.filter_len()
        )));
    }
    let half = len / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (m, (hp, hs)) in spec.h_phi.iter().zip(&spec.h_psi).enumerate() {
            let v = x[(2 * k + m) % len];
            a += hp * v;
            d += hs * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
    Ok((approx, detail))
}

/// Synthesis step inverting [`dwt_step`].
pub fn idwt_step(approx: &[f64], detail: &[f64], spec: &WaveletSpec) -> Result<Vec<f64>> {
    if approx.len() != detail.len() {
        return Err(Error::invalid(format!(
            "approximation and detail lengths differ ({} vs {})",
            approx.len(),
            detail.len()
        )));
    }
    let len = 2 * approx.len();
    if len < spec.filter_len() {
        return Err(Error::invalid(format!(
            "IDWT output length {len} is shorter than the {}-tap filter",
            spec.filter_len()
        )));
    }
    let mut x = vec![0.0; len];
    for (k, (a, d)) in approx.iter().zip(detail).enumerate() {
        for (m, (hp, hs)) in spec.h_phi.iter().zip(&spec.h_psi).enumerate() {
            x[(2 * k + m) % len] += hp * a + hs * d;
        }
    }
    Ok(x)
}

/// Multi-level decomposition of one series: the level-`J` approximation and
/// the details of levels `1..=J`.
pub fn wavedec(x: &[f64], levels: usize, spec: &WaveletSpec) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_dyadic(x.len(), levels)?;
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = dwt_step(&approx, spec)?;
        approx = a;
        details.push(d);
    }
    Ok((approx, details))
}

pub fn waverec(approx: &[f64], details: &[Vec<f64>], spec: &WaveletSpec) -> Result<Vec<f64>> {
    let mut x = approx.to_vec();
    for d in details.iter().rev() {
        x = idwt_step(&x, d, spec)?;
    }
    Ok(x)
}

fn check_dyadic(len: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::invalid("number of DWT levels must be at least 1"));
    }
    if levels >= usize::BITS as usize || !len.is_multiple_of(1usize << levels) || len == 0 {
        return Err(Error::invalid(format!(
            "length {len} is not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

/// Approximation coefficients at every level of a multi-channel decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    /// `approx[j - 1]` holds level `j`: channels x (L / 2^j).
    pub approx: Vec<Matrix>,
    /// `detail_energy[j - 1][c]` is ‖detail_j‖² of channel `c`.
    pub detail_energy: Vec<Vec<f64>>,
}

impl WaveletPyramid {
    pub fn levels(&self) -> usize {
        self.approx.len()
    }

    pub fn channels(&self) -> usize {
        self.approx.first().map_or(0, Matrix::rows)
    }

    /// Approximation at level `j` (one-based).
    pub fn level(&self, j: usize) -> &Matrix {
        &self.approx[j - 1]
    }

    /// The deepest approximation, channels concatenated.
    pub fn deepest_flat(&self) -> Vec<f64> {
        self.approx.last().map(|m| m.as_slice().to_vec()).unwrap_or_default()
    }
}

/// DWT pyramid of each row of `series` (channels x L).
pub fn dwt_pyramid(series: &Matrix, levels: usize, spec: &WaveletSpec) -> Result<WaveletPyramid> {
    let (channels, len) = series.shape();
    check_dyadic(len, levels)?;
    let mut approx: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(channels); levels];
    let mut detail_energy: Vec<Vec<f64>> = vec![Vec::with_capacity(channels); levels];
    for c in 0..channels {
        let mut current = series.row(c).to_vec();
        for j in 0..levels {
            let (a, d) = dwt_step(&current, spec)?;
            detail_energy[j].push(d.iter().map(|v| v * v).sum());
            approx[j].push(a.clone());
            current = a;
        }
    }
    let approx = approx
        .iter()
        .map(|rows| Matrix::from_rows(rows))
        .collect::<Result<Vec<_>>>()?;
    Ok(WaveletPyramid { approx, detail_energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn energy(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn filter_invariants() {
        for spec in [WaveletSpec::haar(), WaveletSpec::db2()] {
            assert!((spec.h_phi.iter().sum::<f64>() - SQRT_2).abs() < 1e-10);
            assert!((energy(&spec.h_phi).sqrt() - 1.0).abs() < 1e-10);
            assert!(spec.h_psi.iter().sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn haar_constant() {
        let (a, d) = dwt_step(&[3.0; 8], &WaveletSpec::haar()).unwrap();
        for v in a {
            assert!((v - 3.0 * SQRT_2).abs() < 1e-14);
        }
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn haar_hand_case() {
        let (a, d) = dwt_step(&[1.0, 2.0, 3.0, 4.0], &WaveletSpec::haar()).unwrap();
        let r = 1.0 / SQRT_2;
        assert_eq!(a, vec![3.0 * r, 7.0 * r]);
        assert_eq!(d, vec![-r, -r]);
    }

    #[test]
    fn odd_and_short_inputs_rejected() {
        assert!(matches!(dwt_step(&[1.0, 2.0, 3.0], &WaveletSpec::haar()), Err(Error::InvalidValue(_))));
        assert!(dwt_step(&[1.0, 2.0], &WaveletSpec::db2()).is_err());
        assert!(idwt_step(&[1.0, 2.0], &[1.0], &WaveletSpec::haar()).is_err());
    }

    #[test]
    fn zero_and_split_reconstruction() {
        let spec = WaveletSpec::db2();
        assert_eq!(idwt_step(&[0.0; 4], &[0.0; 4], &spec).unwrap(), vec![0.0; 8]);
        let a = [1.0, -2.0, 0.5, 3.0];
        let d = [0.25, 1.0, -1.0, 2.0];
        let full = idwt_step(&a, &d, &spec).unwrap();
        let pa = idwt_step(&a, &[0.0; 4], &spec).unwrap();
        let pd = idwt_step(&[0.0; 4], &d, &spec).unwrap();
        for i in 0..8 {
            assert!((full[i] - pa[i] - pd[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn pyramid_lengths_and_constants() {
        let series = Matrix::from_rows(&[vec![2.0; 256], vec![-1.0; 256]]).unwrap();
        let p = dwt_pyramid(&series, 3, &WaveletSpec::haar()).unwrap();
        assert_eq!(p.levels(), 3);
        assert_eq!(p.channels(), 2);
        for (j, len) in [(1, 128), (2, 64), (3, 32)] {
            let m = p.level(j);
            assert_eq!(m.shape(), (2, len));
            let gain = 2f64.powf(j as f64 / 2.0);
            assert!(m.row(0).iter().all(|v| (v - 2.0 * gain).abs() < 1e-12));
            assert!(m.row(1).iter().all(|v| (v + gain).abs() < 1e-12));
        }
        assert!(dwt_pyramid(&Matrix::zeros(1, 20), 3, &WaveletSpec::haar()).is_err());
    }

    #[test]
    fn haar_shift_by_two_covariance() {
        let x: Vec<f64> = (0..16).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let shifted: Vec<f64> = (0..16).map(|i| x[(i + 14) % 16]).collect();
        let (a, _) = dwt_step(&x, &WaveletSpec::haar()).unwrap();
        let (b, _) = dwt_step(&shifted, &WaveletSpec::haar()).unwrap();
        for k in 0..8 {
            assert!((b[k] - a[(k + 7) % 8]).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn perfect_reconstruction_and_energy(
            x in prop::collection::vec(-5.0f64..5.0, 64),
            db2 in any::<bool>(),
        ) {
            let spec = if db2 { WaveletSpec::db2() } else { WaveletSpec::haar() };
            let (a, d) = dwt_step(&x, &spec).unwrap();
            prop_assert!((energy(&x) - energy(&a) - energy(&d)).abs() < 1e-9);
            let y = idwt_step(&a, &d, &spec).unwrap();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() < 1e-9);
            }
            let (aj, details) = wavedec(&x, 3, &spec).unwrap();
            let total = energy(&aj) + details.iter().map(|d| energy(d)).sum::<f64>();
            prop_assert!((energy(&x) - total).abs() <= 1e-8 * energy(&x).max(1e-300));
            let back = waverec(&aj, &details, &spec).unwrap();
            for (p, q) in x.iter().zip(&back) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }

        #[test]
        fn pyramid_is_linear(
            x in prop::collection::vec(-5.0f64..5.0, 32),
            y in prop::collection::vec(-5.0f64..5.0, 32),
            a in -2.0f64..2.0,
        ) {
            let spec = WaveletSpec::db2();
            let px = dwt_pyramid(&Matrix::from_rows(std::slice::from_ref(&x)).unwrap(), 2, &spec).unwrap();
            let py = dwt_pyramid(&Matrix::from_rows(std::slice::from_ref(&y)).unwrap(), 2, &spec).unwrap();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
            let pc = dwt_pyramid(&Matrix::from_rows(&[combo]).unwrap(), 2, &spec).unwrap();
            for j in 1..=2 {
                for ((u, v), w) in px.level(j).as_slice().iter().zip(py.level(j).as_slice()).zip(pc.level(j).as_slice()) {
                    prop_assert!((a * u + v - w).abs() < 1e-9);
                }
            }
        }
    }
}
