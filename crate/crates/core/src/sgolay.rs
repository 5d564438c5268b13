//! Savitzky-Golay smoothing filters.
//!
//! The impulse response is the least-squares polynomial fit of order `N` to a
//! unit impulse over `2M+1` points: `ã = (AᵀA)⁻¹Aᵀd`, `p̃(n) = Σ ã_k n^k` and
//! `h[-n] = p̃(n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix};

/// Pivot-ratio bound on the normal equations before design is refused.
const MAX_PIVOT_RATIO: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMode {
    /// Reflect about the first and last samples.
    #[default]
    Mirror,
    /// Evaluate the polynomial fitted to the first/last full window.
    Polynomial,
}

impl std::str::FromStr for EdgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mirror" => Ok(EdgeMode::Mirror),
            "polynomial" => Ok(EdgeMode::Polynomial),
            other => Err(Error::invalid(format!("unknown edge mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgFilter {
    half_width: usize,
    poly_order: usize,
    /// `h[n]` for `n = -M..=M`, stored at index `n + M`.
    coefficients: Vec<f64>,
}

impl SgFilter {
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn poly_order(&self) -> usize {
        self.poly_order
    }

    pub fn window_len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// Normal matrix `AᵀA` over the abscissae `n/M`.
///
/// Scaling the abscissae keeps the system well conditioned; the fitted
/// polynomial space and therefore the filter are unchanged.
fn normal_matrix(m: usize, order: usize) -> Matrix {
    let scale = m as f64;
    let mut g = Matrix::zeros(order + 1, order + 1);
    for n in -(m as i64)..=(m as i64) {
        let u = n as f64 / scale;
        for j in 0..=order {
            for k in 0..=order {
                g[(j, k)] += u.powi((j + k) as i32);
            }
        }
    }
    g
}

fn monomials(u: f64, order: usize) -> Vec<f64> {
    (0..=order).map(|k| u.powi(k as i32)).collect()
}

/// Weights `w[n + M]` such that `Σ_n w[n+M]·x[n]` evaluates the least-squares
/// polynomial through `x[-M..=M]` at offset `at`.
fn fit_weights(m: usize, order: usize, normal: &Matrix, at: i64) -> Result<Vec<f64>> {
    let scale = m as f64;
    let g_inv_a = solve(normal, &monomials(at as f64 / scale, order), MAX_PIVOT_RATIO)?;
    Ok((-(m as i64)..=(m as i64))
        .map(|n| {
            let u = n as f64 / scale;
            g_inv_a.iter().enumerate().map(|(k, c)| c * u.powi(k as i32)).sum()
        })
        .collect())
}

pub fn design_sg_filter(half_width: usize, poly_order: usize) -> Result<SgFilter> {
    if half_width == 0 {
        return Err(Error::invalid("half width M must be at least 1"));
    }
    if poly_order > 2 * half_width {
        return Err(Error::invalid(format!(
            "polynomial order {poly_order} exceeds 2M = {} (rank-deficient fit)",
            2 * half_width
        )));
    }
    let normal = normal_matrix(half_width, poly_order);
    // Aᵀd picks out the centre column of Aᵀ, i.e. the monomials at n = 0.
    let a_tilde = solve(&normal, &monomials(0.0, poly_order), MAX_PIVOT_RATIO)?;
    let m = half_width as i64;
    let p_tilde = |n: i64| -> f64 {
        let u = n as f64 / half_width as f64;
        a_tilde.iter().enumerate().map(|(k, a)| a * u.powi(k as i32)).sum()
    };
    // h[-n] = p̃(n)
    let coefficients = (-m..=m).map(|n| p_tilde(-n)).collect();
    Ok(SgFilter {
        half_width,
        poly_order,
        coefficients,
    })
}

/// Filters `signal`, returning a sequence of the same length.
pub fn apply_sg(signal: &[f64], filter: &SgFilter, edge_mode: EdgeMode) -> Result<Vec<f64>> {
    let m = filter.half_width;
    let len = signal.len();
    if len < filter.window_len() {
        return Err(Error::invalid(format!(
            "signal of length {len} is shorter than the {}-point window",
            filter.window_len()
        )));
    }
    let h = &filter.coefficients;
    // y[k] = Σ_n h[n] x[k - n]
    let convolve_at = |k: usize, sample: &dyn Fn(i64) -> f64| -> f64 {
        (-(m as i64)..=(m as i64))
            .map(|n| h[(n + m as i64) as usize] * sample(k as i64 - n))
            .sum()
    };
    let mut out = vec![0.0; len];
    for (k, o) in out.iter_mut().enumerate().take(len - m).skip(m) {
        *o = convolve_at(k, &|i| signal[i as usize]);
    }
    match edge_mode {
        EdgeMode::Mirror => {
            let last = len as i64 - 1;
            let mirrored = |i: i64| {
                let j = if i < 0 {
                    -i
                } else if i > last {
                    2 * last - i
                } else {
                    i
                };
                signal[j as usize]
            };
            for k in (0..m).chain(len - m..len) {
                out[k] = convolve_at(k, &mirrored);
            }
        }
        EdgeMode::Polynomial => {
            let normal = normal_matrix(m, filter.poly_order);
            let head = &signal[..filter.window_len()];
            let tail = &signal[len - filter.window_len()..];
            for i in 0..m {
                let w = fit_weights(m, filter.poly_order, &normal, i as i64 - m as i64)?;
                out[i] = w.iter().zip(head).map(|(a, b)| a * b).sum();
                let w = fit_weights(m, filter.poly_order, &normal, (i + 1) as i64)?;
                out[len - m + i] = w.iter().zip(tail).map(|(a, b)| a * b).sum();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn order_zero_is_moving_average() {
        let f = design_sg_filter(2, 0).unwrap();
        assert_close(f.coefficients(), &[0.2; 5], 1e-15);
    }

    #[test]
    fn quadratic_five_point() {
        let f = design_sg_filter(2, 2).unwrap();
        let expected: Vec<f64> = [-3.0, 12.0, 17.0, 12.0, -3.0].iter().map(|v| v / 35.0).collect();
        assert_close(f.coefficients(), &expected, 1e-12);
    }

    #[test]
    fn exact_interpolation_when_order_is_2m() {
        let f = design_sg_filter(1, 2).unwrap();
        assert_close(f.coefficients(), &[0.0, 1.0, 0.0], 1e-12);
    }

    #[test]
    fn design_rejects_bad_parameters() {
        assert!(matches!(design_sg_filter(2, 5), Err(Error::InvalidValue(_))));
        assert!(design_sg_filter(0, 0).is_err());
    }

    #[test]
    fn coefficient_invariants() {
        for m in 1..=7 {
            for n in 0..=(2 * m).min(5) {
                let f = design_sg_filter(m, n).unwrap();
                let c = f.coefficients();
                assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                for i in 0..c.len() {
                    assert!((c[i] - c[c.len() - 1 - i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn short_signal_rejected() {
        let f = design_sg_filter(3, 2).unwrap();
        assert!(matches!(apply_sg(&[1.0; 6], &f, EdgeMode::Mirror), Err(Error::InvalidValue(_))));
    }

    #[test]
    fn constant_signal_unchanged_everywhere() {
        let f = design_sg_filter(4, 3).unwrap();
        for mode in [EdgeMode::Mirror, EdgeMode::Polynomial] {
            let y = apply_sg(&[2.5; 20], &f, mode).unwrap();
            assert_close(&y, &[2.5; 20], 1e-12);
        }
    }

    #[test]
    fn polynomial_edges_preserve_polynomials_everywhere() {
        let f = design_sg_filter(3, 2).unwrap();
        let x: Vec<f64> = (0..15).map(|t| 0.5 * (t * t) as f64 - 2.0 * t as f64 + 1.0).collect();
        let y = apply_sg(&x, &f, EdgeMode::Polynomial).unwrap();
        assert_close(&y, &x, 1e-9);
    }

    #[test]
    fn alternating_input_is_attenuated() {
        let x: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        for m in 1..=7 {
            for n in 0..(2 * m).min(6) {
                let f = design_sg_filter(m, n).unwrap();
                let y = apply_sg(&x, &f, EdgeMode::Mirror).unwrap();
                let ein: f64 = x[m..64 - m].iter().map(|v| v * v).sum();
                let eout: f64 = y[m..64 - m].iter().map(|v| v * v).sum();
                assert!(eout < ein, "M={m} N={n}");
            }
        }
    }

    proptest! {
        #[test]
        fn linear_and_shift_commuting(
            x in prop::collection::vec(-10.0f64..10.0, 32),
            y in prop::collection::vec(-10.0f64..10.0, 32),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            c in -5.0f64..5.0,
        ) {
            let f = design_sg_filter(3, 2).unwrap();
            for mode in [EdgeMode::Mirror, EdgeMode::Polynomial] {
                let fx = apply_sg(&x, &f, mode).unwrap();
                let fy = apply_sg(&y, &f, mode).unwrap();
                let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
                let fc = apply_sg(&combo, &f, mode).unwrap();
                for i in 0..32 {
                    prop_assert!((fc[i] - (a * fx[i] + b * fy[i])).abs() < 1e-9);
                }
                let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
                let fs = apply_sg(&shifted, &f, mode).unwrap();
                for i in 0..32 {
                    prop_assert!((fs[i] - (fx[i] + c)).abs() < 1e-9);
                }
            }
        }
    }
}
