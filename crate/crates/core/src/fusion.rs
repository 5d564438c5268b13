//! Subcarrier fusion by principal component analysis.
//!
//! Streams are mean-centered, correlated (`R = XcᵀXc`), eigendecomposed with
//! cyclic Jacobi rotations, and projected onto selected eigenvectors to give
//! principal-component time series. The first component is usually dominated
//! by common-mode disturbances, so the default selection is components 2 and 3.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MAX_JACOBI_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to ‖R‖.
pub const JACOBI_TOLERANCE: f64 = 1e-10;
const SYMMETRY_TOLERANCE: f64 = 1e-8;
/// Entries smaller than this are skipped when fixing eigenvector signs.
const SIGN_EPS: f64 = 1e-10;

/// Default one-based component selection.
pub const DEFAULT_INDICES: [usize; 2] = [2, 3];

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Sorted in descending order.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Matrix,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponents {
    /// T x k matrix, one column per selected component.
    pub series: Matrix,
    /// Fraction of total variance carried by each selected component.
    pub explained_variance: Vec<f64>,
    /// One-based indices of the selected components.
    pub source_indices: Vec<usize>,
    /// All eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
}

impl PrincipalComponents {
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.series.column(j)
    }

    pub fn len(&self) -> usize {
        self.series.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.series.rows() == 0
    }

    pub fn channel_count(&self) -> usize {
        self.series.cols()
    }
}

/// Subtracts every column's mean.
pub fn center_streams(x: &Matrix) -> Matrix {
    let (t, n) = x.shape();
    let mut means = vec![0.0; n];
    for i in 0..t {
        for (m, v) in means.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for (j, m) in means.iter_mut().enumerate() {
        *m /= t as f64;
        // Round-off in the sum must not leave residue in a constant stream.
        let first = x[(0, j)];
        if (0..t).all(|i| x[(i, j)] == first) {
            *m = first;
        }
    }
    let mut out = x.clone();
    for i in 0..t {
        for j in 0..n {
            out[(i, j)] -= means[j];
        }
    }
    out
}

/// `R = XᵀX`, computed over the upper triangle and mirrored so it is exactly symmetric.
pub fn correlation_matrix(xc: &Matrix) -> Matrix {
    let (t, n) = xc.shape();
    let mut r = Matrix::zeros(n, n);
    for k in 0..t {
        let row = xc.row(k);
        for i in 0..n {
            let a = row[i];
            if a == 0.0 {
                continue;
            }
            for j in i..n {
                r[(i, j)] += a * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            r[(i, j)] = r[(j, i)];
        }
    }
    r
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back in descending order (ties keep the Jacobi output
/// order) and every eigenvector has its first non-negligible entry positive.
pub fn eigen_decompose(r: &Matrix) -> Result<EigenDecomposition> {
    let n = r.rows();
    if r.cols() != n {
        return Err(Error::invalid(format!("eigen_decompose needs a square matrix, got {:?}", r.shape())));
    }
    if r.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let scale = r.frobenius_norm();
    if r.max_asymmetry() > SYMMETRY_TOLERANCE * scale.max(1.0) {
        return Err(Error::invalid(format!(
            "matrix is not symmetric (max |a_ij - a_ji| = {:.3e})",
            r.max_asymmetry()
        )));
    }
    let mut a = r.clone();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let target = JACOBI_TOLERANCE * scale;
    let mut sweeps = 0;
    while off_diagonal_norm(&a) > target {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::numerical(format!(
                "Jacobi iteration did not converge in {MAX_JACOBI_SWEEPS} sweeps (off-diagonal norm {:.3e})",
                off_diagonal_norm(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[(k, p)] = new_kp;
                    a[(p, k)] = new_kp;
                    a[(k, q)] = new_kq;
                    a[(q, k)] = new_kq;
                }
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal eigenvalues keep their Jacobi order.
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let flip = (0..n)
            .map(|k| v[(k, src)])
            .find(|x| x.abs() > SIGN_EPS)
            .is_some_and(|x| x < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        for k in 0..n {
            eigenvectors[(k, dst)] = sign * v[(k, src)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

/// Projects the centered streams onto the eigenvectors named by the one-based
/// `indices`: column `j` of the result is `Xc · v_{indices[j]}`.
pub fn principal_components(x: &Matrix, indices: &[usize]) -> Result<PrincipalComponents> {
    let (t, n) = x.shape();
    if t < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {t}")));
    }
    if indices.is_empty() || indices.contains(&0) {
        return Err(Error::invalid(format!("component indices {indices:?} must be one-based and non-empty")));
    }
    let highest = *indices.iter().max().unwrap();
    if highest > n {
        return Err(Error::invalid(format!(
            "component {highest} requested but only {n} streams are available"
        )));
    }
    let xc = center_streams(x);
    let eig = eigen_decompose(&correlation_matrix(&xc))?;
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let mut columns = Vec::with_capacity(indices.len());
    let mut explained = Vec::with_capacity(indices.len());
    for &k in indices {
        columns.push(xc.mul_vec(&eig.eigenvector(k - 1))?);
        let lambda = eig.eigenvalues[k - 1].max(0.0);
        explained.push(if total > 0.0 { lambda / total } else { 0.0 });
    }
    Ok(PrincipalComponents {
        series: Matrix::from_columns(&columns)?,
        explained_variance: explained,
        source_indices: indices.to_vec(),
        eigenvalues: eig.eigenvalues,
    })
}
