//! Tridiagonal matrices and the direct (Thomas) solver.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length mismatch");
        SymTridiagonal { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &v) in self.off.iter().enumerate() {
            m[(i, i + 1)] = v;
            m[(i + 1, i)] = v;
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Ascending eigenvalues from a dense symmetric eigensolve.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(self.to_dense())
    }
}

pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// LU factors of a fixed tridiagonal matrix, reused across many right-hand sides.
///
/// Rows are `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = d[i]`
/// (`lower[0]` and `upper[n-1]` are ignored).
#[derive(Clone, Debug)]
pub struct ThomasSolver {
    lower: Vec<f64>,
    // Forward-sweep coefficients c'_i and 1/(b_i - a_i c'_{i-1}).
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl ThomasSolver {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        assert!(lower.len() == n && upper.len() == n, "band lengths must match");
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        for i in 0..n {
            let pivot = if i == 0 { diag[0] } else { diag[i] - lower[i] * c_prime[i - 1] };
            if pivot.abs() < 1e-300 || !pivot.is_finite() {
                return Err(Error::Singular { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            c_prime[i] = upper[i] * inv_pivot[i];
        }
        Ok(ThomasSolver { lower: lower.to_vec(), c_prime, inv_pivot })
    }

    pub fn dim(&self) -> usize {
        self.inv_pivot.len()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(rhs.len(), n);
        if n == 0 {
            return;
        }
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense_solve() {
        let n = 9;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.5 + 0.02 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let solver = ThomasSolver::new(&lower, &diag, &upper).unwrap();
        let mut x = rhs.clone();
        solver.solve_in_place(&mut x);

        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = diag[i];
            if i > 0 {
                dense[(i, i - 1)] = lower[i];
            }
            if i + 1 < n {
                dense[(i, i + 1)] = upper[i];
            }
        }
        let reference = dense.lu().solve(&nalgebra::DVector::from_vec(rhs)).unwrap();
        for i in 0..n {
            assert!((x[i] - reference[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_pivot_reported() {
        let err = ThomasSolver::new(&[0.0, 1.0], &[1.0, 1.0], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Singular { row: 1 }));
    }

    #[test]
    fn tridiagonal_eigenvalues_of_path_laplacian() {
        // Neumann path graph on 4 nodes: 0, 2-√2, 2, 2+√2.
        let t = SymTridiagonal::new(vec![1.0, 2.0, 2.0, 1.0], vec![-1.0; 3]);
        let eig = t.eigenvalues();
        let s = 2f64.sqrt();
        for (a, b) in eig.iter().zip([0.0, 2.0 - s, 2.0, 2.0 + s]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
