//! Sparse Hermitian factorization.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::Csr;

/// Sparse Cholesky factor of a Hermitian positive definite matrix.
pub struct Factor {
    llt: Llt<usize, c64>,
    n: usize,
}

impl Factor {
    pub fn new(a: &Csr<Complex64>) -> Result<Factor> {
        let n = a.n;
        let trip: Vec<Triplet<usize, usize, c64>> =
            a.triplets().filter(|(i, j, _)| i >= j).map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let m = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::InvalidInput(format!("sparse matrix construction failed: {e:?}")))?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::NotPositiveDefinite(format!("factorization failed: {e:?}")))?;
        Ok(Factor { llt, n })
    }

    pub fn solve_mat(&self, r: &Mat<c64>) -> Mat<c64> {
        let mut x = r.clone();
        self.llt.solve_in_place(x.as_mut());
        x
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let m = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.solve_mat(&m);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_hermitian_tridiagonal() {
        let n: usize = 5;
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                pairs.push((i, j));
            }
        }
        let mut a: Csr<Complex64> = Csr::from_pattern(n, &pairs);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            a.vals[k] = match (i as i64 - j as i64).signum() {
                0 => Complex64::new(4.0, 0.0),
                1 => Complex64::new(1.0, 1.0),
                _ => Complex64::new(1.0, -1.0),
            };
        }
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = Factor::new(&a).unwrap().solve(&b);
        let ax = a.mul_vec(&x, crate::Execution::Sequential);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a: Csr<Complex64> = Csr::from_pattern(2, &[(0, 0), (1, 1)]);
        a.vals = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert!(Factor::new(&a).is_err());
    }
}
