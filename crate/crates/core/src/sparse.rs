//! Compressed sparse row storage and the handful of kernels the solver needs.

use num_complex::Complex64;

use crate::par::{map_chunks, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: Copy + Default> Csr<T> {
    /// Pattern from sorted, deduplicated `(row, col)` pairs with zero values.
    pub fn from_pattern(n: usize, pairs: &[(usize, usize)]) -> Csr<T> {
        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _) in pairs {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n,
            row_ptr,
            col_idx: pairs.iter().map(|p| p.1).collect(),
            vals: vec![T::default(); pairs.len()],
        }
    }

    /// Position of entry `(r, c)` in `vals`.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        row.binary_search(&c).ok().map(|k| self.row_ptr[r] + k)
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.position(r, c).map(|k| self.vals[k]).unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterate `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.vals[k]))
        })
    }
}

pub trait Scalar: Copy + Default + Send + Sync {
    fn to_c(self) -> Complex64;
}

impl Scalar for f64 {
    #[inline]
    fn to_c(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn to_c(self) -> Complex64 {
        self
    }
}

impl<T: Scalar> Csr<T> {
    /// y = A x for complex x.
    pub fn mul_vec(&self, x: &[Complex64], exec: Execution) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let chunks = map_chunks(exec, self.n, 4096, |rows| {
            rows.map(|r| {
                let mut s = Complex64::new(0.0, 0.0);
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    s += self.vals[k].to_c() * x[self.col_idx[k]];
                }
                s
            })
            .collect::<Vec<_>>()
        });
        chunks.concat()
    }

    /// Column-major block product Y = A X with `m` columns of length n.
    pub fn mul_block(&self, x: &[Complex64], m: usize, exec: Execution) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(x.len(), n * m);
        let cols = crate::par::map_range(exec, m, |j| self.mul_vec(&x[j * n..(j + 1) * n], Execution::Sequential));
        cols.concat()
    }

    /// x^H A x.
    pub fn quad_form(&self, x: &[Complex64]) -> Complex64 {
        let ax = self.mul_vec(x, Execution::Sequential);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Csr<Complex64> {
    /// max |A - A^H| / max |A|.
    pub fn hermitian_defect(&self) -> f64 {
        let mut amax: f64 = 0.0;
        let mut dmax: f64 = 0.0;
        for (r, c, v) in self.triplets() {
            amax = amax.max(v.norm());
            let t = self.get(c, r);
            dmax = dmax.max((v - t.conj()).norm());
        }
        if amax == 0.0 {
            0.0
        } else {
            dmax / amax
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_lookup_and_defect() {
        let mut a: Csr<Complex64> = Csr::from_pattern(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        a.vals = vec![2.0.into(), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), 3.0.into()];
        assert_eq!(a.get(0, 1), Complex64::new(0.0, 1.0));
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.hermitian_defect(), 0.0);
        let x = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        // x^H A x = 2 + 3 + 2 Re(conj(x0) A01 x1) = 5 - 2.
        assert!((a.quad_form(&x) - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        a.vals[1] = 1.0.into();
        assert!(a.hermitian_defect() > 0.3);
    }
}
