use super::{DenseMatrix, DenseVector};

/// Compressed-row copy of a dense matrix, used for fast matrix-vector
/// products during time stepping.
#[derive(Debug, Clone)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let (nrows, ncols) = m.shape();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..nrows {
            for j in 0..ncols {
                let v = m[(i, j)];
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    /// `out += scale · self · x`.
    pub fn mul_add(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[p] * x[self.indices[p]];
            }
            *o += scale * acc;
        }
    }

    pub fn mul_vec(&self, x: &DenseVector) -> DenseVector {
        let mut out = DenseVector::zeros(self.nrows);
        self.mul_add(x.as_slice(), 1.0, out.as_mut_slice());
        out
    }
}
