//! Sparse third-order tensors in coordinate form.
//!
//! Matricization convention, fixed for the whole crate (0-based here):
//! mode 1 has rows `i` and column `j·N + k`, so that
//! `(H⁽¹⁾ (x ⊗ y))_i = Σ_{j,k} h_ijk x_j y_k` with `(x ⊗ y)_{jN+k} = x_j y_k`.
//! Mode 2 has rows `j` and column `i·N + k`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};

/// Default guard on the dimension for which dense matricizations may be
/// formed (they are `N × N²`).
pub const DEFAULT_DENSE_CAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub v: f64,
}

/// `N × N × N` tensor stored as sorted, deduplicated `(i, j, k, v)` triples
/// with nonzero finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor3 {
    dim: usize,
    entries: Vec<Entry>,
}

impl SparseTensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Build from raw triples. Duplicate coordinates are summed and exact
    /// zeros dropped.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = Entry>) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for e in entries {
            if e.i >= dim || e.j >= dim || e.k >= dim {
                return Err(Error::InvalidArgument(format!(
                    "tensor index ({}, {}, {}) outside dimension {dim}",
                    e.i, e.j, e.k
                )));
            }
            if !e.v.is_finite() {
                return Err(Error::NonFinite("tensor entry"));
            }
            *acc.entry((e.i, e.j, e.k)).or_insert(0.0) += e.v;
        }
        let entries = acc
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((i, j, k), v)| Entry { i, j, k, v })
            .collect();
        Ok(Self { dim, entries })
    }

    /// Build from a dense mode-1 matricization (`rows × dim²`).
    pub fn from_dense_mode1(h: &DenseMatrix) -> Result<Self> {
        let dim = h.nrows();
        if h.ncols() != dim * dim {
            return Err(Error::Shape {
                op: "from_dense_mode1",
                detail: format!("expected {dim}x{}, got {}x{}", dim * dim, h.nrows(), h.ncols()),
            });
        }
        let mut out = Vec::new();
        for c in 0..dim * dim {
            for i in 0..dim {
                let v = h[(i, c)];
                if v != 0.0 {
                    out.push(Entry { i, j: c / dim, k: c % dim, v });
                }
            }
        }
        Self::from_entries(dim, out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `out_i = Σ h_ijk x_j y_k`, without forming `x ⊗ y`.
    pub fn apply_quadratic(&self, x: &DenseVector, y: &DenseVector) -> Result<DenseVector> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::Shape {
                op: "apply_quadratic",
                detail: format!("vectors of length {} and {} for dimension {}", x.len(), y.len(), self.dim),
            });
        }
        let mut out = DenseVector::zeros(self.dim);
        self.apply_add(x.as_slice(), y.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// `out += H (x ⊗ y)` on raw slices; lengths are the caller's problem.
    pub fn apply_add(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for e in &self.entries {
            out[e.i] += e.v * x[e.j] * y[e.k];
        }
    }

    /// Average over the two trailing modes so that `H(x ⊗ y) = H(y ⊗ x)`.
    pub fn symmetrize(&self) -> Self {
        let halves = self.entries.iter().flat_map(|e| {
            [
                Entry { v: 0.5 * e.v, ..*e },
                Entry { i: e.i, j: e.k, k: e.j, v: 0.5 * e.v },
            ]
        });
        Self::from_entries(self.dim, halves).expect("indices already validated")
    }

    /// True when `h_ijk = h_ikj` up to `tol` (relative to the largest entry).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.entries.iter().map(|e| e.v.abs()).fold(0.0, f64::max);
        let lookup: BTreeMap<_, _> = self.entries.iter().map(|e| ((e.i, e.j, e.k), e.v)).collect();
        self.entries.iter().all(|e| {
            let mirror = lookup.get(&(e.i, e.k, e.j)).copied().unwrap_or(0.0);
            (mirror - e.v).abs() <= tol * scale
        })
    }

    /// Entries for which `keep` holds.
    pub fn filter(&self, keep: impl Fn(&Entry) -> bool) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().copied().filter(|e| keep(e)).collect() }
    }

    /// `self + other`, summing coincident coordinates.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Shape {
                op: "tensor add",
                detail: format!("dimensions {} and {}", self.dim, other.dim),
            });
        }
        Self::from_entries(self.dim, self.entries.iter().chain(other.entries.iter()).copied())
    }

    /// Mode-1 matricization as a dense `N × N²` matrix. Oracle use only.
    pub fn dense_mode1(&self) -> Result<DenseMatrix> {
        self.dense_mode1_capped(DEFAULT_DENSE_CAP)
    }

    pub fn dense_mode1_capped(&self, cap: usize) -> Result<DenseMatrix> {
        self.check_cap(cap)?;
        let n = self.dim;
        let mut h = DenseMatrix::zeros(n, n * n);
        for e in &self.entries {
            h[(e.i, e.j * n + e.k)] += e.v;
        }
        Ok(h)
    }

    /// Mode-2 matricization as a dense `N × N²` matrix. Oracle use only.
    pub fn dense_mode2(&self) -> Result<DenseMatrix> {
        self.dense_mode2_capped(DEFAULT_DENSE_CAP)
    }

    pub fn dense_mode2_capped(&self, cap: usize) -> Result<DenseMatrix> {
        self.check_cap(cap)?;
        let n = self.dim;
        let mut h = DenseMatrix::zeros(n, n * n);
        for e in &self.entries {
            h[(e.j, e.i * n + e.k)] += e.v;
        }
        Ok(h)
    }

    fn check_cap(&self, cap: usize) -> Result<()> {
        if self.dim > cap {
            Err(Error::TooLarge { size: self.dim, cap })
        } else {
            Ok(())
        }
    }

    /// Text form: one `i j k v` line per entry, 1-based indices.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(s, "{} {} {} {:.17e}", e.i + 1, e.j + 1, e.k + 1, e.v);
        }
        s
    }

    pub fn from_text(dim: usize, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("tensor line {}: {line:?}", lineno + 1));
            if fields.len() != 4 {
                return Err(bad());
            }
            let idx = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|_| bad())?;
                v.checked_sub(1).ok_or_else(bad)
            };
            let v: f64 = fields[3].parse().map_err(|_| bad())?;
            entries.push(Entry { i: idx(fields[0])?, j: idx(fields[1])?, k: idx(fields[2])?, v });
        }
        Self::from_entries(dim, entries)
    }
}

fn nonzero_rows(m: &DenseMatrix) -> Vec<bool> {
    (0..m.nrows()).map(|r| m.row(r).iter().any(|&v| v != 0.0)).collect()
}

fn check_pair(op: &'static str, t1: &SparseTensor3, t2: &SparseTensor3, p: &DenseMatrix, q: &DenseMatrix) -> Result<usize> {
    let n = t1.dim;
    if t2.dim != n || p.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::Shape {
            op,
            detail: format!(
                "tensors of dimension {} and {}, P {:?}, Q {:?}",
                t1.dim,
                t2.dim,
                p.shape(),
                q.shape()
            ),
        });
    }
    Ok(n)
}

/// `G = H1⁽¹⁾ (P ⊗ Q) (H2⁽¹⁾)ᵀ`, i.e.
/// `G_{i,i'} = Σ v v' P_{j,j'} Q_{k,k'}` over entry pairs.
pub fn pair_contract_mode1(t1: &SparseTensor3, t2: &SparseTensor3, p: &DenseMatrix, q: &DenseMatrix) -> Result<DenseMatrix> {
    let n = check_pair("pair_contract_mode1", t1, t2, p, q)?;
    let (p_rows, q_rows) = (nonzero_rows(p), nonzero_rows(q));
    let live = |t: &SparseTensor3| -> Vec<Entry> {
        t.entries.iter().copied().filter(|e| p_rows[e.j] && q_rows[e.k]).collect()
    };
    let (a, b) = (live(t1), live(t2));
    let mut g = DenseMatrix::zeros(n, n);
    for e in &a {
        for f in &b {
            let w = p[(e.j, f.j)] * q[(e.k, f.k)];
            if w != 0.0 {
                g[(e.i, f.i)] += e.v * f.v * w;
            }
        }
    }
    Ok(g)
}

/// `G = H1⁽²⁾ (P ⊗ Q) (H2⁽²⁾)ᵀ`, i.e.
/// `G_{j,j'} = Σ v v' P_{i,i'} Q_{k,k'}` over entry pairs.
pub fn pair_contract_mode2(t1: &SparseTensor3, t2: &SparseTensor3, p: &DenseMatrix, q: &DenseMatrix) -> Result<DenseMatrix> {
    let n = check_pair("pair_contract_mode2", t1, t2, p, q)?;
    let (p_rows, q_rows) = (nonzero_rows(p), nonzero_rows(q));
    let live = |t: &SparseTensor3| -> Vec<Entry> {
        t.entries.iter().copied().filter(|e| p_rows[e.i] && q_rows[e.k]).collect()
    };
    let (a, b) = (live(t1), live(t2));
    let mut g = DenseMatrix::zeros(n, n);
    for e in &a {
        for f in &b {
            let w = p[(e.i, f.i)] * q[(e.k, f.k)];
            if w != 0.0 {
                g[(e.j, f.j)] += e.v * f.v * w;
            }
        }
    }
    Ok(g)
}

/// `Ĥ = Wᵀ H⁽¹⁾ (V ⊗ V)` as a dense `r × r²` matrix.
pub fn project(t: &SparseTensor3, w: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    let n = t.dim;
    let r = v.ncols();
    if w.nrows() != n || v.nrows() != n || w.ncols() != r {
        return Err(Error::Shape {
            op: "project",
            detail: format!("tensor dimension {n}, W {:?}, V {:?}", w.shape(), v.shape()),
        });
    }
    let mut h = DenseMatrix::zeros(r, r * r);
    for e in &t.entries {
        for q in 0..r {
            let vjq = e.v * v[(e.j, q)];
            if vjq == 0.0 {
                continue;
            }
            for s in 0..r {
                let vjqs = vjq * v[(e.k, s)];
                if vjqs == 0.0 {
                    continue;
                }
                let col = q * r + s;
                for p in 0..r {
                    h[(p, col)] += w[(e.i, p)] * vjqs;
                }
            }
        }
    }
    Ok(h)
}
