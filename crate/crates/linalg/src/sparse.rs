//! Compressed-row Hermitian matrices.

use crate::{LinalgError, Result, C64};
use std::collections::BTreeMap;

/// Accumulates Hermitian entries; every off-diagonal insert also writes the
/// conjugate mirror, so the assembled matrix is exactly Hermitian.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    rows: Vec<BTreeMap<usize, C64>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            rows: vec![BTreeMap::new(); n],
        }
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        *self.rows[i].entry(i).or_insert(C64::new(0.0, 0.0)) += C64::new(v, 0.0);
    }

    /// Adds `v` at (i, j) and `conj(v)` at (j, i); `i != j`.
    pub fn add_pair(&mut self, i: usize, j: usize, v: C64) {
        debug_assert_ne!(i, j);
        *self.rows[i].entry(j).or_insert(C64::new(0.0, 0.0)) += v;
        *self.rows[j].entry(i).or_insert(C64::new(0.0, 0.0)) += v.conj();
    }

    pub fn build(self) -> SparseHermitian {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in self.rows {
            for (j, v) in row {
                if v != C64::new(0.0, 0.0) {
                    col_idx.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseHermitian {
            n: self.n,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

/// Complex Hermitian matrix in CSR form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseHermitian {
    /// Builds from raw CSR arrays, rejecting explicit zeros and any entry
    /// whose mirror is not its exact conjugate.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<C64>,
    ) -> Result<Self> {
        if row_ptr.len() != n + 1 || col_idx.len() != vals.len() || row_ptr[n] != vals.len() {
            return Err(LinalgError::InvalidMatrix("inconsistent CSR arrays".into()));
        }
        let m = Self {
            n,
            row_ptr,
            col_idx,
            vals,
        };
        for i in 0..n {
            let (cols, vs) = m.row(i);
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&j| j >= n) {
                return Err(LinalgError::InvalidMatrix(format!("row {i} indices")));
            }
            for (&j, &v) in cols.iter().zip(vs) {
                if v == C64::new(0.0, 0.0) {
                    return Err(LinalgError::InvalidMatrix(format!("explicit zero at ({i},{j})")));
                }
                if m.get(j, i) != v.conj() {
                    return Err(LinalgError::InvalidMatrix(format!("not Hermitian at ({i},{j})")));
                }
            }
        }
        Ok(m)
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut b = TripletBuilder::new(d.len());
        for (i, &v) in d.iter().enumerate() {
            b.add_diag(i, v);
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vs) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vs[p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).re).collect()
    }

    /// Max |i − j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).0.iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Largest deviation from exact Hermiticity (zero for assembled matrices).
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vs) = self.row(i);
            for (&j, &v) in cols.iter().zip(vs) {
                worst = worst.max((self.get(j, i) - v.conj()).norm());
            }
        }
        worst
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut s = C64::new(0.0, 0.0);
            for (v, &j) in self.vals[r.clone()].iter().zip(&self.col_idx[r]) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// D A D for a real positive diagonal D.
    pub fn congruence_diag(&self, d: &[f64]) -> Self {
        let mut vals = self.vals.clone();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                vals[p] *= d[i] * d[self.col_idx[p]];
            }
        }
        Self {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            vals,
        }
    }

    /// Lower Gershgorin bound.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let (cols, vs) = self.row(i);
                let mut d = 0.0;
                let mut r = 0.0;
                for (&j, v) in cols.iter().zip(vs) {
                    if j == i {
                        d = v.re;
                    } else {
                        r += v.norm();
                    }
                }
                d - r
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n * self.n];
        for i in 0..self.n {
            let (cols, vs) = self.row(i);
            for (&j, &v) in cols.iter().zip(vs) {
                out[i * self.n + j] = v;
            }
        }
        out
    }
}
