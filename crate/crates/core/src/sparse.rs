//! Compressed sparse row storage and the handful of kernels the models need.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major compressed sparse matrix of `f64`. Column indices within a row are
/// strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Rejects out-of-range
    /// indices and repeated coordinates. Explicit zeros are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut triplets: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, v) in &triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::invalid(format!(
                    "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite value at ({r}, {c})")));
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = triplets
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::invalid(format!(
                "duplicate entry ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_unique(nrows, ncols, triplets))
    }

    fn from_sorted_unique(nrows: usize, ncols: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if v == 0.0 {
                continue;
            }
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Assembles a matrix from per-row `(col, value)` lists that are already
    /// sorted by column without repeats.
    pub(crate) fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in rows {
            for (c, v) in row {
                debug_assert!(c < ncols);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(dense: &DMatrix<f64>) -> Self {
        let rows = (0..dense.nrows())
            .map(|r| {
                (0..dense.ncols())
                    .filter(|&c| dense[(r, c)] != 0.0)
                    .map(|c| (c, dense[(r, c)]))
                    .collect()
            })
            .collect();
        Self::from_rows(dense.ncols(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
        }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    /// Divides every row by its sum; rows summing to zero stay zero.
    pub fn row_normalized(&self) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..self.nrows {
            let span = self.indptr[r]..self.indptr[r + 1];
            let sum: f64 = out.values[span.clone()].iter().sum();
            if sum != 0.0 {
                out.values[span].iter_mut().for_each(|v| *v /= sum);
            }
        }
        out
    }

    /// Euclidean norm of every row.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// Number of stored entries in every column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.ncols];
        for &c in &self.indices {
            counts[c] += 1;
        }
        counts
    }

    /// `[self | scale * other]`, the row-wise concatenation of two matrices with
    /// the same number of rows.
    pub fn hstack(&self, other: &CsrMatrix, scale: f64) -> Result<CsrMatrix> {
        if self.nrows != other.nrows {
            return Err(Error::invalid(format!(
                "cannot concatenate matrices with {} and {} rows",
                self.nrows, other.nrows
            )));
        }
        let rows = (0..self.nrows)
            .map(|r| {
                let (lc, lv) = self.row(r);
                let (rc, rv) = other.row(r);
                lc.iter()
                    .copied()
                    .zip(lv.iter().copied())
                    .chain(
                        rc.iter()
                            .zip(rv)
                            .map(|(&c, &v)| (c + self.ncols, v * scale))
                            .filter(|&(_, v)| v != 0.0),
                    )
                    .collect()
            })
            .collect();
        Ok(CsrMatrix::from_rows(self.ncols + other.ncols, rows))
    }

    /// Adds `scale * row r` into the dense accumulator `acc` of length `ncols`.
    pub fn axpy_row(&self, r: usize, scale: f64, acc: &mut [f64]) {
        let (cols, vals) = self.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            acc[c] += scale * v;
        }
    }

    /// Row `r` of `self * rhs`, written densely into `acc` (which is cleared first).
    pub fn row_times(&self, r: usize, rhs: &CsrMatrix, acc: &mut [f64]) {
        debug_assert_eq!(self.ncols, rhs.nrows);
        acc.iter_mut().for_each(|v| *v = 0.0);
        let (cols, vals) = self.row(r);
        for (&k, &v) in cols.iter().zip(vals) {
            rhs.axpy_row(k, v, acc);
        }
    }

    /// Sparse times dense.
    pub fn mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(self.ncols, rhs.nrows());
        let mut out = DMatrix::zeros(self.nrows, rhs.ncols());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &v) in cols.iter().zip(vals) {
                for c in 0..rhs.ncols() {
                    out[(r, c)] += v * rhs[(k, c)];
                }
            }
        }
        out
    }

    /// `selfᵀ * rhs` without materializing the transpose.
    pub fn transpose_mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(self.nrows, rhs.nrows());
        let mut out = DMatrix::zeros(self.ncols, rhs.ncols());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &v) in cols.iter().zip(vals) {
                for c in 0..rhs.ncols() {
                    out[(k, c)] += v * rhs[(r, c)];
                }
            }
        }
        out
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.indptr, &self.indices, &self.values)
    }

    /// Reassembles a matrix from its compressed arrays, checking every structural invariant.
    pub(crate) fn from_raw_parts(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let ok = indptr.len() == nrows + 1
            && indptr.first() == Some(&0)
            && indptr.last() == Some(&indices.len())
            && indices.len() == values.len()
            && indptr.windows(2).all(|w| w[0] <= w[1])
            && (0..nrows).all(|r| {
                let row = &indices[indptr[r]..indptr[r + 1]];
                row.windows(2).all(|w| w[0] < w[1]) && row.iter().all(|&c| c < ncols)
            });
        if !ok {
            return Err(Error::invalid("inconsistent compressed sparse row arrays"));
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            out[(r, c)] = v;
        }
        out
    }
}

/// Keeps the `k` largest entries of a dense score row, ties broken by the
/// smaller index. Zero and non-finite entries and `skip` are never kept.
/// Returned pairs are sorted by index.
pub(crate) fn top_k_sparse(scores: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut candidates: Vec<(usize, f64)> = scores
        .iter()
        .copied()
        .enumerate()
        .filter(|&(i, v)| v != 0.0 && v.is_finite() && Some(i) != skip)
        .collect();
    if candidates.len() > k {
        let by_rank = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        candidates.select_nth_unstable_by(k - 1, by_rank);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by_key(|&(i, _)| i);
    candidates
}
