use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::InteractionMatrix;
use crate::sparse::{top_k_sparse, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Item × item similarity; `score(u) = r_u · S`.
    ItemBased,
    /// User × user similarity; `score(u, i) = sum_v S[u, v] · R[v, i]`.
    UserBased,
}

/// Row-truncated similarity matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    similarity: CsrMatrix,
    orientation: Orientation,
}

impl SimilarityModel {
    pub fn new(similarity: CsrMatrix, orientation: Orientation) -> Self {
        SimilarityModel {
            similarity,
            orientation,
        }
    }

    pub fn similarity(&self) -> &CsrMatrix {
        &self.similarity
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub(super) fn score(&self, user: usize, train: &InteractionMatrix, out: &mut [f64]) {
        match self.orientation {
            Orientation::ItemBased => {
                let (items, values) = train.user_row(user);
                for (&j, &r) in items.iter().zip(values) {
                    if j < self.similarity.nrows() {
                        self.similarity.axpy_row(j, r, out);
                    }
                }
            }
            Orientation::UserBased => {
                if user >= self.similarity.nrows() {
                    return;
                }
                let (neighbors, sims) = self.similarity.row(user);
                for (&v, &s) in neighbors.iter().zip(sims) {
                    train.csr().axpy_row(v, s, out);
                }
            }
        }
    }
}

/// Shrunk cosine similarity between the rows of `rows`, keeping the `k` most
/// similar rows per row (ties to the smaller index) and a zero diagonal:
///
/// `s(a, b) = v_a · v_b / (|v_a| |v_b| + shrink)`, with `0 / 0` taken as 0.
pub fn cosine_topk(rows: &CsrMatrix, shrink: f64, k: usize) -> Result<CsrMatrix> {
    if rows.nrows() == 0 {
        return Err(Error::invalid("cosine similarity needs at least one row"));
    }
    if !(shrink >= 0.0) {
        return Err(Error::invalid(format!("shrink must be >= 0, got {shrink}")));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let n = rows.nrows();
    let columns = rows.transpose();
    let norms = rows.row_norms();
    let kept: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |acc, a| {
                rows.row_times(a, &columns, acc);
                for (b, v) in acc.iter_mut().enumerate() {
                    if *v != 0.0 {
                        let denominator = norms[a] * norms[b] + shrink;
                        *v = if denominator == 0.0 { 0.0 } else { *v / denominator };
                    }
                }
                top_k_sparse(acc, k, Some(a))
            },
        )
        .collect();
    Ok(CsrMatrix::from_rows(n, kept))
}
