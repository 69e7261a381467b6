//! Random-walk item similarities over the bipartite user–item graph.

use rayon::prelude::*;

use super::knn::{Orientation, SimilarityModel};
use crate::error::{Error, Result};
use crate::model::InteractionMatrix;
use crate::sparse::{top_k_sparse, CsrMatrix};

/// Three-step walk item → user → item with transition probabilities raised to
/// `alpha`. `popularity_penalty`, when given, divides column `j` by
/// `popularity(j)^beta`.
fn random_walk_similarity(
    train: &InteractionMatrix,
    alpha: f64,
    popularity_penalty: Option<f64>,
    k: usize,
) -> Result<SimilarityModel> {
    if train.is_empty() {
        return Err(Error::invalid("training matrix is empty"));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be >= 0, got {alpha}")));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let user_to_item = train.csr().row_normalized().map_values(|p| p.powf(alpha));
    let item_to_user = train.csr().transpose().row_normalized().map_values(|p| p.powf(alpha));

    let column_scale: Option<Vec<f64>> = match popularity_penalty {
        None => None,
        Some(beta) => {
            if !(beta >= 0.0) || !beta.is_finite() {
                return Err(Error::invalid(format!("beta must be >= 0, got {beta}")));
            }
            Some(
                train
                    .csr()
                    .column_counts()
                    .into_iter()
                    .map(|c| if c == 0 { 0.0 } else { (c as f64).powf(-beta) })
                    .collect(),
            )
        }
    };

    let items = train.num_items();
    let rows: Vec<Vec<(usize, f64)>> = (0..items)
        .into_par_iter()
        .map_init(
            || vec![0.0; items],
            |acc, i| {
                item_to_user.row_times(i, &user_to_item, acc);
                if let Some(scale) = &column_scale {
                    acc.iter_mut().zip(scale).for_each(|(v, s)| *v *= s);
                }
                top_k_sparse(acc, k, Some(i))
            },
        )
        .collect();
    Ok(SimilarityModel::new(
        CsrMatrix::from_rows(items, rows),
        Orientation::ItemBased,
    ))
}

/// P3alpha: item similarity as the `alpha`-sharpened transition probability of
/// a three-step random walk.
pub fn fit_p3alpha(train: &InteractionMatrix, alpha: f64, k: usize) -> Result<SimilarityModel> {
    random_walk_similarity(train, alpha, None, k)
}

/// RP3beta: P3alpha with every target item's similarity divided by its
/// popularity raised to `beta`.
pub fn fit_rp3beta(train: &InteractionMatrix, alpha: f64, beta: f64, k: usize) -> Result<SimilarityModel> {
    random_walk_similarity(train, alpha, Some(beta), k)
}
