use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::model::InteractionMatrix;

/// Dense item × item weights with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseWeightModel {
    weights: DMatrix<f64>,
}

impl DenseWeightModel {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if !weights.is_square() {
            return Err(Error::invalid("weight matrix must be square"));
        }
        if (0..weights.nrows()).any(|i| weights[(i, i)] != 0.0) {
            return Err(Error::invalid("weight matrix must have a zero diagonal"));
        }
        Ok(DenseWeightModel { weights })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub(super) fn score(&self, user: usize, train: &InteractionMatrix, out: &mut [f64]) {
        let (items, values) = train.user_row(user);
        for (&j, &r) in items.iter().zip(values) {
            for (i, o) in out.iter_mut().enumerate() {
                *o += r * self.weights[(j, i)];
            }
        }
    }
}

/// `X^T X` of the training matrix, accumulated one user at a time.
pub(crate) fn gram(train: &InteractionMatrix) -> DMatrix<f64> {
    let n = train.num_items();
    let mut g = DMatrix::zeros(n, n);
    for u in 0..train.num_users() {
        let (items, values) = train.user_row(u);
        for (&a, &va) in items.iter().zip(values) {
            for (&b, &vb) in items.iter().zip(values) {
                g[(a, b)] += va * vb;
            }
        }
    }
    g
}

/// EASE^R closed form: with `P = (X^T X + lambda I)^-1`,
/// `B = I - P diag(1 / diag(P))`, i.e. `B[i][j] = -P[i][j] / P[j][j]` off the
/// diagonal and 0 on it.
pub fn fit_easer(train: &InteractionMatrix, lambda: f64) -> Result<DenseWeightModel> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be > 0, got {lambda}")));
    }
    if train.is_empty() {
        return Err(Error::invalid("training matrix is empty"));
    }
    let n = train.num_items();
    let mut g = gram(train);
    for i in 0..n {
        g[(i, i)] += lambda;
    }
    let p = Cholesky::new(g)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "Gram matrix is not positive definite with lambda = {lambda}"
            ))
        })?
        .inverse();
    let mut b = DMatrix::zeros(n, n);
    for j in 0..n {
        let pivot = p[(j, j)];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::Numerical(format!("degenerate inverse diagonal at item {j}")));
        }
        for i in 0..n {
            if i != j {
                b[(i, j)] = -p[(i, j)] / pivot;
            }
        }
    }
    DenseWeightModel::new(b)
}
