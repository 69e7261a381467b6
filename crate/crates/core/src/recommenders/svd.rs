//! PureSVD via seeded randomized subspace iteration.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::InteractionMatrix;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvdOptions {
    /// Extra sketch columns beyond the target rank.
    pub oversampling: usize,
    /// Subspace (power) iterations after the initial sketch.
    pub power_iterations: usize,
    /// Iteration budget of the small dense SVD.
    pub max_sweeps: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversampling: 8,
            power_iterations: 4,
            max_sweeps: 10_000,
        }
    }
}

/// `A ≈ U diag(s) Vᵀ` with orthonormal columns in `U` and `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl TruncatedSvd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.singular_values) * self.v.transpose()
    }
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Rank-`rank` truncated SVD of a sparse matrix. The Gaussian test matrix comes
/// from ChaCha8 seeded with `seed`, so the output is a pure function of the inputs.
pub fn randomized_svd(a: &CsrMatrix, rank: usize, seed: u64, opts: SvdOptions) -> Result<TruncatedSvd> {
    let (m, n) = (a.nrows(), a.ncols());
    let smallest = m.min(n);
    if rank == 0 || rank > smallest {
        return Err(Error::invalid(format!(
            "rank must be in 1..={smallest}, got {rank}"
        )));
    }
    let sketch = (rank + opts.oversampling).min(smallest);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, sketch, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormal_basis(a.mul_dense(&omega));
    for _ in 0..opts.power_iterations {
        let z = orthonormal_basis(a.transpose_mul_dense(&q));
        q = orthonormal_basis(a.mul_dense(&z));
    }
    // B = Qᵀ A, sketch × n
    let b = a.transpose_mul_dense(&q).transpose();
    let svd = b
        .try_svd(true, true, f64::EPSILON, opts.max_sweeps)
        .ok_or_else(|| Error::Numerical("SVD did not converge within the iteration budget".into()))?;
    let small_u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");

    let u = (q * small_u).columns(0, rank).into_owned();
    let v = v_t.rows(0, rank).transpose();
    let singular_values = svd.singular_values.rows(0, rank).into_owned();
    Ok(TruncatedSvd {
        u,
        singular_values,
        v,
    })
}

/// Latent factors of PureSVD. Scores are `(U_f diag(s_f) V_fᵀ)[u, i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    user_factors: DMatrix<f64>,
    item_factors: DMatrix<f64>,
    singular_values: DVector<f64>,
}

impl FactorModel {
    pub fn new(
        user_factors: DMatrix<f64>,
        item_factors: DMatrix<f64>,
        singular_values: DVector<f64>,
    ) -> Result<Self> {
        let f = singular_values.len();
        if f == 0 || user_factors.ncols() != f || item_factors.ncols() != f {
            return Err(Error::invalid("factor matrices disagree on the number of factors"));
        }
        if singular_values.iter().any(|&s| !(s >= 0.0))
            || singular_values.as_slice().windows(2).any(|w| w[0] < w[1])
        {
            return Err(Error::invalid("singular values must be nonnegative and nonincreasing"));
        }
        Ok(FactorModel {
            user_factors,
            item_factors,
            singular_values,
        })
    }

    pub fn user_factors(&self) -> &DMatrix<f64> {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &DMatrix<f64> {
        &self.item_factors
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    pub(super) fn score(&self, user: usize, out: &mut [f64]) -> Result<()> {
        if user >= self.user_factors.nrows() {
            return Err(Error::UnknownUser {
                user,
                num_users: self.user_factors.nrows(),
            });
        }
        let f = self.singular_values.len();
        let weighted: Vec<f64> = (0..f)
            .map(|k| self.user_factors[(user, k)] * self.singular_values[k])
            .collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..f).map(|k| weighted[k] * self.item_factors[(i, k)]).sum();
        }
        Ok(())
    }
}

/// PureSVD: rank-`factors` truncated SVD of the training matrix.
pub fn fit_puresvd(train: &InteractionMatrix, factors: usize, seed: u64) -> Result<FactorModel> {
    let svd = randomized_svd(train.csr(), factors, seed, SvdOptions::default())?;
    FactorModel::new(svd.u, svd.v, svd.singular_values)
}
