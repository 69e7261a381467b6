mod common;

use carousel_eval::model::InteractionMatrix;
use carousel_eval::recommenders::{
    cosine_topk, fit, fit_easer, fit_p3alpha, fit_rp3beta, randomized_svd, recommend, top_n, Algorithm, HyperParams,
    Model, SvdOptions, TrainingData,
};
use carousel_eval::sparse::CsrMatrix;
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, max_users: usize, max_items: usize) -> (usize, usize, Vec<(usize, usize, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = rng.random_range(2..=max_users);
    let items = rng.random_range(2..=max_items);
    let density = rng.random_range(0.2..0.7);
    (users, items, random_binary(&mut rng, users, items, density))
}

fn matrix(users: usize, items: usize, entries: &[(usize, usize, f64)]) -> InteractionMatrix {
    InteractionMatrix::new(users, items, entries.iter().copied()).unwrap()
}

/// Every kept entry equals the untruncated oracle, each row keeps
/// `min(k, nonzeros)` entries, and nothing dropped beats anything kept.
fn check_truncation(kept: &DMatrix<f64>, full: &DMatrix<f64>, k: usize, tol: f64) -> Result<(), String> {
    for r in 0..full.nrows() {
        let nonzero = (0..full.ncols()).filter(|&c| full[(r, c)].abs() > tol).count();
        let kept_cols: Vec<usize> = (0..kept.ncols()).filter(|&c| kept[(r, c)] != 0.0).collect();
        if kept_cols.len() != nonzero.min(k) {
            return Err(format!("row {r}: kept {} of {nonzero} with k = {k}", kept_cols.len()));
        }
        let weakest = kept_cols.iter().map(|&c| full[(r, c)]).fold(f64::INFINITY, f64::min);
        for c in 0..full.ncols() {
            if kept[(r, c)] != 0.0 {
                if (kept[(r, c)] - full[(r, c)]).abs() > tol {
                    return Err(format!("({r}, {c}): {} vs {}", kept[(r, c)], full[(r, c)]));
                }
            } else if full[(r, c)] > weakest + tol {
                return Err(format!("({r}, {c}) dropped although larger than a kept entry"));
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn p3alpha_matches_dense(seed in any::<u64>(), alpha in 0.0..2.0f64, k in 1usize..10) {
        let (users, items, entries) = instance(seed, 8, 8);
        let train = matrix(users, items, &entries);
        let full = fit_p3alpha(&train, alpha, items).unwrap().similarity().to_dense();
        let oracle = dense_p3(users, items, &entries, alpha, None, items);
        prop_assert!(max_abs_diff(&full, &oracle) <= 1e-10);
        let kept = fit_p3alpha(&train, alpha, k).unwrap().similarity().to_dense();
        check_truncation(&kept, &oracle, k, 1e-10).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn rp3beta_matches_dense(seed in any::<u64>(), alpha in 0.0..2.0f64, beta in 0.0..1.0f64, k in 1usize..10) {
        let (users, items, entries) = instance(seed, 8, 8);
        let train = matrix(users, items, &entries);
        let full = fit_rp3beta(&train, alpha, beta, items).unwrap().similarity().to_dense();
        let oracle = dense_p3(users, items, &entries, alpha, Some(beta), items);
        prop_assert!(max_abs_diff(&full, &oracle) <= 1e-10);
        let kept = fit_rp3beta(&train, alpha, beta, k).unwrap().similarity().to_dense();
        check_truncation(&kept, &oracle, k, 1e-10).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn easer_matches_lu_solution(seed in any::<u64>(), lambda in 0.1..500.0f64) {
        let (users, items, entries) = instance(seed, 10, 8);
        let model = fit_easer(&matrix(users, items, &entries), lambda).unwrap();
        let oracle = dense_ease(users, items, &entries, lambda);
        prop_assert!(max_abs_diff(model.weights(), &oracle) <= 1e-8);
        for i in 0..items {
            prop_assert!(model.weights()[(i, i)].abs() <= 1e-12);
        }
    }

    #[test]
    fn svd_values_match_gram_eigenvalues(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (rng.random_range(2..=12), rng.random_range(2..=10));
        let dense = DMatrix::from_fn(m, n, |_, _| if rng.random_bool(0.5) { rng.random_range(0.5..5.0) } else { 0.0 });
        let rank = rng.random_range(1..=m.min(n));
        let svd = randomized_svd(&CsrMatrix::from_dense(&dense), rank, seed, SvdOptions::default()).unwrap();
        let expected = gram_singular_values(&dense);
        for (r, s) in svd.singular_values.iter().enumerate() {
            prop_assert!((s - expected[r]).abs() <= 1e-6, "value {r}: {s} vs {}", expected[r]);
        }
    }

    #[test]
    fn cosine_matches_double_loop(seed in any::<u64>(), shrink in prop_oneof![Just(0.0), 0.0..20.0f64], k in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, cols) = (rng.random_range(1..=10), rng.random_range(1..=8));
        let dense = DMatrix::from_fn(rows, cols, |_, _| if rng.random_bool(0.4) { rng.random_range(1..=5) as f64 } else { 0.0 });
        let sparse = CsrMatrix::from_dense(&dense);
        let full = cosine_topk(&sparse, shrink, rows).unwrap().to_dense();
        let oracle = naive_cosine(&dense, shrink, rows);
        prop_assert!(max_abs_diff(&full, &oracle) <= 1e-12);
        let kept = cosine_topk(&sparse, shrink, k).unwrap().to_dense();
        check_truncation(&kept, &oracle, k, 1e-12).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn rescaled_scores_rank_identically(
        scores in prop::collection::vec(-800i32..800, 1..40),
        scale in 1e-3..1e3f64,
        n in 1usize..20,
    ) {
        let scores: Vec<f64> = scores.into_iter().map(|s| s as f64 / 8.0).collect();
        let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
        prop_assert_eq!(top_n(&scores, n), top_n(&scaled, n));
    }

    #[test]
    fn similarity_rows_are_sparse_and_hollow(seed in any::<u64>(), k in 1usize..6) {
        let (users, items, entries) = instance(seed, 12, 10);
        let train = matrix(users, items, &entries);
        let params = HyperParams { k, ..Default::default() };
        for algorithm in [Algorithm::ItemKnnCf, Algorithm::UserKnnCf, Algorithm::P3Alpha, Algorithm::Rp3Beta] {
            let Model::Similarity(m) = fit(algorithm, &params, TrainingData::new(&train)).unwrap().model else {
                unreachable!()
            };
            let s = m.similarity();
            for r in 0..s.nrows() {
                prop_assert!(s.row_nnz(r) <= k);
                prop_assert_eq!(s.get(r, r), 0.0);
            }
        }
    }

    #[test]
    fn svd_factors_are_orthonormal(seed in any::<u64>()) {
        let (users, items, entries) = instance(seed, 12, 10);
        let train = matrix(users, items, &entries);
        let rank = 1 + (seed as usize) % users.min(items);
        let svd = randomized_svd(train.csr(), rank, seed, SvdOptions::default()).unwrap();
        let eye = DMatrix::identity(rank, rank);
        prop_assert!(max_abs_diff(&(svd.u.transpose() * &svd.u), &eye) <= 1e-6);
        prop_assert!(max_abs_diff(&(svd.v.transpose() * &svd.v), &eye) <= 1e-6);
    }
}

#[test]
fn recommendations_do_not_depend_on_worker_count() {
    let (users, items, entries) = instance(21, 40, 30);
    let train = matrix(users, items, &entries);
    let lists = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            Algorithm::ALL
                .iter()
                .filter(|a| !a.needs_item_features() && !a.needs_user_features())
                .map(|&a| {
                    let params = HyperParams { k: 7, factors: 4, lambda: 5.0, seed: 3, ..Default::default() };
                    let model = fit(a, &params, TrainingData::new(&train)).unwrap();
                    (0..users)
                        .map(|u| recommend(&model, u, 5, a.default_exclude_seen(), &train).unwrap())
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
    };
    assert_eq!(lists(1), lists(4));
}

#[test]
fn puresvd_is_reproducible_per_seed() {
    let (users, items, entries) = instance(5, 30, 20);
    let train = matrix(users, items, &entries);
    let params = HyperParams { factors: 3, seed: 11, ..Default::default() };
    let a = fit(Algorithm::PureSvd, &params, TrainingData::new(&train)).unwrap();
    let b = fit(Algorithm::PureSvd, &params, TrainingData::new(&train)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn short_lists_are_flagged() {
    let train = matrix(1, 3, &[(0, 0, 1.0), (0, 1, 1.0)]);
    let model = fit(Algorithm::TopPop, &HyperParams::default(), TrainingData::new(&train)).unwrap();
    let rec = recommend(&model, 0, 3, true, &train).unwrap();
    assert_eq!(rec.items, vec![2]);
    assert!(rec.short);
}

#[test]
fn unknown_user_is_rejected() {
    let train = matrix(1, 2, &[(0, 0, 1.0)]);
    let model = fit(Algorithm::TopPop, &HyperParams::default(), TrainingData::new(&train)).unwrap();
    let err = recommend(&model, 3, 1, false, &train).unwrap_err();
    assert!(matches!(err, carousel_eval::Error::UnknownUser { user: 3, .. }));
}
