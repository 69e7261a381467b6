//! Brute-force reference implementations shared by the integration and
//! acceptance tests. Everything here works on plain vectors and dense matrices
//! and shares no code with the library's optimized paths.

#![allow(dead_code)]

use std::collections::BTreeMap;

use carousel_eval::model::{Carousel, CarouselPage, Cell, GroundTruth};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// A page as rows of cells; `None` is a placeholder.
pub type Rows = Vec<Vec<Option<usize>>>;

pub fn to_page(rows: &Rows) -> CarouselPage {
    let carousels = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let cells = r.iter().map(|c| c.map_or(Cell::Placeholder, Cell::Item)).collect();
            Carousel::from_cells(format!("r{i}"), cells).unwrap()
        })
        .collect();
    CarouselPage::new(carousels).unwrap()
}

pub fn to_truth(gt: &[(usize, f64)]) -> GroundTruth {
    GroundTruth::new(vec![gt.to_vec()]).unwrap()
}

fn key(i: usize, j: usize, a: f64, b: f64) -> f64 {
    a * i as f64 + b * j as f64
}

fn rel_of(gt: &[(usize, f64)], item: usize) -> f64 {
    gt.iter().find(|&&(g, _)| g == item).map_or(0.0, |&(_, r)| r)
}

fn gain(rel: f64) -> f64 {
    2f64.powf(rel) - 1.0
}

/// Kept cell (1-based) of each distinct item: compare every pair of occurrences.
pub fn oracle_kept(rows: &Rows, a: f64, b: f64) -> BTreeMap<usize, (usize, usize)> {
    let mut kept: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (i0, row) in rows.iter().enumerate() {
        for (j0, cell) in row.iter().enumerate() {
            let Some(item) = *cell else { continue };
            let (i, j) = (i0 + 1, j0 + 1);
            let better = match kept.get(&item) {
                None => true,
                Some(&(ki, kj)) => {
                    let (k_new, k_old) = (key(i, j, a, b), key(ki, kj, a, b));
                    k_new < k_old || (k_new == k_old && (i, j) < (ki, kj))
                }
            };
            if better {
                kept.insert(item, (i, j));
            }
        }
    }
    kept
}

/// Dense relevance rectangle, rows × longest row.
pub fn oracle_grid(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> Vec<Vec<f64>> {
    let kept = oracle_kept(rows, a, b);
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut grid = vec![vec![0.0; width]; rows.len()];
    for (i0, row) in rows.iter().enumerate() {
        for (j0, cell) in row.iter().enumerate() {
            if let Some(item) = *cell {
                if kept[&item] == (i0 + 1, j0 + 1) {
                    grid[i0][j0] = rel_of(gt, item);
                }
            }
        }
    }
    grid
}

pub fn oracle_dcg2d(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> f64 {
    let grid = oracle_grid(rows, gt, a, b);
    let mut total = 0.0;
    for (i0, r) in grid.iter().enumerate() {
        for (j0, &rel) in r.iter().enumerate() {
            total += gain(rel) / key(i0 + 1, j0 + 1, a, b).log2();
        }
    }
    total
}

fn occupied_keys(rows: &Rows, a: f64, b: f64) -> Vec<f64> {
    rows.iter()
        .enumerate()
        .flat_map(|(i0, r)| (0..r.len()).map(move |j0| key(i0 + 1, j0 + 1, a, b)))
        .collect()
}

/// Ideal DCG2D by the rearrangement argument: largest gains on smallest keys.
pub fn oracle_idcg2d_sorted(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> f64 {
    let mut keys = occupied_keys(rows, a, b);
    keys.sort_by(f64::total_cmp);
    let mut gains: Vec<f64> = gt.iter().map(|&(_, r)| gain(r)).collect();
    gains.sort_by(|x, y| y.total_cmp(x));
    keys.iter().zip(gains).map(|(k, g)| g / k.log2()).sum()
}

/// Every assignment of the relevance multiset (padded with zeros) to the
/// occupied cells, calling `visit` with each assignment's DCG2D.
pub fn for_each_assignment(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64, mut visit: impl FnMut(f64)) {
    let keys = occupied_keys(rows, a, b);
    let mut values: Vec<f64> = gt.iter().map(|&(_, r)| r).collect();
    while values.len() < keys.len() {
        values.push(0.0);
    }
    let n = values.len();
    // Heap's algorithm over all n! orders; the first keys.len() values fill the cells.
    let score = |v: &[f64]| keys.iter().zip(v).map(|(k, &r)| gain(r) / k.log2()).sum::<f64>();
    let mut c = vec![0usize; n];
    visit(score(&values));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                values.swap(0, i);
            } else {
                values.swap(c[i], i);
            }
            visit(score(&values));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn oracle_idcg2d_exhaustive(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> f64 {
    let mut best = 0.0f64;
    for_each_assignment(rows, gt, a, b, |v| best = best.max(v));
    best
}

pub fn oracle_ndcg2d(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> f64 {
    let ideal = oracle_idcg2d_sorted(rows, gt, a, b);
    if ideal == 0.0 {
        0.0
    } else {
        oracle_dcg2d(rows, gt, a, b) / ideal
    }
}

/// Relevance of every occupied cell in row-major order; masked duplicates are 0.
pub fn oracle_concat(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> Vec<f64> {
    let kept = oracle_kept(rows, a, b);
    let mut out = Vec::new();
    for (i0, row) in rows.iter().enumerate() {
        for (j0, cell) in row.iter().enumerate() {
            out.push(match *cell {
                Some(item) if kept[&item] == (i0 + 1, j0 + 1) => rel_of(gt, item),
                _ => 0.0,
            });
        }
    }
    out
}

pub fn oracle_hits(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> usize {
    oracle_concat(rows, gt, a, b).iter().filter(|&&r| r > 0.0).count()
}

pub fn oracle_precision(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> f64 {
    let list = oracle_concat(rows, gt, a, b);
    if gt.is_empty() || list.is_empty() {
        return 0.0;
    }
    list.iter().filter(|&&r| r > 0.0).count() as f64 / list.len() as f64
}

pub fn oracle_ap(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> f64 {
    let list = oracle_concat(rows, gt, a, b);
    if gt.is_empty() || list.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 0..list.len() {
        if list[k] > 0.0 {
            let hits_so_far = list[..=k].iter().filter(|&&r| r > 0.0).count();
            sum += hits_so_far as f64 / (k + 1) as f64;
        }
    }
    sum / gt.len().min(list.len()) as f64
}

pub fn oracle_ndcg(rows: &Rows, gt: &[(usize, f64)], a: f64, b: f64) -> f64 {
    let list = oracle_concat(rows, gt, a, b);
    if gt.is_empty() {
        return 0.0;
    }
    let dcg: f64 = list.iter().enumerate().map(|(k, &r)| gain(r) / ((k + 2) as f64).log2()).sum();
    let mut ideal: Vec<f64> = gt.iter().map(|&(_, r)| r).collect();
    ideal.sort_by(|x, y| y.total_cmp(x));
    ideal.truncate(list.len());
    let idcg: f64 = ideal.iter().enumerate().map(|(k, &r)| gain(r) / ((k + 2) as f64).log2()).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Random page: up to `max_rows` rows of 1..=`max_cols` cells drawn from
/// `items` ids (so cross-row duplicates are common), about one cell in eight a
/// placeholder, no duplicates within a row.
pub fn random_rows(rng: &mut impl Rng, max_rows: usize, max_cols: usize, items: usize) -> Rows {
    let n_rows = rng.random_range(1..=max_rows);
    (0..n_rows)
        .map(|_| {
            let len = rng.random_range(1..=max_cols);
            let mut row: Vec<Option<usize>> = Vec::with_capacity(len);
            for _ in 0..len {
                let item = rng.random_range(0..items);
                if rng.random_range(0..8) == 0 || row.contains(&Some(item)) {
                    row.push(None);
                } else {
                    row.push(Some(item));
                }
            }
            row
        })
        .collect()
}

/// Random ground truth over `0..items + 3` (some items never on the page),
/// binary or graded.
pub fn random_truth(rng: &mut impl Rng, items: usize, max_len: usize) -> Vec<(usize, f64)> {
    let graded = rng.random_bool(0.5);
    let len = rng.random_range(0..=max_len.min(items + 3));
    let mut ids: Vec<usize> = (0..items + 3).collect();
    for i in 0..len {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    let mut gt: Vec<(usize, f64)> = ids[..len]
        .iter()
        .map(|&i| (i, if graded { rng.random_range(1..=4) as f64 * 0.75 } else { 1.0 }))
        .collect();
    gt.sort_by_key(|&(i, _)| i);
    gt
}

/// A single row with no placeholders and no duplicates.
pub fn random_list(rng: &mut impl Rng, max_len: usize, items: usize) -> Vec<Option<usize>> {
    let len = rng.random_range(1..=max_len.min(items));
    let mut ids: Vec<usize> = (0..items).collect();
    for i in 0..len {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    ids[..len].iter().map(|&i| Some(i)).collect()
}

pub fn rows_strategy(max_rows: usize, max_cols: usize, items: usize) -> impl Strategy<Value = Rows> {
    let cell = prop_oneof![1 => Just(None), 7 => (0..items).prop_map(Some)];
    let row = prop::collection::vec(cell, 1..=max_cols).prop_map(|mut r| {
        for j in 0..r.len() {
            if r[j].is_some() && r[..j].contains(&r[j]) {
                r[j] = None;
            }
        }
        r
    });
    prop::collection::vec(row, 1..=max_rows)
}

pub fn truth_strategy(items: usize) -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::btree_map(0..items + 3, prop_oneof![Just(1.0), (1..=4u32).prop_map(|g| g as f64 * 0.75)], 0..=items)
        .prop_map(|m| m.into_iter().collect())
}

pub fn weights_strategy() -> impl Strategy<Value = (f64, f64)> {
    (prop_oneof![Just(1.0), 1.0..4.0f64], prop_oneof![Just(1.0), 1.0..4.0f64])
}

pub fn dense(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, f)
}

pub fn random_binary(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for u in 0..rows {
        for i in 0..cols {
            if rng.random_bool(density) {
                out.push((u, i, 1.0));
            }
        }
    }
    if out.is_empty() {
        out.push((0, 0, 1.0));
    }
    out
}

fn to_dense(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for &(u, i, v) in entries {
        m[(u, i)] = v;
    }
    m
}

/// Keeps the `k` largest nonzero entries of every row (ties to the smaller column).
fn dense_top_k(mut s: DMatrix<f64>, k: usize) -> DMatrix<f64> {
    for r in 0..s.nrows() {
        let mut cols: Vec<usize> = (0..s.ncols()).filter(|&c| s[(r, c)] != 0.0).collect();
        cols.sort_by(|&x, &y| s[(r, y)].total_cmp(&s[(r, x)]).then(x.cmp(&y)));
        for &c in cols.iter().skip(k) {
            s[(r, c)] = 0.0;
        }
    }
    s
}

/// Item-item random-walk similarity computed with dense matrix products.
pub fn dense_p3(
    users: usize,
    items: usize,
    entries: &[(usize, usize, f64)],
    alpha: f64,
    beta: Option<f64>,
    k: usize,
) -> DMatrix<f64> {
    let r = to_dense(users, items, entries);
    let mut p_ui = DMatrix::zeros(users, items);
    let mut p_iu = DMatrix::zeros(items, users);
    for u in 0..users {
        let row_sum: f64 = r.row(u).sum();
        for i in 0..items {
            if r[(u, i)] != 0.0 {
                p_ui[(u, i)] = (r[(u, i)] / row_sum).powf(alpha);
            }
        }
    }
    for i in 0..items {
        let col_sum: f64 = r.column(i).sum();
        for u in 0..users {
            if r[(u, i)] != 0.0 {
                p_iu[(i, u)] = (r[(u, i)] / col_sum).powf(alpha);
            }
        }
    }
    let mut s = &p_iu * &p_ui;
    if let Some(beta) = beta {
        for j in 0..items {
            let pop = (0..users).filter(|&u| r[(u, j)] != 0.0).count() as f64;
            for i in 0..items {
                s[(i, j)] = if pop > 0.0 { s[(i, j)] / pop.powf(beta) } else { 0.0 };
            }
        }
    }
    for i in 0..items {
        s[(i, i)] = 0.0;
    }
    dense_top_k(s, k)
}

/// Closed-form linear autoencoder weights through an LU inverse.
pub fn dense_ease(users: usize, items: usize, entries: &[(usize, usize, f64)], lambda: f64) -> DMatrix<f64> {
    let r = to_dense(users, items, entries);
    let g = r.transpose() * &r + DMatrix::identity(items, items) * lambda;
    let p = g.lu().try_inverse().expect("regularized Gram matrix is invertible");
    let mut b = DMatrix::zeros(items, items);
    for i in 0..items {
        for j in 0..items {
            if i != j {
                b[(i, j)] = -p[(i, j)] / p[(j, j)];
            }
        }
    }
    b
}

/// Singular values from the eigenvalues of the Gram matrix, descending.
pub fn gram_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let gram = a.transpose() * a;
    let mut ev: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Double-loop shrunk cosine between rows, top-`k` per row.
pub fn naive_cosine(m: &DMatrix<f64>, shrink: f64, k: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut s = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let mut dot = 0.0;
            let mut na = 0.0;
            let mut nb = 0.0;
            for c in 0..m.ncols() {
                dot += m[(a, c)] * m[(b, c)];
                na += m[(a, c)] * m[(a, c)];
                nb += m[(b, c)] * m[(b, c)];
            }
            let den = na.sqrt() * nb.sqrt() + shrink;
            s[(a, b)] = if den == 0.0 { 0.0 } else { dot / den };
        }
    }
    dense_top_k(s, k)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
