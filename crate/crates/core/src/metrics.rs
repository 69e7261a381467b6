//! Duplicate-aware page metrics.
//!
//! An item that appears in several carousels of one page counts only at its
//! most visible occurrence: the cell with the smallest discount argument
//! `alpha * i + beta * j`, ties going to the smaller row and then the smaller
//! column. Every other occurrence is masked and behaves like a non-relevant
//! recommendation.
//!
//! Coordinates passed to and returned from this module are 1-based.
//!
//! Two families of metrics are computed on a page:
//!
//! * one-dimensional Precision, AP and NDCG over the row-major concatenation of
//!   the page's occupied cells (padding skipped, masked duplicates and
//!   placeholders keep their positions);
//! * NDCG2D, which discounts each cell by `log2(alpha * i + beta * j)`.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CarouselPage, Cell, DiscountWeights, GroundTruth, UserTruth};

/// Per-user pages keyed by user index.
pub type PageSet = BTreeMap<usize, CarouselPage>;

/// Which occurrence of each item counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    kept: Vec<Vec<bool>>,
}

impl InstanceMask {
    /// Whether the occupied cell `(i, j)` holds the counted instance of its item.
    /// Placeholders and padding are never kept.
    pub fn is_kept(&self, i: usize, j: usize) -> bool {
        self.kept
            .get(i.wrapping_sub(1))
            .and_then(|row| row.get(j.wrapping_sub(1)))
            .copied()
            .unwrap_or(false)
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().flatten().filter(|&&k| k).count()
    }
}

fn better_cell(key: f64, i: usize, j: usize, than: (f64, usize, usize)) -> bool {
    key.total_cmp(&than.0).then(i.cmp(&than.1)).then(j.cmp(&than.2)) == std::cmp::Ordering::Less
}

/// Keeps, for every distinct item on the page, the occurrence with the smallest
/// cell key (then smaller row, then smaller column). Ground truth plays no role.
pub fn resolve_mask(page: &CarouselPage, w: DiscountWeights) -> InstanceMask {
    let mut best: HashMap<usize, (f64, usize, usize)> = HashMap::new();
    for (i, j, cell) in page.cells() {
        let Cell::Item(item) = cell else { continue };
        let key = w.cell_key(i, j);
        match best.entry(item) {
            Entry::Vacant(e) => {
                e.insert((key, i, j));
            }
            Entry::Occupied(mut e) => {
                if better_cell(key, i, j, *e.get()) {
                    e.insert((key, i, j));
                }
            }
        }
    }
    let kept = page
        .rows()
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.cells()
                .iter()
                .enumerate()
                .map(|(c, cell)| match cell {
                    Cell::Item(item) => {
                        let (_, bi, bj) = best[item];
                        (bi, bj) == (r + 1, c + 1)
                    }
                    Cell::Placeholder => false,
                })
                .collect()
        })
        .collect();
    InstanceMask { kept }
}

/// Dense relevance over the padded `rows x max_length` rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl RelevanceGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RelevanceGrid {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut grid = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                grid.set(r + 1, c + 1, v);
            }
        }
        grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i - 1) * self.cols + (j - 1)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values[(i - 1) * self.cols + (j - 1)] = value;
    }

    /// Nonzero cells in row-major order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(move |(k, &v)| (k / self.cols + 1, k % self.cols + 1, v))
    }

    pub fn transposed(&self) -> RelevanceGrid {
        let mut out = Self::zeros(self.cols, self.rows);
        for (i, j, v) in self.nonzero() {
            out.set(j, i, v);
        }
        out
    }
}

/// Relevance of each kept item according to the user's ground truth; masked
/// duplicates, placeholders and padding are 0.
pub fn relevance_grid(page: &CarouselPage, gt: UserTruth<'_>, mask: &InstanceMask) -> RelevanceGrid {
    let mut grid = RelevanceGrid::zeros(page.num_rows(), page.max_length());
    for (i, j, cell) in page.cells() {
        if let Cell::Item(item) = cell {
            if mask.is_kept(i, j) {
                grid.set(i, j, gt.relevance(item));
            }
        }
    }
    grid
}

fn gain(rel: f64) -> f64 {
    rel.exp2() - 1.0
}

/// `sum (2^rel(i,j) - 1) / log2(alpha*i + beta*j)` over the grid.
pub fn dcg2d(grid: &RelevanceGrid, w: DiscountWeights) -> f64 {
    grid.nonzero()
        .map(|(i, j, rel)| gain(rel) / w.cell_key(i, j).log2())
        .sum()
}

/// DCG2D of the ideal arrangement: the largest relevances placed on the occupied
/// cells in ascending cell-key order. `row_lengths[r]` is the number of occupied
/// cells of row `r + 1`; padding never receives relevance.
pub fn idcg2d(relevances: &[f64], row_lengths: &[usize], w: DiscountWeights) -> f64 {
    if relevances.is_empty() {
        return 0.0;
    }
    let mut cells: Vec<(f64, usize, usize)> = row_lengths
        .iter()
        .enumerate()
        .flat_map(|(r, &len)| (1..=len).map(move |j| (r + 1, j)))
        .map(|(i, j)| (w.cell_key(i, j), i, j))
        .collect();
    cells.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut sorted = relevances.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    sorted
        .iter()
        .zip(&cells)
        .map(|(&rel, &(key, _, _))| gain(rel) / key.log2())
        .sum()
}

/// DCG2D / IDCG2D for one user's page; 0 when the user has no ground truth.
pub fn ndcg2d(page: &CarouselPage, gt: UserTruth<'_>, w: DiscountWeights) -> f64 {
    let mask = resolve_mask(page, w);
    ndcg2d_with_mask(page, gt, &mask, w)
}

fn ndcg2d_with_mask(
    page: &CarouselPage,
    gt: UserTruth<'_>,
    mask: &InstanceMask,
    w: DiscountWeights,
) -> f64 {
    let relevances: Vec<f64> = gt.relevances().collect();
    let ideal = idcg2d(&relevances, &page.row_lengths(), w);
    if ideal == 0.0 {
        return 0.0;
    }
    dcg2d(&relevance_grid(page, gt, mask), w) / ideal
}

/// One occupied cell in row-major reading order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConcatEntry {
    /// `None` for a placeholder.
    pub item: Option<usize>,
    pub kept: bool,
    /// 1-based position in the concatenated list.
    pub position: usize,
}

/// Row-major traversal of occupied cells; padding is skipped and positions are
/// renumbered `1..=occupied`.
pub fn concat_order(page: &CarouselPage, mask: &InstanceMask) -> Vec<ConcatEntry> {
    page.cells()
        .enumerate()
        .map(|(k, (i, j, cell))| ConcatEntry {
            item: cell.item(),
            kept: mask.is_kept(i, j),
            position: k + 1,
        })
        .collect()
}

/// Relevance at each concatenated position (0 for masked, placeholder or irrelevant).
fn concat_relevances(page: &CarouselPage, gt: UserTruth<'_>, mask: &InstanceMask) -> Vec<f64> {
    concat_order(page, mask)
        .into_iter()
        .map(|e| match (e.item, e.kept) {
            (Some(item), true) => gt.relevance(item),
            _ => 0.0,
        })
        .collect()
}

fn precision_of(rels: &[f64]) -> f64 {
    if rels.is_empty() {
        return 0.0;
    }
    rels.iter().filter(|&&r| r > 0.0).count() as f64 / rels.len() as f64
}

fn average_precision_of(rels: &[f64], truth_len: usize) -> f64 {
    let denominator = truth_len.min(rels.len());
    if denominator == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &rel) in rels.iter().enumerate() {
        if rel > 0.0 {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    sum / denominator as f64
}

fn ndcg_of(rels: &[f64], gt: UserTruth<'_>) -> f64 {
    let dcg: f64 = rels
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(k, &r)| gain(r) / ((k + 2) as f64).log2())
        .sum();
    let mut ideal: Vec<f64> = gt.relevances().collect();
    ideal.sort_unstable_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(rels.len())
        .enumerate()
        .map(|(k, &r)| gain(r) / ((k + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Kept relevant instances divided by the number of occupied cells.
pub fn precision_page(page: &CarouselPage, gt: UserTruth<'_>, w: DiscountWeights) -> f64 {
    let mask = resolve_mask(page, w);
    precision_of(&concat_relevances(page, gt, &mask))
}

/// Average precision over the row-major concatenation, normalized by
/// `min(|gt|, occupied cells)`.
pub fn average_precision_page(page: &CarouselPage, gt: UserTruth<'_>, w: DiscountWeights) -> f64 {
    let mask = resolve_mask(page, w);
    average_precision_of(&concat_relevances(page, gt, &mask), gt.len())
}

/// Classic NDCG over the row-major concatenation; the ideal list has as many
/// positions as the page has occupied cells.
pub fn ndcg_page(page: &CarouselPage, gt: UserTruth<'_>, w: DiscountWeights) -> f64 {
    let mask = resolve_mask(page, w);
    ndcg_of(&concat_relevances(page, gt, &mask), gt)
}

/// Every page-level metric of one user.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PageMetrics {
    pub precision: f64,
    pub average_precision: f64,
    pub ndcg: f64,
    pub ndcg2d: f64,
    pub counted_hits: usize,
}

/// Computes all metrics with a single mask resolution.
pub fn page_metrics(page: &CarouselPage, gt: UserTruth<'_>, w: DiscountWeights) -> PageMetrics {
    if gt.is_empty() {
        return PageMetrics::default();
    }
    let mask = resolve_mask(page, w);
    let rels = concat_relevances(page, gt, &mask);
    PageMetrics {
        precision: precision_of(&rels),
        average_precision: average_precision_of(&rels, gt.len()),
        ndcg: ndcg_of(&rels, gt),
        ndcg2d: ndcg2d_with_mask(page, gt, &mask, w),
        counted_hits: rels.iter().filter(|&&r| r > 0.0).count(),
    }
}

/// Means of [`PageMetrics`] over the evaluated users.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricSummary {
    pub users: usize,
    pub precision: f64,
    pub map: f64,
    pub ndcg: f64,
    pub ndcg2d: f64,
    pub mean_hits: f64,
}

impl MetricSummary {
    /// Arithmetic mean, accumulated in slice order so the result does not
    /// depend on how the per-user values were computed.
    pub fn mean_of(per_user: &[PageMetrics]) -> Result<Self> {
        if per_user.is_empty() {
            return Err(Error::invalid("no user with non-empty ground truth to evaluate"));
        }
        let n = per_user.len() as f64;
        let mut s = MetricSummary {
            users: per_user.len(),
            ..Default::default()
        };
        for m in per_user {
            s.precision += m.precision;
            s.map += m.average_precision;
            s.ndcg += m.ndcg;
            s.ndcg2d += m.ndcg2d;
            s.mean_hits += m.counted_hits as f64;
        }
        s.precision /= n;
        s.map /= n;
        s.ndcg /= n;
        s.ndcg2d /= n;
        s.mean_hits /= n;
        Ok(s)
    }
}

/// Mean metrics over every user that has ground truth. Each such user needs a page.
pub fn evaluate_page_set(pages: &PageSet, gt: &GroundTruth, w: DiscountWeights) -> Result<MetricSummary> {
    let users: Vec<usize> = gt.users_with_truth().collect();
    let per_user = users
        .par_iter()
        .map(|&u| {
            let page = pages
                .get(&u)
                .ok_or_else(|| Error::invalid(format!("no page for user {u}")))?;
            Ok(page_metrics(page, gt.user(u), w))
        })
        .collect::<Result<Vec<_>>>()?;
    MetricSummary::mean_of(&per_user)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Carousel;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;
    const E: usize = 4;

    fn unit() -> DiscountWeights {
        DiscountWeights::default()
    }

    fn two_rows() -> CarouselPage {
        CarouselPage::from_items(&[&[A, B, C], &[D, A, E]]).unwrap()
    }

    fn truth(items: &[usize]) -> GroundTruth {
        GroundTruth::binary(vec![items.to_vec()]).unwrap()
    }

    #[test]
    fn mask_keeps_smallest_key() {
        let mask = resolve_mask(&two_rows(), unit());
        assert!(mask.is_kept(1, 1));
        assert!(!mask.is_kept(2, 2));
        assert_eq!(mask.kept_count(), 5);

        let stacked = CarouselPage::from_items(&[&[A], &[A]]).unwrap();
        let mask = resolve_mask(&stacked, unit());
        assert!(mask.is_kept(1, 1) && !mask.is_kept(2, 1));
    }

    #[test]
    fn mask_tie_goes_to_upper_row() {
        let page = CarouselPage::from_items(&[&[B, A], &[A, C]]).unwrap();
        let mask = resolve_mask(&page, unit());
        assert!(mask.is_kept(1, 2));
        assert!(!mask.is_kept(2, 1));
    }

    #[test]
    fn mask_follows_weights() {
        // beta large: column dominates, so A at (2,1) key 2+10=12 beats (1,2) key 1+20=21.
        let page = CarouselPage::from_items(&[&[B, A], &[A, C]]).unwrap();
        let mask = resolve_mask(&page, DiscountWeights::new(1.0, 10.0).unwrap());
        assert!(mask.is_kept(2, 1));
        assert!(!mask.is_kept(1, 2));
    }

    #[test]
    fn relevance_grid_cells() {
        let page = two_rows();
        let gt = truth(&[A, C, E]);
        let grid = relevance_grid(&page, gt.user(0), &resolve_mask(&page, unit()));
        let nz: Vec<_> = grid.nonzero().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(nz, vec![(1, 1), (1, 3), (2, 3)]);

        let empty = truth(&[]);
        let grid = relevance_grid(&page, empty.user(0), &resolve_mask(&page, unit()));
        assert_eq!(grid.nonzero().count(), 0);

        let ragged = CarouselPage::from_items(&[&[A, B], &[C]]).unwrap();
        let gt = truth(&[C]);
        let grid = relevance_grid(&ragged, gt.user(0), &resolve_mask(&ragged, unit()));
        assert_eq!(grid.get(2, 1), 1.0);
        assert_eq!(grid.get(2, 2), 0.0);
    }

    #[test]
    fn dcg2d_worked_example() {
        let page = two_rows();
        let gt = truth(&[A, C, E]);
        let grid = relevance_grid(&page, gt.user(0), &resolve_mask(&page, unit()));
        // 1/log2(2) + 1/log2(4) + 1/log2(5)
        assert!((dcg2d(&grid, unit()) - 1.930_676_558_073_393).abs() < 1e-12);
        assert_eq!(dcg2d(&RelevanceGrid::zeros(2, 3), unit()), 0.0);
        assert_eq!(dcg2d(&RelevanceGrid::from_rows(&[vec![1.0]]), unit()), 1.0);
    }

    #[test]
    fn idcg2d_worked_example() {
        // keys 2, 3, 3 -> 1 + 2 / log2(3)
        let v = idcg2d(&[1.0, 1.0, 1.0], &[3, 3], unit());
        assert!((v - 2.261_859_507_142_915).abs() < 1e-12);
        assert_eq!(idcg2d(&[], &[3, 3], unit()), 0.0);
        assert_eq!(idcg2d(&[1.0], &[4, 1, 2], unit()), 1.0);
    }

    #[test]
    fn idcg2d_never_fills_padding() {
        // five relevances but only three occupied cells
        let v = idcg2d(&[1.0; 5], &[2, 1], unit());
        let expected = 1.0 + 2.0 / 3f64.log2();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn ndcg2d_worked_example() {
        let gt = truth(&[A, C, E]);
        let v = ndcg2d(&two_rows(), gt.user(0), unit());
        assert!((v - 0.853_579_345_656_239).abs() < 1e-12, "{v}");
        assert!((v - 0.85358).abs() < 5e-6);
    }

    #[test]
    fn ndcg2d_ideal_page_is_one() {
        // Relevant items on (1,1), (1,2), (2,1): the three smallest keys.
        let page = CarouselPage::from_items(&[&[A, B, C], &[D, E]]).unwrap();
        let gt = truth(&[A, B, D]);
        assert!((ndcg2d(&page, gt.user(0), unit()) - 1.0).abs() < 1e-12);
        assert_eq!(ndcg2d(&page, truth(&[]).user(0), unit()), 0.0);
    }

    #[test]
    fn concat_order_row_major() {
        let page = CarouselPage::from_items(&[&[A], &[B, C]]).unwrap();
        let order = concat_order(&page, &resolve_mask(&page, unit()));
        let items: Vec<_> = order.iter().map(|e| (e.item, e.position)).collect();
        assert_eq!(items, vec![(Some(A), 1), (Some(B), 2), (Some(C), 3)]);

        let page = two_rows();
        let order = concat_order(&page, &resolve_mask(&page, unit()));
        assert_eq!(order.len(), 6);
        assert_eq!(order[4].item, Some(A));
        assert!(!order[4].kept);
        assert!(order.iter().enumerate().all(|(k, e)| e.kept == (k != 4)));
    }

    #[test]
    fn one_dimensional_worked_examples() {
        let page = two_rows();
        let gt = truth(&[A, C, E]);
        assert_eq!(precision_page(&page, gt.user(0), unit()), 0.5);
        let ap = average_precision_page(&page, gt.user(0), unit());
        assert!((ap - (1.0 + 2.0 / 3.0 + 0.5) / 3.0).abs() < 1e-12);
        let ndcg = ndcg_page(&page, gt.user(0), unit());
        let expected = (1.0 + 0.5 + 1.0 / 7f64.log2()) / (1.0 + 1.0 / 3f64.log2() + 0.5);
        assert!((ndcg - expected).abs() < 1e-12);
        assert!((ndcg - 0.87108).abs() < 5e-6);
    }

    #[test]
    fn one_dimensional_edge_cases() {
        let single = CarouselPage::from_items(&[&[A]]).unwrap();
        assert_eq!(precision_page(&single, truth(&[A]).user(0), unit()), 1.0);
        assert_eq!(precision_page(&single, truth(&[]).user(0), unit()), 0.0);
        assert_eq!(average_precision_page(&single, truth(&[A, 9]).user(0), unit()), 1.0);
        assert_eq!(average_precision_page(&two_rows(), truth(&[9]).user(0), unit()), 0.0);
        let perfect = CarouselPage::from_items(&[&[A, B]]).unwrap();
        assert_eq!(ndcg_page(&perfect, truth(&[A, B]).user(0), unit()), 1.0);
    }

    #[test]
    fn placeholders_occupy_positions() {
        let row = Carousel::padded("p", [A], 4).unwrap();
        let page = CarouselPage::new(vec![row]).unwrap();
        let gt = truth(&[A]);
        let m = page_metrics(&page, gt.user(0), unit());
        assert_eq!(m.precision, 0.25);
        assert_eq!(m.average_precision, 1.0);
        assert_eq!(m.counted_hits, 1);
    }

    #[test]
    fn graded_gain() {
        let page = CarouselPage::from_items(&[&[A, B]]).unwrap();
        let gt = GroundTruth::new(vec![vec![(A, 1.0), (B, 2.0)]]).unwrap();
        // dcg = 1/1 + 3/log2(3); idcg = 3/1 + 1/log2(3)
        let expected = (1.0 + 3.0 / 3f64.log2()) / (3.0 + 1.0 / 3f64.log2());
        assert!((ndcg_page(&page, gt.user(0), unit()) - expected).abs() < 1e-12);
        assert!((ndcg2d(&page, gt.user(0), unit()) - expected).abs() < 1e-12);
    }

    #[test]
    fn page_set_mean_skips_users_without_truth() {
        let mut pages = PageSet::new();
        pages.insert(0, CarouselPage::from_items(&[&[A, B]]).unwrap());
        pages.insert(1, CarouselPage::from_items(&[&[C, D]]).unwrap());
        pages.insert(2, CarouselPage::from_items(&[&[C, D]]).unwrap());
        let gt = GroundTruth::binary(vec![vec![A], vec![E], vec![]]).unwrap();
        let s = evaluate_page_set(&pages, &gt, unit()).unwrap();
        assert_eq!(s.users, 2);
        assert_eq!(s.precision, 0.25);

        let none = GroundTruth::binary(vec![vec![], vec![]]).unwrap();
        assert!(evaluate_page_set(&pages, &none, unit()).is_err());
        let missing = GroundTruth::binary(vec![vec![], vec![], vec![], vec![A]]).unwrap();
        assert!(evaluate_page_set(&pages, &missing, unit()).is_err());
    }
}
