//! Domain types shared by every stage: interaction data, splits, carousel
//! pages, ground truth and the two-dimensional discount weights.
//!
//! Users and items are dense 0-based indices. Page cells are stored 0-based but
//! every metric formula addresses them 1-based, `(row i, column j)` with
//! `i, j >= 1`, so cell `(1, 1)` is the top-left corner of the screen.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Sparse user × item feedback. Values are strictly positive; absent pairs are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    matrix: CsrMatrix,
}

impl InteractionMatrix {
    pub fn new(
        num_users: usize,
        num_items: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let entries: Vec<_> = entries.into_iter().collect();
        if let Some(&(u, i, v)) = entries.iter().find(|e| e.2 <= 0.0 || e.2.is_nan()) {
            return Err(Error::invalid(format!(
                "interaction ({u}, {i}) has non-positive value {v}"
            )));
        }
        Ok(InteractionMatrix {
            matrix: CsrMatrix::from_triplets(num_users, num_items, entries)?,
        })
    }

    pub fn num_users(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_items(&self) -> usize {
        self.matrix.ncols()
    }

    /// Number of stored interactions.
    pub fn len(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn user_row(&self, user: usize) -> (&[usize], &[f64]) {
        self.matrix.row(user)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.matrix.iter()
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.matrix.get(user, item) != 0.0
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Same sparsity pattern with every value set to 1.
    pub fn binarized(&self) -> InteractionMatrix {
        InteractionMatrix {
            matrix: self.matrix.map_values(|_| 1.0),
        }
    }

    pub fn density(&self) -> f64 {
        let cells = self.num_users() as f64 * self.num_items() as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.len() as f64 / cells
        }
    }
}

/// Sparse entity × feature weights (item genres, tags, decades; user attributes).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    matrix: CsrMatrix,
}

impl FeatureMatrix {
    pub fn new(
        num_entities: usize,
        num_features: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let entries: Vec<_> = entries.into_iter().collect();
        if let Some(&(e, f, w)) = entries.iter().find(|e| !(e.2 >= 0.0)) {
            return Err(Error::invalid(format!(
                "feature weight ({e}, {f}) = {w} is negative"
            )));
        }
        Ok(FeatureMatrix {
            matrix: CsrMatrix::from_triplets(num_entities, num_features, entries)?,
        })
    }

    pub fn num_entities(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.matrix
    }
}

/// Train / validation / test partition of one interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: InteractionMatrix,
    pub validation: InteractionMatrix,
    pub test: InteractionMatrix,
    pub seed: u64,
}

impl DatasetSplit {
    /// Checks that the three parts share one index space and are pairwise disjoint.
    pub fn new(
        train: InteractionMatrix,
        validation: InteractionMatrix,
        test: InteractionMatrix,
        seed: u64,
    ) -> Result<Self> {
        let shape = (train.num_users(), train.num_items());
        for part in [&validation, &test] {
            if (part.num_users(), part.num_items()) != shape {
                return Err(Error::invalid("split parts have different index spaces"));
            }
        }
        let overlaps = |a: &InteractionMatrix, b: &InteractionMatrix| {
            a.entries().any(|(u, i, _)| b.contains(u, i))
        };
        if overlaps(&train, &validation) || overlaps(&train, &test) || overlaps(&validation, &test)
        {
            return Err(Error::invalid("split parts overlap"));
        }
        Ok(DatasetSplit {
            train,
            validation,
            test,
            seed,
        })
    }

    /// True when the parts are a partition of `source`'s entries.
    pub fn is_partition_of(&self, source: &InteractionMatrix) -> bool {
        let total = self.train.len() + self.validation.len() + self.test.len();
        total == source.len()
            && source.entries().all(|(u, i, _)| {
                self.train.contains(u, i) || self.validation.contains(u, i) || self.test.contains(u, i)
            })
    }
}

/// Weights of the two-dimensional discount `log2(alpha * i + beta * j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountWeights {
    alpha: f64,
    beta: f64,
}

impl DiscountWeights {
    /// Both weights must be at least 1 so that every discount argument is at least 2.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 1.0 && beta >= 1.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::invalid(format!(
                "discount weights must be finite and >= 1, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(DiscountWeights { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha * i + beta * j` for the 1-based cell `(i, j)`.
    pub fn cell_key(&self, i: usize, j: usize) -> f64 {
        cell_key(i, j, *self)
    }

    /// Weights with the roles of rows and columns exchanged.
    pub fn transposed(&self) -> Self {
        DiscountWeights {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

impl Default for DiscountWeights {
    fn default() -> Self {
        DiscountWeights {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// Discount argument of the 1-based cell `(i, j)`: row `i` (carousel), column `j`.
pub fn cell_key(i: usize, j: usize, w: DiscountWeights) -> f64 {
    debug_assert!(i >= 1 && j >= 1, "cell indices are 1-based");
    w.alpha * i as f64 + w.beta * j as f64
}

/// One position inside a carousel.
///
/// A placeholder occupies a slot but never holds a relevant item; it stands for
/// a recommendation slot the provider left unfilled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Item(usize),
    Placeholder,
}

impl Cell {
    pub fn item(self) -> Option<usize> {
        match self {
            Cell::Item(i) => Some(i),
            Cell::Placeholder => None,
        }
    }
}

/// A ranked list shown as one row of the page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Carousel {
    provider: String,
    cells: Vec<Cell>,
}

impl Carousel {
    pub fn new(provider: impl Into<String>, items: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::from_cells(provider, items.into_iter().map(Cell::Item).collect())
    }

    /// `items` followed by placeholders up to `len` cells.
    pub fn padded(
        provider: impl Into<String>,
        items: impl IntoIterator<Item = usize>,
        len: usize,
    ) -> Result<Self> {
        let mut cells: Vec<Cell> = items.into_iter().map(Cell::Item).collect();
        if cells.len() < len {
            cells.resize(len, Cell::Placeholder);
        }
        Self::from_cells(provider, cells)
    }

    /// A row of `len` placeholders.
    pub fn placeholder(provider: impl Into<String>, len: usize) -> Result<Self> {
        Self::from_cells(provider, vec![Cell::Placeholder; len])
    }

    pub fn from_cells(provider: impl Into<String>, cells: Vec<Cell>) -> Result<Self> {
        let provider = provider.into();
        if cells.is_empty() {
            return Err(Error::invalid(format!("carousel '{provider}' is empty")));
        }
        let mut seen = std::collections::HashSet::new();
        for item in cells.iter().filter_map(|c| c.item()) {
            if !seen.insert(item) {
                return Err(Error::invalid(format!(
                    "carousel '{provider}' contains item {item} more than once"
                )));
            }
        }
        Ok(Carousel { provider, cells })
    }

    pub fn provider(&self) -> &str {
        &self.provider
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Real items in rank order, placeholders skipped.
    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().filter_map(|c| c.item())
    }
}

/// An ordered stack of carousels, row 1 on top. Rows may differ in length and
/// may share items; neither is altered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarouselPage {
    rows: Vec<Carousel>,
    max_length: usize,
}

/// Builds a page from carousels in display order.
pub fn build_page(carousels: Vec<Carousel>) -> Result<CarouselPage> {
    CarouselPage::new(carousels)
}

impl CarouselPage {
    pub fn new(rows: Vec<Carousel>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("a page needs at least one carousel"));
        }
        // Carousel construction already rejects empty rows and internal duplicates.
        let max_length = rows.iter().map(Carousel::len).max().unwrap_or(0);
        Ok(CarouselPage { rows, max_length })
    }

    /// Convenience constructor from plain item lists, rows named `row1`, `row2`, ...
    pub fn from_items(rows: &[&[usize]]) -> Result<Self> {
        let rows = rows
            .iter()
            .enumerate()
            .map(|(i, items)| Carousel::new(format!("row{}", i + 1), items.iter().copied()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[Carousel] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn row_lengths(&self) -> Vec<usize> {
        self.rows.iter().map(Carousel::len).collect()
    }

    /// Cell at 1-based `(i, j)`; `None` for padding beyond a short row.
    pub fn cell(&self, i: usize, j: usize) -> Option<Cell> {
        self.rows.get(i.checked_sub(1)?)?.cells.get(j.checked_sub(1)?).copied()
    }

    /// Number of occupied cells (items and placeholders, padding excluded).
    pub fn occupied(&self) -> usize {
        self.rows.iter().map(Carousel::len).sum()
    }

    /// Occupied cells in row-major order with their 1-based coordinates.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, Cell)> + '_ {
        self.rows.iter().enumerate().flat_map(|(r, row)| {
            row.cells
                .iter()
                .enumerate()
                .map(move |(c, &cell)| (r + 1, c + 1, cell))
        })
    }

    /// A copy with `row` appended at the bottom.
    pub fn with_row(&self, row: Carousel) -> CarouselPage {
        let mut rows = self.rows.clone();
        rows.push(row);
        CarouselPage::new(rows).expect("non-empty by construction")
    }

    pub fn into_rows(self) -> Vec<Carousel> {
        self.rows
    }
}

/// Held-out relevance per user. Items absent from a user's list have relevance 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    users: Vec<Vec<(usize, f64)>>,
}

impl GroundTruth {
    /// One list of `(item, relevance)` per user; relevances must be positive.
    pub fn new(users: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut users = users;
        for (u, list) in users.iter_mut().enumerate() {
            list.sort_unstable_by_key(|&(i, _)| i);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::invalid(format!("user {u} has a repeated ground-truth item")));
            }
            if list.iter().any(|&(_, r)| !(r > 0.0) || !r.is_finite()) {
                return Err(Error::invalid(format!("user {u} has a non-positive relevance")));
            }
        }
        Ok(GroundTruth { users })
    }

    /// Binary ground truth: every listed item has relevance 1.
    pub fn binary(users: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(
            users
                .into_iter()
                .map(|items| items.into_iter().map(|i| (i, 1.0)).collect())
                .collect(),
        )
    }

    /// Relevance taken from the matrix values (graded) or fixed at 1 (binary).
    pub fn from_matrix(matrix: &InteractionMatrix, mode: RelevanceMode) -> Self {
        let users = (0..matrix.num_users())
            .map(|u| {
                let (items, values) = matrix.user_row(u);
                items
                    .iter()
                    .zip(values)
                    .map(|(&i, &v)| match mode {
                        RelevanceMode::Binary => (i, 1.0),
                        RelevanceMode::Graded => (i, v),
                    })
                    .collect()
            })
            .collect();
        GroundTruth { users }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// The user's `(item, relevance)` pairs sorted by item. Unknown users have none.
    pub fn user(&self, user: usize) -> UserTruth<'_> {
        UserTruth {
            items: self.users.get(user).map(Vec::as_slice).unwrap_or(&[]),
        }
    }

    /// Users with at least one relevant item, ascending.
    pub fn users_with_truth(&self) -> impl Iterator<Item = usize> + '_ {
        self.users
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(u, _)| u)
    }
}

/// Borrowed view of one user's ground truth.
#[derive(Debug, Clone, Copy)]
pub struct UserTruth<'a> {
    items: &'a [(usize, f64)],
}

impl<'a> UserTruth<'a> {
    pub fn from_sorted(items: &'a [(usize, f64)]) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0].0 < w[1].0));
        UserTruth { items }
    }

    pub fn relevance(&self, item: usize) -> f64 {
        match self.items.binary_search_by_key(&item, |&(i, _)| i) {
            Ok(pos) => self.items[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn relevances(&self) -> impl Iterator<Item = f64> + 'a {
        self.items.iter().map(|&(_, r)| r)
    }

    pub fn items(&self) -> impl Iterator<Item = usize> + 'a {
        self.items.iter().map(|&(i, _)| i)
    }
}

/// How held-out interactions become relevance values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelevanceMode {
    #[default]
    Binary,
    Graded,
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;
    const E: usize = 4;

    #[test]
    fn page_keeps_cross_row_duplicates() {
        let page = CarouselPage::from_items(&[&[A, B, C], &[D, A, E]]).unwrap();
        assert_eq!(page.num_rows(), 2);
        assert_eq!(page.max_length(), 3);
        let count_a = page.cells().filter(|c| c.2 == Cell::Item(A)).count();
        assert_eq!(count_a, 2);
    }

    #[test]
    fn ragged_page_has_padding() {
        let page = CarouselPage::from_items(&[&[A, B], &[C]]).unwrap();
        assert_eq!(page.max_length(), 2);
        assert_eq!(page.cell(2, 1), Some(Cell::Item(C)));
        assert_eq!(page.cell(2, 2), None);
    }

    #[test]
    fn duplicate_within_carousel_rejected() {
        assert!(CarouselPage::from_items(&[&[A, A]]).is_err());
        assert!(build_page(vec![]).is_err());
    }

    #[test]
    fn cell_keys() {
        let unit = DiscountWeights::default();
        assert_eq!(cell_key(1, 1, unit), 2.0);
        assert_eq!(cell_key(2, 3, DiscountWeights::new(1.0, 2.0).unwrap()), 8.0);
        assert_eq!(cell_key(1, 2, unit), cell_key(2, 1, unit));
        assert!(DiscountWeights::new(0.5, 1.0).is_err());
        assert!(DiscountWeights::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn build_page_is_identity_on_rows() {
        let rows = vec![
            Carousel::new("x", [3, 1, 2]).unwrap(),
            Carousel::padded("y", [1], 3).unwrap(),
        ];
        let page = build_page(rows.clone()).unwrap();
        assert_eq!(page.into_rows(), rows);
    }

    #[test]
    fn interaction_matrix_rejects_bad_values() {
        assert!(InteractionMatrix::new(2, 2, [(0, 0, 0.0)]).is_err());
        assert!(InteractionMatrix::new(2, 2, [(0, 0, 1.0), (0, 0, 1.0)]).is_err());
        assert!(InteractionMatrix::new(2, 2, [(0, 3, 1.0)]).is_err());
        let m = InteractionMatrix::new(2, 2, [(0, 1, 4.0)]).unwrap();
        assert_eq!(m.binarized().user_row(0).1, &[1.0]);
    }

    #[test]
    fn split_rejects_overlap() {
        let a = InteractionMatrix::new(2, 2, [(0, 0, 1.0)]).unwrap();
        let b = InteractionMatrix::new(2, 2, [(0, 0, 1.0)]).unwrap();
        let c = InteractionMatrix::new(2, 2, [(1, 1, 1.0)]).unwrap();
        assert!(DatasetSplit::new(a.clone(), b, c.clone(), 0).is_err());
        let empty = InteractionMatrix::new(2, 2, []).unwrap();
        let split = DatasetSplit::new(a, empty, c, 0).unwrap();
        let source = InteractionMatrix::new(2, 2, [(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(split.is_partition_of(&source));
    }

    #[test]
    fn ground_truth_lookup() {
        let gt = GroundTruth::new(vec![vec![(5, 2.0), (1, 1.0)], vec![]]).unwrap();
        assert_eq!(gt.user(0).relevance(5), 2.0);
        assert_eq!(gt.user(0).relevance(2), 0.0);
        assert!(gt.user(7).is_empty());
        assert_eq!(gt.users_with_truth().collect::<Vec<_>>(), vec![0]);
        assert!(GroundTruth::new(vec![vec![(1, 0.0)]]).is_err());
    }
}
