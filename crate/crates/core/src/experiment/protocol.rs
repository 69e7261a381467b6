use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{page_metrics, MetricSummary, PageMetrics, PageSet};
use crate::model::{Carousel, CarouselPage, Cell, DiscountWeights, GroundTruth, InteractionMatrix};
use crate::recommenders::{recommend, TrainedModel};

use super::improvement;

/// Anything that can fill one carousel for a user.
pub trait RowProvider: Sync {
    /// Name written into the carousel and the reports.
    fn name(&self) -> &str;

    /// A row of at most `len` cells for `user`; shorter rows are padded by the caller.
    fn row(&self, user: usize, len: usize) -> Result<Vec<Cell>>;
}

/// A trained model queried through [`recommend`].
pub struct ModelProvider<'a> {
    pub model: &'a TrainedModel,
    /// History used for scoring and for exclusion of seen items.
    pub history: &'a InteractionMatrix,
    pub exclude_seen: bool,
}

impl<'a> ModelProvider<'a> {
    /// Uses the algorithm's default for excluding seen items.
    pub fn new(model: &'a TrainedModel, history: &'a InteractionMatrix) -> Self {
        ModelProvider {
            model,
            history,
            exclude_seen: model.algorithm.default_exclude_seen(),
        }
    }
}

impl RowProvider for ModelProvider<'_> {
    fn name(&self) -> &str {
        self.model.algorithm.id()
    }

    fn row(&self, user: usize, len: usize) -> Result<Vec<Cell>> {
        let rec = recommend(self.model, user, len, self.exclude_seen, self.history)?;
        Ok(rec.items.into_iter().map(Cell::Item).collect())
    }
}

/// Precomputed rows, e.g. one row of a loaded grid file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridProvider {
    pub name: String,
    pub rows: BTreeMap<usize, Vec<Cell>>,
}

impl GridProvider {
    /// Extracts row `row` (0-based) of every page.
    pub fn from_pages(name: impl Into<String>, pages: &PageSet, row: usize) -> Result<Self> {
        let rows = pages
            .iter()
            .map(|(&u, page)| {
                let carousel = page.rows().get(row).ok_or_else(|| {
                    Error::invalid(format!("page of user {u} has no row {}", row + 1))
                })?;
                Ok((u, carousel.cells().to_vec()))
            })
            .collect::<Result<_>>()?;
        Ok(GridProvider {
            name: name.into(),
            rows,
        })
    }
}

impl RowProvider for GridProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn row(&self, user: usize, len: usize) -> Result<Vec<Cell>> {
        let cells = self
            .rows
            .get(&user)
            .ok_or_else(|| Error::invalid(format!("grid '{}' has no row for user {user}", self.name)))?;
        Ok(cells.iter().take(len).copied().collect())
    }
}

fn carousel_of(provider: &dyn RowProvider, user: usize, len: usize) -> Result<Carousel> {
    let mut cells = provider.row(user, len)?;
    if cells.len() > len {
        return Err(Error::invalid(format!(
            "provider '{}' returned {} cells for a row of {len}",
            provider.name(),
            cells.len()
        )));
    }
    cells.resize(len, Cell::Placeholder);
    Carousel::from_cells(provider.name(), cells)
}

fn mean_over_users(
    gt: &GroundTruth,
    page_for: impl Fn(usize) -> Result<(CarouselPage, bool)> + Sync,
    weights: DiscountWeights,
) -> Result<MetricSummary> {
    let users: Vec<usize> = gt.users_with_truth().collect();
    let per_user = users
        .par_iter()
        .map(|&u| {
            let (page, single_row) = page_for(u)?;
            let mut m = page_metrics(&page, gt.user(u), weights);
            if single_row {
                m.ndcg2d = m.ndcg;
            }
            Ok(m)
        })
        .collect::<Result<Vec<PageMetrics>>>()?;
    MetricSummary::mean_of(&per_user)
}

/// Classic top-`cutoff` evaluation: one row per user, padded to `cutoff`.
/// NDCG2D is reported equal to NDCG in this mode.
pub fn evaluate_individual(
    provider: &dyn RowProvider,
    test: &GroundTruth,
    cutoff: usize,
) -> Result<MetricSummary> {
    if cutoff == 0 {
        return Err(Error::invalid("cutoff must be >= 1"));
    }
    mean_over_users(
        test,
        |u| Ok((CarouselPage::new(vec![carousel_of(provider, u, cutoff)?])?, true)),
        DiscountWeights::default(),
    )
}

/// The per-user pages of an individual evaluation.
pub fn individual_pages(provider: &dyn RowProvider, users: &[usize], cutoff: usize) -> Result<PageSet> {
    users
        .par_iter()
        .map(|&u| Ok((u, CarouselPage::new(vec![carousel_of(provider, u, cutoff)?])?)))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

/// Fixed rows shown above the candidate row.
pub struct CarouselScenario<'a> {
    fixed: Vec<&'a dyn RowProvider>,
    cutoff: usize,
    weights: DiscountWeights,
}

impl<'a> CarouselScenario<'a> {
    pub fn new(fixed: Vec<&'a dyn RowProvider>, cutoff: usize, weights: DiscountWeights) -> Result<Self> {
        if fixed.is_empty() {
            return Err(Error::invalid("carousel evaluation needs at least one fixed provider"));
        }
        if cutoff == 0 {
            return Err(Error::invalid("cutoff must be >= 1"));
        }
        Ok(CarouselScenario {
            fixed,
            cutoff,
            weights,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn weights(&self) -> DiscountWeights {
        self.weights
    }

    pub fn fixed_names(&self) -> Vec<&str> {
        self.fixed.iter().map(|p| p.name()).collect()
    }

    /// Materializes the fixed rows for every user with ground truth and
    /// evaluates the baseline page.
    pub fn prepare(&self, test: &'a GroundTruth) -> Result<PreparedScenario<'a>> {
        let users: Vec<usize> = test.users_with_truth().collect();
        let fixed_rows = users
            .par_iter()
            .map(|&u| {
                let rows = self
                    .fixed
                    .iter()
                    .map(|p| carousel_of(*p, u, self.cutoff))
                    .collect::<Result<Vec<_>>>()?;
                Ok((u, rows))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .collect();
        let mut prepared = PreparedScenario {
            fixed_rows,
            test,
            cutoff: self.cutoff,
            weights: self.weights,
            baseline: MetricSummary::default(),
        };
        prepared.baseline = prepared.evaluate_rows(|_| {
            Ok(vec![Cell::Placeholder; self.cutoff])
        }, "baseline")?;
        Ok(prepared)
    }
}

/// A scenario whose fixed rows and baseline are already computed.
pub struct PreparedScenario<'a> {
    fixed_rows: BTreeMap<usize, Vec<Carousel>>,
    test: &'a GroundTruth,
    cutoff: usize,
    weights: DiscountWeights,
    baseline: MetricSummary,
}

/// Page metrics with the candidate row, the baseline, and the MAP improvement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarouselOutcome {
    pub page: MetricSummary,
    pub baseline: MetricSummary,
    pub improvement: f64,
}

impl PreparedScenario<'_> {
    /// Fixed rows plus an all-placeholder candidate row.
    pub fn baseline(&self) -> MetricSummary {
        self.baseline
    }

    pub fn page_for(&self, user: usize, candidate: Carousel) -> Result<CarouselPage> {
        let fixed = self
            .fixed_rows
            .get(&user)
            .ok_or_else(|| Error::invalid(format!("user {user} has no ground truth in this scenario")))?;
        let mut rows = fixed.clone();
        rows.push(candidate);
        CarouselPage::new(rows)
    }

    fn evaluate_rows(
        &self,
        candidate_row: impl Fn(usize) -> Result<Vec<Cell>> + Sync,
        name: &str,
    ) -> Result<MetricSummary> {
        mean_over_users(
            self.test,
            |u| {
                let mut cells = candidate_row(u)?;
                cells.resize(self.cutoff, Cell::Placeholder);
                Ok((self.page_for(u, Carousel::from_cells(name, cells)?)?, false))
            },
            self.weights,
        )
    }

    pub fn evaluate(&self, candidate: &dyn RowProvider) -> Result<CarouselOutcome> {
        let page = self.evaluate_rows(|u| carousel_of(candidate, u, self.cutoff).map(|c| c.cells().to_vec()), candidate.name())?;
        Ok(CarouselOutcome {
            page,
            baseline: self.baseline,
            improvement: improvement(page.map, self.baseline.map)?,
        })
    }

    /// Per-user pages with `candidate` in the last row.
    pub fn pages(&self, candidate: &dyn RowProvider) -> Result<PageSet> {
        self.fixed_rows
            .par_iter()
            .map(|(&u, _)| Ok((u, self.page_for(u, carousel_of(candidate, u, self.cutoff)?)?)))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().collect())
    }
}

/// One-shot carousel evaluation of `candidate` under `scenario`.
pub fn evaluate_carousel(
    scenario: &CarouselScenario<'_>,
    candidate: &dyn RowProvider,
    test: &GroundTruth,
) -> Result<CarouselOutcome> {
    scenario.prepare(test)?.evaluate(candidate)
}
