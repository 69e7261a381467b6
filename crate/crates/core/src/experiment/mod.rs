//! Individual and carousel evaluation protocols, improvement and rank tables,
//! random hyperparameter search and report rendering.
//!
//! The carousel protocol scores a page made of one or more fixed rows and one
//! candidate row. Its baseline keeps the page geometry but fills the candidate
//! row with placeholders, so both MAP values share a denominator:
//!
//! ```
//! use carousel_eval::experiment::{evaluate_carousel, CarouselScenario, GridProvider};
//! use carousel_eval::model::{Cell, DiscountWeights, GroundTruth};
//!
//! let row = |items: &[usize]| items.iter().map(|&i| Cell::Item(i)).collect::<Vec<_>>();
//! let fixed = GridProvider { name: "fixed".into(), rows: [(0, row(&[1, 2]))].into() };
//! let candidate = GridProvider { name: "candidate".into(), rows: [(0, row(&[3, 1]))].into() };
//! let truth = GroundTruth::binary(vec![vec![2, 3]]).unwrap();
//!
//! let scenario = CarouselScenario::new(vec![&fixed], 2, DiscountWeights::default()).unwrap();
//! let outcome = evaluate_carousel(&scenario, &candidate, &truth).unwrap();
//! assert!(outcome.improvement > 0.0);
//! ```

mod protocol;
mod ranking;
mod report;
mod search;

pub use protocol::{
    evaluate_carousel, evaluate_individual, individual_pages, CarouselOutcome, CarouselScenario,
    GridProvider, ModelProvider, PreparedScenario, RowProvider,
};
pub use ranking::{improvement, kendall_tau, rank_table, ranks_by, RankedRow};
pub use report::{CandidateResult, FixedSummary, Report, ReportRow, ResultRow};
pub use search::{
    random_search, tune_random_search, write_trial_log, ParamRange, SearchOutcome, SearchSpace, Trial,
};
