//! Offline evaluation of recommender systems displayed as a page of carousels.
//!
//! The crate trains baseline recommenders, assembles per-user pages of
//! carousels (rows of ranked items), and scores them with duplicate-aware
//! Precision, MAP, NDCG and the two-dimensional NDCG2D. The carousel protocol
//! measures how much a candidate algorithm improves a page whose first rows are
//! already fixed.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory:
//!
//! ```bash
//! cargo run --example ndcg2d_walkthrough
//! cargo run --example train_recommenders --release
//! cargo run --example carousel_protocol --release
//! cargo run --example random_search --release
//! cargo run --example rank_table
//! cargo run --example full_pipeline --release
//! cargo run --example synthetic_dataset
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod recommenders;
pub mod sparse;

pub use error::{Error, Result};
