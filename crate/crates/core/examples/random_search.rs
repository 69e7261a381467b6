//! Tunes ItemKNN CF by random search on validation MAP@10 and prints every
//! trial in draw order.
//!
//!     cargo run --example random_search --release -- 25

use std::collections::BTreeMap;

use carousel_eval::data::synthetic::{generate, SyntheticConfig};
use carousel_eval::data::{split_holdout, SplitConfig};
use carousel_eval::experiment::{tune_random_search, ParamRange, SearchSpace};
use carousel_eval::model::{GroundTruth, InteractionMatrix, RelevanceMode};
use carousel_eval::recommenders::{Algorithm, HyperParams, TrainingData};

fn main() -> carousel_eval::Result<()> {
    let budget: usize = std::env::args().nth(1).and_then(|b| b.parse().ok()).unwrap_or(15);
    let cfg = SyntheticConfig { users: 600, items: 200, ..Default::default() };
    let data = generate(&cfg)?;
    let liked = data.ratings.iter().filter(|r| r.2 >= 3.5).map(|&(u, i, _, _)| (u, i, 1.0));
    let split = split_holdout(&InteractionMatrix::new(cfg.users, cfg.items, liked)?, &SplitConfig::default())?;
    let validation = GroundTruth::from_matrix(&split.validation, RelevanceMode::Binary);

    let space = SearchSpace {
        ranges: BTreeMap::from([
            ("k".into(), ParamRange::IntUniform(5, 400)),
            ("shrink".into(), ParamRange::Uniform(0.0, 200.0)),
        ]),
    };
    let outcome = tune_random_search(
        Algorithm::ItemKnnCf,
        &space,
        &HyperParams::default(),
        budget,
        42,
        TrainingData::new(&split.train),
        &validation,
        10,
    )?;
    for t in &outcome.trials {
        let score = t.score.as_ref().map_or_else(|e| e.clone(), |s| format!("{s:.4}"));
        println!("trial {:>3}: k {:>3}  shrink {:>7.2}  MAP@10 {score}", t.index, t.params.k, t.params.shrink);
    }
    println!(
        "best: trial {} with k {} and shrink {:.2} (MAP@10 {:.4})",
        outcome.best_index, outcome.best.k, outcome.best.shrink, outcome.best_score
    );
    Ok(())
}
