//! Fits every algorithm on a small synthetic catalogue and prints validation
//! MAP@10 next to the first user's recommendations.
//!
//!     cargo run --example train_recommenders --release

use carousel_eval::data::synthetic::{generate, SyntheticConfig, GENRES};
use carousel_eval::data::{split_holdout, SplitConfig};
use carousel_eval::experiment::{evaluate_individual, ModelProvider};
use carousel_eval::model::{FeatureMatrix, GroundTruth, InteractionMatrix, RelevanceMode};
use carousel_eval::recommenders::{fit, recommend, Algorithm, HyperParams, TrainingData};

fn main() -> carousel_eval::Result<()> {
    let cfg = SyntheticConfig { users: 600, items: 200, ..Default::default() };
    let data = generate(&cfg)?;
    let liked = data.ratings.iter().filter(|r| r.2 >= 3.5).map(|&(u, i, _, _)| (u, i, 1.0));
    let matrix = InteractionMatrix::new(cfg.users, cfg.items, liked)?;
    let split = split_holdout(&matrix, &SplitConfig::default())?;
    let validation = GroundTruth::from_matrix(&split.validation, RelevanceMode::Binary);

    // One-hot genres per item and favourite genres per user.
    let item_genres = FeatureMatrix::new(
        cfg.items,
        GENRES.len(),
        data.items.iter().enumerate().flat_map(|(i, it)| it.genres.iter().map(move |&g| (i, g, 1.0))),
    )?;
    let user_genres = FeatureMatrix::new(
        cfg.users,
        GENRES.len(),
        data.favourite_genres.iter().enumerate().flat_map(|(u, gs)| gs.iter().map(move |&g| (u, g, 1.0))),
    )?;
    let train = TrainingData::new(&split.train)
        .with_item_features(Some(&item_genres))
        .with_user_features(Some(&user_genres));

    let params = HyperParams { k: 50, factors: 20, ..Default::default() };
    println!("{:<16} {:>8}  first user's top 5", "algorithm", "MAP@10");
    for algorithm in Algorithm::ALL {
        let model = fit(algorithm, &params, train)?;
        let map = evaluate_individual(&ModelProvider::new(&model, &split.train), &validation, 10)?.map;
        let top = recommend(&model, 0, 5, algorithm.default_exclude_seen(), &split.train)?;
        println!("{:<16} {map:>8.4}  {:?}", algorithm.label(), top.items);
    }
    Ok(())
}
