//! Places each candidate below a fixed TopPop carousel and compares the
//! individual ranking with the carousel ranking.
//!
//!     cargo run --example carousel_protocol --release

use carousel_eval::data::synthetic::{generate, SyntheticConfig};
use carousel_eval::data::{split_holdout, SplitConfig};
use carousel_eval::experiment::{
    evaluate_individual, improvement, kendall_tau, rank_table, CarouselScenario, ModelProvider,
};
use carousel_eval::model::{DiscountWeights, GroundTruth, InteractionMatrix, RelevanceMode};
use carousel_eval::recommenders::{fit, Algorithm, HyperParams, TrainingData};

const CUTOFF: usize = 10;

fn main() -> carousel_eval::Result<()> {
    let cfg = SyntheticConfig { users: 800, items: 250, ..Default::default() };
    let data = generate(&cfg)?;
    let liked = data.ratings.iter().filter(|r| r.2 >= 3.5).map(|&(u, i, _, _)| (u, i, 1.0));
    let matrix = InteractionMatrix::new(cfg.users, cfg.items, liked)?;
    let split = split_holdout(&matrix, &SplitConfig::default())?;
    let train = InteractionMatrix::new(
        cfg.users,
        cfg.items,
        split.train.entries().chain(split.validation.entries()),
    )?;
    let test = GroundTruth::from_matrix(&split.test, RelevanceMode::Binary);

    let params = HyperParams { k: 50, factors: 20, ..Default::default() };
    let fixed_model = fit(Algorithm::TopPop, &params, TrainingData::new(&train))?;
    let fixed = ModelProvider::new(&fixed_model, &train);
    let fixed_map = evaluate_individual(&fixed, &test, CUTOFF)?.map;

    let scenario = CarouselScenario::new(vec![&fixed], CUTOFF, DiscountWeights::default())?;
    let prepared = scenario.prepare(&test)?;
    println!("fixed row alone: MAP {fixed_map:.4}, page MAP {:.4}\n", prepared.baseline().map);

    let candidates = [
        Algorithm::ItemKnnCf,
        Algorithm::UserKnnCf,
        Algorithm::P3Alpha,
        Algorithm::Rp3Beta,
        Algorithm::EaseR,
        Algorithm::PureSvd,
    ];
    let mut rows = Vec::new();
    println!("{:<12} {:>8} {:>8} {:>10} {:>10}", "algorithm", "MAP", "page MAP", "impr. ind", "impr. car");
    for algorithm in candidates {
        let model = fit(algorithm, &params, TrainingData::new(&train))?;
        let provider = ModelProvider::new(&model, &train);
        let alone = evaluate_individual(&provider, &test, CUTOFF)?;
        let page = prepared.evaluate(&provider)?;
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>9.1}% {:>9.1}%",
            algorithm.label(),
            alone.map,
            page.page.map,
            improvement(alone.map, fixed_map)?,
            page.improvement,
        );
        rows.push((algorithm.label().to_owned(), alone.map, page.page.map));
    }

    println!("\n{:<12} {:>5} {:>5} {:>4}", "algorithm", "ind", "car", "d");
    let table = rank_table(&rows)?;
    for r in &table {
        println!("{:<12} {:>5} {:>5} {:>+4}", r.label, r.rank_individual, r.rank_carousel, r.delta_rank);
    }
    let ind: Vec<usize> = table.iter().map(|r| r.rank_individual).collect();
    let car: Vec<usize> = table.iter().map(|r| r.rank_carousel).collect();
    if let Some(tau) = kendall_tau(&ind, &car) {
        println!("Kendall tau between the two rankings: {tau:.3}");
    }
    Ok(())
}
