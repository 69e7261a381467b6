//! Runs prepare, tune and run in-process on the bundled dataset with a small
//! search budget, writing artifacts to a scratch directory.
//!
//!     cargo run --example full_pipeline --release -- /tmp/carousel-out

use std::path::PathBuf;

use carousel_eval::cli::{cmd_prepare, cmd_run, cmd_tune, RunConfig};

fn main() -> carousel_eval::Result<()> {
    let root = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."));
    let mut cfg = RunConfig::load(root.join("configs/synthetic.toml"))?;
    cfg.data.dir = Some(root.join("data/synthetic"));
    cfg.tuning.budget = 3;
    cfg.output.dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("carousel-eval-pipeline"));

    println!("{}", cmd_prepare(&cfg)?);
    let tuned = cmd_tune(&cfg)?;
    for (algorithm, (params, score)) in &tuned.tuned {
        println!("{:<16} validation MAP {score:.4}  {:?}", algorithm.label(), params.relevant(*algorithm));
    }
    let report = cmd_run(&cfg)?;
    println!("\n{}", report.to_markdown());
    println!("artifacts in {}", cfg.output.dir.display());
    Ok(())
}
