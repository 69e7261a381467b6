//! Writes the bundled toy dataset (2,000 users, 500 items) to `data/synthetic`
//! or to the directory given as the first argument.
//!
//!     cargo run --example synthetic_dataset -- /tmp/toy

use carousel_eval::data::synthetic::{generate, write_dataset, SyntheticConfig};

fn main() -> carousel_eval::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/synthetic").into());
    let cfg = SyntheticConfig::default();
    let data = generate(&cfg)?;
    let files = write_dataset(&data, &dir)?;
    println!(
        "{} ratings from {} users on {} items",
        data.ratings.len(),
        cfg.users,
        cfg.items
    );
    println!("{}\n{}\n{}", files.ratings.display(), files.movies.display(), files.users.display());
    Ok(())
}
