//! Ranks algorithms by individual and by carousel MAP from a CSV of
//! `label,individual_map,carousel_map` rows (or a built-in sample).
//!
//!     cargo run --example rank_table -- maps.csv

use carousel_eval::experiment::{kendall_tau, rank_table};

const SAMPLE: &str = "label,individual_map,carousel_map
TopPop,0.0709,0.1895
UserKNN CF,0.2251,0.1955
ItemKNN CF,0.1728,0.1921
EASE^R,0.2070,0.1899
PureSVD,0.2060,0.1924
IALS,0.2152,0.1998
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_owned(),
    };
    let mut rows = Vec::new();
    for record in csv::Reader::from_reader(text.as_bytes()).records() {
        let record = record?;
        rows.push((record[0].to_owned(), record[1].trim().parse()?, record[2].trim().parse()?));
    }
    let table = rank_table(&rows)?;
    println!("| Algorithm | Individual | Carousel | Change |\n|---|---:|---:|---:|");
    for r in &table {
        println!("| {} | {} | {} | {:+} |", r.label, r.rank_individual, r.rank_carousel, r.delta_rank);
    }
    let ind: Vec<usize> = table.iter().map(|r| r.rank_individual).collect();
    let car: Vec<usize> = table.iter().map(|r| r.rank_carousel).collect();
    if let Some(tau) = kendall_tau(&ind, &car) {
        println!("\nKendall tau {tau:.3}");
    }
    Ok(())
}
