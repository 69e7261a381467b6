//! Scores one hand-built page of two carousels and shows how the duplicate
//! mask, the relevance grid and the discount weights interact.
//!
//!     cargo run --example ndcg2d_walkthrough

use carousel_eval::metrics::{dcg2d, idcg2d, page_metrics, relevance_grid, resolve_mask};
use carousel_eval::model::{CarouselPage, DiscountWeights, GroundTruth};

fn main() -> carousel_eval::Result<()> {
    // Item 3 appears in both rows; item 9 is relevant but never shown.
    let page = CarouselPage::from_items(&[&[3, 1, 4, 5], &[2, 7, 3, 6]])?;
    let truth = GroundTruth::new(vec![vec![(3, 1.0), (7, 2.0), (6, 1.0), (9, 1.0)]])?;
    let gt = truth.user(0);

    for (alpha, beta) in [(1.0, 1.0), (1.0, 3.0), (3.0, 1.0)] {
        let w = DiscountWeights::new(alpha, beta)?;
        let mask = resolve_mask(&page, w);
        let grid = relevance_grid(&page, gt, &mask);
        println!("alpha = {alpha}, beta = {beta}");
        for i in 1..=page.num_rows() {
            let cells: Vec<String> = (1..=page.rows()[i - 1].len())
                .map(|j| {
                    let mark = if mask.is_kept(i, j) { ' ' } else { 'x' };
                    format!("{:>4.0}{mark} {:>4.1}", grid.get(i, j), w.cell_key(i, j))
                })
                .collect();
            println!("  row {i}: {}", cells.join(" | "));
        }
        let relevances: Vec<f64> = gt.relevances().collect();
        let dcg = dcg2d(&grid, w);
        let ideal = idcg2d(&relevances, &page.row_lengths(), w);
        let m = page_metrics(&page, gt, w);
        println!("  DCG2D {dcg:.4}  IDCG2D {ideal:.4}  NDCG2D {:.4}", m.ndcg2d);
        println!(
            "  P {:.4}  AP {:.4}  NDCG {:.4}  counted hits {}\n",
            m.precision, m.average_precision, m.ndcg, m.counted_hits
        );
    }
    println!("cells show gain and key; x marks a masked duplicate");
    Ok(())
}
