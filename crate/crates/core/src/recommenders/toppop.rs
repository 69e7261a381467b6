use crate::error::{Error, Result};
use crate::model::InteractionMatrix;

/// Per-item interaction counts; identical scores for every user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopularityModel {
    counts: Vec<usize>,
}

impl PopularityModel {
    pub fn from_counts(counts: Vec<usize>) -> Self {
        PopularityModel { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub(super) fn score(&self, out: &mut [f64]) {
        for (o, &c) in out.iter_mut().zip(&self.counts) {
            *o = c as f64;
        }
    }
}

/// Counts, for every item, the users who interacted with it.
pub fn fit_toppop(train: &InteractionMatrix) -> Result<PopularityModel> {
    if train.is_empty() {
        return Err(Error::invalid("training matrix is empty"));
    }
    Ok(PopularityModel {
        counts: train.csr().column_counts(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommenders::top_n;

    #[test]
    fn counts_sum_to_interactions() {
        // A: 3 users, B: 1, C: 2, D: none
        let train = InteractionMatrix::new(
            3,
            4,
            [(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0), (0, 1, 1.0), (1, 2, 1.0), (2, 2, 1.0)],
        )
        .unwrap();
        let m = fit_toppop(&train).unwrap();
        assert_eq!(m.counts(), &[3, 1, 2, 0]);
        assert_eq!(m.counts().iter().sum::<usize>(), train.len());
        let mut scores = vec![0.0; 4];
        m.score(&mut scores);
        assert_eq!(top_n(&scores, 4), vec![0, 2, 1, 3]);
    }

    #[test]
    fn equal_counts_rank_by_index() {
        let train = InteractionMatrix::new(1, 3, [(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        let mut scores = vec![0.0; 3];
        fit_toppop(&train).unwrap().score(&mut scores);
        assert_eq!(top_n(&scores, 3), vec![0, 1, 2]);
    }
}
