use crate::error::{Error, Result};

/// Relative change of `value` over `baseline`, in percent.
pub fn improvement(value: f64, baseline: f64) -> Result<f64> {
    if !(baseline > 0.0) || !baseline.is_finite() || !value.is_finite() {
        return Err(Error::invalid(format!(
            "improvement needs a positive baseline and finite value, got {value} over {baseline}"
        )));
    }
    Ok((value - baseline) / baseline * 100.0)
}

/// Ranks and rank change of one algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedRow {
    pub label: String,
    pub rank_individual: usize,
    pub rank_carousel: usize,
    /// `rank_individual - rank_carousel`; positive means the algorithm moved up.
    pub delta_rank: i64,
}

/// 1-based ranks by descending value, ties broken by label order.
pub fn ranks_by(labels: &[&str], values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then_with(|| labels[a].cmp(labels[b])));
    let mut ranks = vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Ranks every `(label, individual MAP, carousel MAP)` entry in both columns.
pub fn rank_table(rows: &[(String, f64, f64)]) -> Result<Vec<RankedRow>> {
    if rows.is_empty() {
        return Err(Error::invalid("rank table needs at least one row"));
    }
    if rows.iter().any(|r| !r.1.is_finite() || !r.2.is_finite()) {
        return Err(Error::invalid("rank table values must be finite"));
    }
    let labels: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    let individual = ranks_by(&labels, &rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let carousel = ranks_by(&labels, &rows.iter().map(|r| r.2).collect::<Vec<_>>());
    Ok(rows
        .iter()
        .enumerate()
        .map(|(k, r)| RankedRow {
            label: r.0.clone(),
            rank_individual: individual[k],
            rank_carousel: carousel[k],
            delta_rank: individual[k] as i64 - carousel[k] as i64,
        })
        .collect())
}

/// Kendall rank correlation between two tie-free rankings of the same items.
/// `None` for fewer than two items.
pub fn kendall_tau(a: &[usize], b: &[usize]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n < 2 {
        return None;
    }
    let mut score = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let x = (a[i] as i64 - a[j] as i64).signum();
            let y = (b[i] as i64 - b[j] as i64).signum();
            score += x * y;
        }
    }
    Some(score as f64 / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improvement_values() {
        assert!((improvement(0.2251, 0.2340).unwrap() - -3.803).abs() < 1e-3);
        assert_eq!(improvement(0.3, 0.3).unwrap(), 0.0);
        assert!(improvement(0.1, 0.0).is_err());
        assert!(improvement(0.1, -1.0).is_err());
    }

    #[test]
    fn ranks_with_ties_follow_labels() {
        assert_eq!(ranks_by(&["b", "a", "c"], &[0.5, 0.5, 0.9]), vec![3, 2, 1]);
        let t = rank_table(&[("x".into(), 0.1, 0.2)]).unwrap();
        assert_eq!((t[0].rank_individual, t[0].rank_carousel, t[0].delta_rank), (1, 1, 0));
    }

    #[test]
    fn tau_extremes() {
        assert_eq!(kendall_tau(&[1, 2, 3], &[1, 2, 3]), Some(1.0));
        assert_eq!(kendall_tau(&[1, 2, 3], &[3, 2, 1]), Some(-1.0));
        assert_eq!(kendall_tau(&[1], &[1]), None);
    }
}
