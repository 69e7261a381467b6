use std::fmt::Write as _;
use std::path::Path;

use super::protocol::CarouselOutcome;
use super::ranking::{improvement, kendall_tau, rank_table};
use crate::error::{Error, Result};
use crate::metrics::MetricSummary;

/// The fixed rows of the scenario: their own individual metrics and the
/// baseline page (fixed rows plus an all-placeholder candidate row).
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSummary {
    pub label: String,
    pub individual: MetricSummary,
    pub baseline: MetricSummary,
}

/// One evaluated algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algorithm: String,
    pub individual: MetricSummary,
    pub carousel: MetricSummary,
    /// Individual MAP relative to the fixed provider's individual MAP, percent.
    pub improvement_individual: f64,
    /// Carousel MAP relative to the baseline page MAP, percent.
    pub improvement_carousel: f64,
    pub rank_individual: usize,
    pub rank_carousel: usize,
    pub delta_rank: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportRow {
    Evaluated(ResultRow),
    Failed { algorithm: String, error: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub fixed: FixedSummary,
    pub rows: Vec<ReportRow>,
}

/// Outcome of one candidate: individual metrics and the carousel evaluation.
pub type CandidateResult = Result<(MetricSummary, CarouselOutcome)>;

const HEADER: [&str; 15] = [
    "role",
    "algorithm",
    "individual_precision",
    "individual_map",
    "individual_ndcg",
    "carousel_precision",
    "carousel_map",
    "carousel_ndcg",
    "carousel_ndcg2d",
    "improvement_individual",
    "improvement_carousel",
    "rank_individual",
    "rank_carousel",
    "delta_rank",
    "error",
];

impl Report {
    /// Computes improvements and ranks. Failed candidates become gap rows and
    /// are left out of the ranking.
    pub fn build(fixed: FixedSummary, candidates: Vec<(String, CandidateResult)>) -> Result<Report> {
        let mut evaluated = Vec::new();
        let mut rows = Vec::with_capacity(candidates.len());
        for (algorithm, result) in candidates {
            match result.and_then(|(ind, car)| {
                Ok((ind, car, improvement(ind.map, fixed.individual.map)?))
            }) {
                Ok((ind, car, imp_ind)) => {
                    evaluated.push((algorithm.clone(), ind.map, car.page.map));
                    rows.push(ReportRow::Evaluated(ResultRow {
                        algorithm,
                        individual: ind,
                        carousel: car.page,
                        improvement_individual: imp_ind,
                        improvement_carousel: car.improvement,
                        rank_individual: 0,
                        rank_carousel: 0,
                        delta_rank: 0,
                    }));
                }
                Err(e) => {
                    log::warn!("{algorithm} failed: {e}");
                    rows.push(ReportRow::Failed {
                        algorithm,
                        error: e.to_string(),
                    });
                }
            }
        }
        if !evaluated.is_empty() {
            let mut ranks = rank_table(&evaluated)?.into_iter();
            for row in &mut rows {
                if let ReportRow::Evaluated(r) = row {
                    let ranked = ranks.next().expect("one rank per evaluated row");
                    r.rank_individual = ranked.rank_individual;
                    r.rank_carousel = ranked.rank_carousel;
                    r.delta_rank = ranked.delta_rank;
                }
            }
        }
        Ok(Report { fixed, rows })
    }

    pub fn evaluated(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter_map(|r| match r {
            ReportRow::Evaluated(r) => Some(r),
            ReportRow::Failed { .. } => None,
        })
    }

    /// Agreement between the individual and carousel MAP rankings.
    pub fn kendall_tau(&self) -> Option<f64> {
        let (a, b): (Vec<usize>, Vec<usize>) =
            self.evaluated().map(|r| (r.rank_individual, r.rank_carousel)).unzip();
        kendall_tau(&a, &b)
    }

    /// Full-precision CSV; the first data row is the fixed provider.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::invalid(format!("csv encoding failed: {e}"));
        w.write_record(HEADER).map_err(err)?;
        let num = |v: f64| v.to_string();
        let f = &self.fixed;
        let mut first = vec!["fixed".to_string(), f.label.clone()];
        first.extend([f.individual.precision, f.individual.map, f.individual.ndcg].map(num));
        first.extend([f.baseline.precision, f.baseline.map, f.baseline.ndcg, f.baseline.ndcg2d].map(num));
        first.extend(std::iter::repeat_n(String::new(), 6));
        w.write_record(&first).map_err(err)?;
        for row in &self.rows {
            let rec: Vec<String> = match row {
                ReportRow::Evaluated(r) => {
                    let mut rec = vec!["candidate".to_string(), r.algorithm.clone()];
                    rec.extend([r.individual.precision, r.individual.map, r.individual.ndcg].map(num));
                    rec.extend(
                        [r.carousel.precision, r.carousel.map, r.carousel.ndcg, r.carousel.ndcg2d].map(num),
                    );
                    rec.extend([r.improvement_individual, r.improvement_carousel].map(num));
                    rec.extend([
                        r.rank_individual.to_string(),
                        r.rank_carousel.to_string(),
                        r.delta_rank.to_string(),
                        String::new(),
                    ]);
                    rec
                }
                ReportRow::Failed { algorithm, error } => {
                    let mut rec = vec!["failed".to_string(), algorithm.clone()];
                    rec.extend(std::iter::repeat_n(String::new(), 12));
                    rec.push(error.clone());
                    rec
                }
            };
            w.write_record(&rec).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Parses the output of [`Report::to_csv`]. `source` names the input in errors.
    pub fn from_csv(text: &str, source: &Path) -> Result<Report> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::format(source, e.to_string()))?
            .clone();
        if headers.iter().ne(HEADER) {
            return Err(Error::format(source, "unexpected report columns"));
        }
        let mut fixed = None;
        let mut rows = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| Error::parse(source, line, e.to_string()))?;
            let real = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::parse(source, line, format!("invalid number in column {}", HEADER[i])))
            };
            let int = |i: usize| -> Result<i64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::parse(source, line, format!("invalid integer in column {}", HEADER[i])))
            };
            let summary = |first: usize, with_2d: bool| -> Result<MetricSummary> {
                Ok(MetricSummary {
                    precision: real(first)?,
                    map: real(first + 1)?,
                    ndcg: real(first + 2)?,
                    ndcg2d: if with_2d { real(first + 3)? } else { 0.0 },
                    ..Default::default()
                })
            };
            match &rec[0] {
                "fixed" if fixed.is_none() && k == 0 => {
                    fixed = Some(FixedSummary {
                        label: rec[1].to_string(),
                        individual: summary(2, false)?,
                        baseline: summary(5, true)?,
                    });
                }
                "candidate" if fixed.is_some() => {
                    let mut individual = summary(2, false)?;
                    individual.ndcg2d = individual.ndcg;
                    rows.push(ReportRow::Evaluated(ResultRow {
                        algorithm: rec[1].to_string(),
                        individual,
                        carousel: summary(5, true)?,
                        improvement_individual: real(9)?,
                        improvement_carousel: real(10)?,
                        rank_individual: int(11)? as usize,
                        rank_carousel: int(12)? as usize,
                        delta_rank: int(13)?,
                    }));
                }
                "failed" if fixed.is_some() => rows.push(ReportRow::Failed {
                    algorithm: rec[1].to_string(),
                    error: rec[14].to_string(),
                }),
                other => {
                    return Err(Error::parse(source, line, format!("unexpected row role '{other}'")));
                }
            }
        }
        let fixed = fixed.ok_or_else(|| Error::format(source, "report has no fixed row"))?;
        Ok(Report { fixed, rows })
    }

    /// Table rendered with metrics to 4 decimals and improvements to 1 decimal.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let m4 = |v: f64| format!("{v:.4}");
        let pct = |v: f64| format!("{v:+.1}%");
        let delta = |d: i64| if d == 0 { "0".to_string() } else { format!("{d:+}") };
        let _ = writeln!(
            out,
            "| Algorithm | Ind. PREC | Ind. MAP | Ind. NDCG | Car. PREC | Car. MAP | Car. NDCG | Car. NDCG2D | Impr. individual | Impr. carousel | Rank individual | Rank carousel | Δ rank |"
        );
        let _ = writeln!(out, "|---|{}", "---:|".repeat(12));
        let f = &self.fixed;
        let _ = writeln!(
            out,
            "| {} (fixed) | {} | {} | {} | {} | {} | {} | {} | -- | -- | -- | -- | -- |",
            f.label,
            m4(f.individual.precision),
            m4(f.individual.map),
            m4(f.individual.ndcg),
            m4(f.baseline.precision),
            m4(f.baseline.map),
            m4(f.baseline.ndcg),
            m4(f.baseline.ndcg2d),
        );
        for row in &self.rows {
            match row {
                ReportRow::Evaluated(r) => {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                        r.algorithm,
                        m4(r.individual.precision),
                        m4(r.individual.map),
                        m4(r.individual.ndcg),
                        m4(r.carousel.precision),
                        m4(r.carousel.map),
                        m4(r.carousel.ndcg),
                        m4(r.carousel.ndcg2d),
                        pct(r.improvement_individual),
                        pct(r.improvement_carousel),
                        r.rank_individual,
                        r.rank_carousel,
                        delta(r.delta_rank),
                    );
                }
                ReportRow::Failed { algorithm, .. } => {
                    let _ = writeln!(out, "| {algorithm} (failed) |{}", " -- |".repeat(12));
                }
            }
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "The carousel columns of the fixed row describe the baseline page: the fixed carousel followed by an empty row."
        );
        if let Some(tau) = self.kendall_tau() {
            let _ = writeln!(out, "Kendall tau between individual and carousel MAP rankings: {tau:.3}.");
        }
        out
    }

    pub fn write(&self, csv_path: impl AsRef<Path>, markdown_path: impl AsRef<Path>) -> Result<()> {
        let (csv_path, md_path) = (csv_path.as_ref(), markdown_path.as_ref());
        std::fs::write(csv_path, self.to_csv()?).map_err(|e| Error::io(csv_path, e))?;
        std::fs::write(md_path, self.to_markdown()).map_err(|e| Error::io(md_path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Report> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Report::from_csv(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(p: f64, map: f64, n: f64, n2: f64) -> MetricSummary {
        MetricSummary {
            precision: p,
            map,
            ndcg: n,
            ndcg2d: n2,
            ..Default::default()
        }
    }

    fn outcome(map: f64, base: f64) -> CarouselOutcome {
        CarouselOutcome {
            page: summary(0.1, map, 0.3, 0.31),
            baseline: summary(0.05, base, 0.2, 0.21),
            improvement: improvement(map, base).unwrap(),
        }
    }

    fn sample() -> Report {
        let fixed = FixedSummary {
            label: "toppop".into(),
            individual: summary(0.1, 0.2, 0.3, 0.3),
            baseline: summary(0.05, 0.15, 0.2, 0.21),
        };
        Report::build(
            fixed,
            vec![
                ("A".into(), Ok((summary(0.2, 0.25, 0.3, 0.3), outcome(0.16, 0.15)))),
                ("B".into(), Err(Error::Numerical("did not converge".into()))),
                ("C".into(), Ok((summary(0.2, 0.1, 0.3, 0.3), outcome(0.18, 0.15)))),
            ],
        )
        .unwrap()
    }

    #[test]
    fn ranks_skip_failures() {
        let r = sample();
        let rows: Vec<_> = r.evaluated().collect();
        assert_eq!((rows[0].rank_individual, rows[0].rank_carousel, rows[0].delta_rank), (1, 2, -1));
        assert_eq!((rows[1].rank_individual, rows[1].rank_carousel, rows[1].delta_rank), (2, 1, 1));
        assert!(matches!(r.rows[1], ReportRow::Failed { .. }));
        assert_eq!(r.kendall_tau(), Some(-1.0));
    }

    #[test]
    fn csv_round_trip_preserves_markdown() {
        let r = sample();
        let csv = r.to_csv().unwrap();
        let back = Report::from_csv(&csv, Path::new("report.csv")).unwrap();
        assert_eq!(back.to_markdown(), r.to_markdown());
        assert_eq!(back.to_csv().unwrap(), csv);
    }

    #[test]
    fn markdown_formatting() {
        let md = sample().to_markdown();
        assert!(md.contains("| A | 0.2000 | 0.2500 |"), "{md}");
        assert!(md.contains("+25.0%"));
        assert!(md.contains("| B (failed) |"));
        assert!(md.contains("| -1 |"));
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let p = Path::new("r.csv");
        assert!(Report::from_csv("a,b\n", p).is_err());
        let csv = sample().to_csv().unwrap().replace("candidate,C,0.2", "candidate,C,zero");
        assert!(matches!(Report::from_csv(&csv, p), Err(Error::Parse { .. })));
    }
}
