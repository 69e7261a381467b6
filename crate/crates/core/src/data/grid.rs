//! Tab-separated persistence of per-user carousel pages.
//!
//! ```text
//! # carousel-grid v1 alpha=1 beta=1 cutoffs=10,10 records=40
//! user	row	rank	provider	item
//! 0	1	1	toppop	17
//! 0	1	2	toppop	-
//! ```
//!
//! Rows and ranks are 1-based; `-` marks a placeholder cell. `records` counts
//! the data lines and detects truncation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::PageSet;
use crate::model::{Carousel, CarouselPage, Cell, DiscountWeights};

const GRID_MAGIC: &str = "# carousel-grid v1";
const COLUMNS: &str = "user\trow\trank\tprovider\titem";

/// Metadata carried in the grid header.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHeader {
    pub weights: DiscountWeights,
    /// Nominal length of each row.
    pub cutoffs: Vec<usize>,
}

pub fn save_grid(pages: &PageSet, header: &GridHeader, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let records: usize = pages.values().map(CarouselPage::occupied).sum();
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let cutoffs: Vec<String> = header.cutoffs.iter().map(usize::to_string).collect();
    writeln!(
        out,
        "{GRID_MAGIC} alpha={} beta={} cutoffs={} records={records}",
        header.weights.alpha(),
        header.weights.beta(),
        cutoffs.join(",")
    )
    .map_err(io)?;
    writeln!(out, "{COLUMNS}").map_err(io)?;
    for (user, page) in pages {
        for (r, row) in page.rows().iter().enumerate() {
            let provider = row.provider();
            if provider.is_empty() || provider.contains(['\t', '\n', '\r']) || provider == "-" {
                return Err(Error::invalid(format!("provider name {provider:?} cannot be stored")));
            }
            for (c, cell) in row.cells().iter().enumerate() {
                let item = match cell {
                    Cell::Item(i) => i.to_string(),
                    Cell::Placeholder => "-".to_owned(),
                };
                writeln!(out, "{user}\t{}\t{}\t{provider}\t{item}", r + 1, c + 1).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

fn header_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}

fn parse_header(path: &Path, line: &str) -> Result<(GridHeader, usize)> {
    let Some(rest) = line.strip_prefix("# carousel-grid ") else {
        return Err(Error::format(path, "missing grid header"));
    };
    if !rest.starts_with("v1 ") && rest != "v1" {
        let version = rest.split_whitespace().next().unwrap_or("");
        return Err(Error::format(path, format!("unsupported grid version '{version}'")));
    }
    let bad = |key: &str| Error::format(path, format!("invalid or missing '{key}' in header"));
    let num = |key: &str| -> Result<f64> {
        header_value(line, key).and_then(|v| v.parse().ok()).ok_or_else(|| bad(key))
    };
    let weights = DiscountWeights::new(num("alpha")?, num("beta")?)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let cutoffs = match header_value(line, "cutoffs").ok_or_else(|| bad("cutoffs"))? {
        "" => Vec::new(),
        list => list
            .split(',')
            .map(|c| c.parse::<usize>().map_err(|_| bad("cutoffs")))
            .collect::<Result<Vec<_>>>()?,
    };
    let records = header_value(line, "records")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("records"))?;
    Ok((GridHeader { weights, cutoffs }, records))
}

#[derive(Default)]
struct PendingRow {
    provider: String,
    cells: Vec<Cell>,
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<(GridHeader, PageSet)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next_line = || lines.next().transpose().map_err(|e| Error::io(path, e));
    let first = next_line()?.ok_or_else(|| Error::format(path, "empty grid file"))?;
    let (header, records) = parse_header(path, &first)?;
    match next_line()? {
        Some(cols) if cols == COLUMNS => {}
        _ => return Err(Error::parse(path, 2, "missing column header")),
    }

    let mut pages = PageSet::new();
    let mut current: Option<(usize, Vec<PendingRow>)> = None;
    let finish = |pages: &mut PageSet, user: usize, rows: Vec<PendingRow>, line: usize| -> Result<()> {
        let carousels = rows
            .into_iter()
            .map(|r| Carousel::from_cells(r.provider, r.cells))
            .collect::<Result<Vec<_>>>()
            .and_then(CarouselPage::new)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        if pages.insert(user, carousels).is_some() {
            return Err(Error::parse(path, line, format!("user {user} appears in two blocks")));
        }
        Ok(())
    };

    let mut seen = 0usize;
    let mut line_no = 2;
    while let Some(line) = next_line()? {
        line_no += 1;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::parse(path, line_no, "expected user, row, rank, provider, item"));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(path, line_no, format!("invalid integer '{s}'")))
        };
        let (user, row, rank) = (int(f[0])?, int(f[1])?, int(f[2])?);
        let cell = if f[4] == "-" { Cell::Placeholder } else { Cell::Item(int(f[4])?) };

        if current.as_ref().is_some_and(|(u, _)| *u != user) {
            let (u, rows) = current.take().unwrap();
            finish(&mut pages, u, rows, line_no - 1)?;
        }
        let rows = &mut current.get_or_insert_with(|| (user, Vec::new())).1;
        if row == rows.len() + 1 && rank == 1 {
            rows.push(PendingRow {
                provider: f[3].to_owned(),
                cells: Vec::new(),
            });
        }
        let in_order = row == rows.len() && rows.last().is_some_and(|r| r.cells.len() + 1 == rank);
        if !in_order {
            return Err(Error::parse(path, line_no, "rows and ranks must be consecutive from 1"));
        }
        let last = rows.last_mut().expect("checked above");
        if last.provider != f[3] {
            return Err(Error::parse(path, line_no, "provider changes within a row"));
        }
        last.cells.push(cell);
        seen += 1;
    }
    if let Some((u, rows)) = current.take() {
        finish(&mut pages, u, rows, line_no)?;
    }
    if seen != records {
        return Err(Error::format(
            path,
            format!("truncated grid: header declares {records} records, found {seen}"),
        ));
    }
    Ok((header, pages))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> GridHeader {
        GridHeader {
            weights: DiscountWeights::default(),
            cutoffs: vec![3, 3],
        }
    }

    fn sample() -> PageSet {
        let mut pages = PageSet::new();
        pages.insert(0, CarouselPage::from_items(&[&[0, 1, 2], &[3, 0, 4]]).unwrap());
        let ragged = CarouselPage::new(vec![
            Carousel::new("toppop", [5, 6]).unwrap(),
            Carousel::padded("easer", [7], 3).unwrap(),
        ])
        .unwrap();
        pages.insert(4, ragged);
        pages
    }

    #[test]
    fn round_trip_preserves_structure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.tsv");
        save_grid(&sample(), &header(), &path).unwrap();
        let (h, pages) = load_grid(&path).unwrap();
        assert_eq!(h, header());
        assert_eq!(pages, sample());
    }

    #[test]
    fn empty_page_set_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.tsv");
        save_grid(&PageSet::new(), &header(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        assert!(load_grid(&path).unwrap().1.is_empty());
    }

    #[test]
    fn corrupted_line_reports_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.tsv");
        save_grid(&sample(), &header(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[4] = "0\t1\tthree\trow1\t2";
        std::fs::write(&path, lines.join("\n")).unwrap();
        match load_grid(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncation_and_version_are_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.tsv");
        save_grid(&sample(), &header(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().take(6).collect();
        std::fs::write(&path, kept.join("\n")).unwrap();
        assert!(matches!(load_grid(&path), Err(Error::Format { .. })));

        std::fs::write(&path, text.replacen("v1", "v9", 1)).unwrap();
        let err = load_grid(&path).unwrap_err().to_string();
        assert!(err.contains("version"), "{err}");
    }

    #[test]
    fn duplicate_within_row_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.tsv");
        let text = format!(
            "{GRID_MAGIC} alpha=1 beta=1 cutoffs=2 records=2\n{COLUMNS}\n0\t1\t1\tp\t3\n0\t1\t2\tp\t3\n"
        );
        std::fs::write(&path, text).unwrap();
        assert!(load_grid(&path).is_err());
    }
}
