use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bijection between external identifiers and dense indices, in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn from_ids(ids: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut map = IdMap::default();
        for id in ids {
            if map.index.contains_key(&id) {
                return Err(Error::invalid(format!("identifier '{id}' listed twice")));
            }
            map.get_or_insert(&id);
        }
        Ok(map)
    }

    pub fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn external(&self, index: usize) -> Option<&str> {
        self.ids.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// One identifier per line, in index order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for id in &self.ids {
            writeln!(out, "{id}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ids(text.lines().map(str::to_owned)).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// One parsed rating line with dense indices into the id-maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRecord {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Every record of a ratings file, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawInteractions {
    pub records: Vec<RawRecord>,
    pub users: IdMap,
    pub items: IdMap,
    /// Lines skipped because they could not be parsed (lenient mode only).
    pub malformed: usize,
}

impl RawInteractions {
    pub fn push(&mut self, user: &str, item: &str, rating: f64, timestamp: Option<i64>) {
        let user = self.users.get_or_insert(user);
        let item = self.items.get_or_insert(item);
        self.records.push(RawRecord {
            user,
            item,
            rating,
            timestamp,
        });
    }
}

/// Layout of a ratings file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionFormat {
    /// `user::item::rating[::timestamp]`, no header (MovieLens 1M/10M `.dat`).
    #[default]
    DoubleColon,
    /// Comma-separated with a header row; columns user, item, rating[, timestamp].
    Csv,
    /// Tab-separated with a header row; columns as for CSV.
    Tsv,
}

impl std::str::FromStr for InteractionFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double-colon" | "dat" => Ok(InteractionFormat::DoubleColon),
            "csv" => Ok(InteractionFormat::Csv),
            "tsv" => Ok(InteractionFormat::Tsv),
            other => Err(Error::Config(format!("unknown interaction format '{other}'"))),
        }
    }
}

fn parse_fields(fields: &[&str]) -> std::result::Result<(f64, Option<i64>), String> {
    if fields.len() < 3 || fields.len() > 4 {
        return Err(format!("expected 3 or 4 fields, found {}", fields.len()));
    }
    if fields[0].trim().is_empty() || fields[1].trim().is_empty() {
        return Err("empty user or item identifier".into());
    }
    let rating: f64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| format!("invalid rating '{}'", fields[2]))?;
    if !rating.is_finite() {
        return Err(format!("invalid rating '{}'", fields[2]));
    }
    let timestamp = match fields.get(3) {
        Some(t) => Some(
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("invalid timestamp '{t}'"))?,
        ),
        None => None,
    };
    Ok((rating, timestamp))
}

/// Parses a ratings file. With `strict`, the first malformed line is an error
/// carrying its line number; otherwise malformed lines are skipped and counted.
pub fn parse_interactions(
    path: impl AsRef<Path>,
    format: InteractionFormat,
    strict: bool,
) -> Result<RawInteractions> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut raw = RawInteractions::default();
    let accept = |raw: &mut RawInteractions, line: usize, fields: &[&str]| -> Result<()> {
        match parse_fields(fields) {
            Ok((rating, ts)) => {
                raw.push(fields[0].trim(), fields[1].trim(), rating, ts);
                Ok(())
            }
            Err(msg) if strict => Err(Error::parse(path, line, msg)),
            Err(_) => {
                raw.malformed += 1;
                Ok(())
            }
        }
    };
    match format {
        InteractionFormat::DoubleColon => {
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split("::").collect();
                accept(&mut raw, n + 1, &fields)?;
            }
        }
        InteractionFormat::Csv | InteractionFormat::Tsv => {
            let delimiter = if format == InteractionFormat::Csv { b',' } else { b'\t' };
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(delimiter)
                .has_headers(true)
                .flexible(true)
                .from_reader(file);
            for record in reader.records() {
                let record = match record {
                    Ok(r) => r,
                    Err(e) => {
                        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                        if strict {
                            return Err(Error::parse(path, line, e.to_string()));
                        }
                        raw.malformed += 1;
                        continue;
                    }
                };
                let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
                let fields: Vec<&str> = record.iter().collect();
                accept(&mut raw, line, &fields)?;
            }
        }
    }
    if raw.malformed > 0 {
        log::warn!("{}: skipped {} malformed lines", path.display(), raw.malformed);
    }
    if raw.records.is_empty() {
        return Err(Error::format(path, "no interactions found"));
    }
    Ok(raw)
}

/// Writes records back in `format`, using the external identifiers.
pub fn write_interactions(
    raw: &RawInteractions,
    path: impl AsRef<Path>,
    format: InteractionFormat,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let sep = match format {
        InteractionFormat::DoubleColon => "::",
        InteractionFormat::Csv => ",",
        InteractionFormat::Tsv => "\t",
    };
    let io = |e| Error::io(path, e);
    if format != InteractionFormat::DoubleColon {
        let with_ts = raw.records.iter().any(|r| r.timestamp.is_some());
        let header = if with_ts {
            ["user", "item", "rating", "timestamp"].join(sep)
        } else {
            ["user", "item", "rating"].join(sep)
        };
        writeln!(out, "{header}").map_err(io)?;
    }
    for r in &raw.records {
        let user = raw.users.external(r.user).expect("record index in id-map");
        let item = raw.items.external(r.item).expect("record index in id-map");
        match r.timestamp {
            Some(ts) => writeln!(out, "{user}{sep}{item}{sep}{}{sep}{ts}", r.rating),
            None => writeln!(out, "{user}{sep}{item}{sep}{}", r.rating),
        }
        .map_err(io)?;
    }
    out.flush().map_err(io)
}
