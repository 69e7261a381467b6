//! Content features: genres, release decades and user tags for items, and
//! generic `id::feature|feature` attribute files for users.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::IdMap;
use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

/// Binary entity × feature incidence with the feature vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub matrix: FeatureMatrix,
    pub names: IdMap,
    /// Distinct entities mentioned in the files but unknown to the interaction data.
    pub dropped_entities: usize,
}

#[derive(Default)]
struct Builder {
    names: IdMap,
    pairs: BTreeSet<(usize, usize)>,
    dropped: BTreeSet<String>,
}

impl Builder {
    fn add(&mut self, ids: &IdMap, entity: &str, feature: &str) {
        match ids.index_of(entity) {
            Some(e) => {
                let f = self.names.get_or_insert(feature);
                self.pairs.insert((e, f));
            }
            None => {
                self.dropped.insert(entity.to_owned());
            }
        }
    }

    fn finish(self, num_entities: usize, what: &str) -> Result<Features> {
        if !self.dropped.is_empty() {
            log::warn!(
                "dropped features of {} {what}s absent from the interactions",
                self.dropped.len()
            );
        }
        Ok(Features {
            matrix: FeatureMatrix::new(
                num_entities,
                self.names.len(),
                self.pairs.into_iter().map(|(e, f)| (e, f, 1.0)),
            )?,
            names: self.names,
            dropped_entities: self.dropped.len(),
        })
    }
}

fn for_each_line(path: &Path, mut f: impl FnMut(usize, &str) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            f(n + 1, &line)?;
        }
    }
    Ok(())
}

/// Release year in a trailing `(YYYY)` of a title.
fn release_year(title: &str) -> Option<u32> {
    let title = title.trim_end();
    let inner = title.strip_suffix(')')?;
    let open = inner.rfind('(')?;
    let year = &inner[open + 1..];
    (year.len() == 4 && year.bytes().all(|b| b.is_ascii_digit()))
        .then(|| year.parse().ok())
        .flatten()
}

/// Item features from a MovieLens-style movies file
/// (`item::Title (Year)::Genre|Genre`) and/or tags file (`user::item::tag[::ts]`).
///
/// Features are `genre:<name>`, `decade:<1990s>` and lower-cased `tag:<text>`.
/// Items are indexed through `items`; unknown items are dropped and counted.
pub fn parse_item_features(
    movies: Option<&Path>,
    tags: Option<&Path>,
    items: &IdMap,
) -> Result<Features> {
    let mut b = Builder::default();
    if let Some(path) = movies {
        for_each_line(path, |line_no, line| {
            let fields: Vec<&str> = line.split("::").collect();
            if fields.len() != 3 {
                return Err(Error::parse(path, line_no, "expected item::title::genres"));
            }
            let item = fields[0].trim();
            if let Some(year) = release_year(fields[1]) {
                b.add(items, item, &format!("decade:{}s", year / 10 * 10));
            }
            for genre in fields[2].split('|').map(str::trim) {
                if !genre.is_empty() && genre != "(no genres listed)" {
                    b.add(items, item, &format!("genre:{genre}"));
                }
            }
            Ok(())
        })?;
    }
    if let Some(path) = tags {
        for_each_line(path, |line_no, line| {
            let fields: Vec<&str> = line.split("::").collect();
            if fields.len() < 3 {
                return Err(Error::parse(path, line_no, "expected user::item::tag"));
            }
            let tag = fields[2].trim().to_lowercase();
            if !tag.is_empty() {
                b.add(items, fields[1].trim(), &format!("tag:{tag}"));
            }
            Ok(())
        })?;
    }
    b.finish(items.len(), "item")
}

/// Entity attributes from `id::feature|feature|...` lines.
pub fn parse_entity_features(path: &Path, ids: &IdMap) -> Result<Features> {
    let mut b = Builder::default();
    for_each_line(path, |line_no, line| {
        let (id, rest) = line
            .split_once("::")
            .ok_or_else(|| Error::parse(path, line_no, "expected id::features"))?;
        for feature in rest.split('|').map(str::trim).filter(|f| !f.is_empty()) {
            b.add(ids, id.trim(), feature);
        }
        Ok(())
    })?;
    b.finish(ids.len(), "entity")
}
