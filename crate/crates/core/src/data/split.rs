//! Implicitization, seeded global hold-out splitting and split persistence.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{IdMap, RawInteractions};
use crate::error::{Error, Result};
use crate::model::{DatasetSplit, InteractionMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitOptions {
    /// Ratings at or above this value become interactions.
    pub threshold: f64,
    /// Store the rating instead of 1.0 (for graded relevance).
    pub keep_ratings: bool,
    /// Re-index users and items so that none is left without interactions.
    pub compact: bool,
}

impl ImplicitOptions {
    pub fn new(threshold: f64) -> Self {
        ImplicitOptions {
            threshold,
            keep_ratings: false,
            compact: false,
        }
    }
}

/// Interactions with the id-maps that index them.
#[derive(Debug, Clone, PartialEq)]
pub struct Implicit {
    pub matrix: InteractionMatrix,
    pub users: IdMap,
    pub items: IdMap,
}

/// Keeps ratings `>= threshold` as value-1 interactions over the full id spaces.
pub fn implicitize(raw: &RawInteractions, threshold: f64) -> Result<InteractionMatrix> {
    Ok(implicitize_with(raw, ImplicitOptions::new(threshold))?.matrix)
}

/// Implicitization with all options. A `(user, item)` pair rated more than
/// once keeps its highest rating.
pub fn implicitize_with(raw: &RawInteractions, opts: ImplicitOptions) -> Result<Implicit> {
    let mut best: HashMap<(usize, usize), f64> = HashMap::new();
    for r in raw.records.iter().filter(|r| r.rating >= opts.threshold) {
        let slot = best.entry((r.user, r.item)).or_insert(r.rating);
        *slot = slot.max(r.rating);
    }
    if best.is_empty() {
        return Err(Error::invalid(format!(
            "no rating reaches the implicit threshold {}",
            opts.threshold
        )));
    }
    let mut entries: Vec<(usize, usize, f64)> = best
        .into_iter()
        .map(|((u, i), r)| (u, i, if opts.keep_ratings { r } else { 1.0 }))
        .collect();
    entries.sort_unstable_by_key(|&(u, i, _)| (u, i));

    let (users, items) = if opts.compact {
        let mut user_remap = vec![usize::MAX; raw.users.len()];
        let mut item_remap = vec![usize::MAX; raw.items.len()];
        let mut users = IdMap::default();
        let mut items = IdMap::default();
        // keep first-appearance order of the source file
        for r in &raw.records {
            if entries.binary_search_by_key(&(r.user, r.item), |&(u, i, _)| (u, i)).is_ok() {
                if user_remap[r.user] == usize::MAX {
                    user_remap[r.user] = users.get_or_insert(raw.users.external(r.user).unwrap());
                }
                if item_remap[r.item] == usize::MAX {
                    item_remap[r.item] = items.get_or_insert(raw.items.external(r.item).unwrap());
                }
            }
        }
        for e in &mut entries {
            e.0 = user_remap[e.0];
            e.1 = item_remap[e.1];
        }
        (users, items)
    } else {
        (raw.users.clone(), raw.items.clone())
    };
    Ok(Implicit {
        matrix: InteractionMatrix::new(users.len(), items.len(), entries)?,
        users,
        items,
    })
}

/// Fractions of a global random hold-out split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
            seed: 42,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::Config(format!(
                "split fractions must lie in (0, 1), got {parts:?}"
            )));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions must sum to 1, got {parts:?}")));
        }
        Ok(())
    }
}

/// Uniform integer in `0..n` by rejection sampling on raw 64-bit output.
fn uniform_below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    debug_assert!(n > 0);
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

/// Fisher–Yates shuffle driven by ChaCha8 seeded through `seed_from_u64`.
/// Only raw generator output is consumed so the permutation depends on nothing
/// but the seed.
pub fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = uniform_below(&mut rng, i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

fn part_size(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction + 1e-9).floor() as usize
}

/// Global random hold-out: interactions (in `(user, item)` order) are permuted
/// with the seeded generator; the first block goes to validation, the next to
/// test, and the remainder (absorbing rounding) to train.
pub fn split_holdout(matrix: &InteractionMatrix, cfg: &SplitConfig) -> Result<DatasetSplit> {
    cfg.validate()?;
    if matrix.is_empty() {
        return Err(Error::invalid("cannot split an empty matrix"));
    }
    let entries: Vec<(usize, usize, f64)> = matrix.entries().collect();
    let n = entries.len();
    let n_validation = part_size(n, cfg.validation);
    let n_test = part_size(n, cfg.test);
    let n_train = n - n_validation - n_test;
    if n_validation == 0 || n_test == 0 || n_train == 0 {
        return Err(Error::invalid(format!(
            "{n} interactions leave an empty part ({n_train}/{n_validation}/{n_test})"
        )));
    }
    let perm = seeded_permutation(n, cfg.seed);
    let pick = |range: std::ops::Range<usize>| {
        InteractionMatrix::new(
            matrix.num_users(),
            matrix.num_items(),
            perm[range].iter().map(|&k| entries[k]),
        )
    };
    DatasetSplit::new(
        pick(n_validation + n_test..n)?,
        pick(0..n_validation)?,
        pick(n_validation..n_validation + n_test)?,
        cfg.seed,
    )
}

/// Keeps the interactions of a seeded random `fraction` of users; index spaces
/// are unchanged.
pub fn user_subsample(matrix: &InteractionMatrix, fraction: f64, seed: u64) -> Result<InteractionMatrix> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("user fraction must lie in (0, 1], got {fraction}")));
    }
    let keep_count = part_size(matrix.num_users(), fraction).max(1);
    let mut keep = vec![false; matrix.num_users()];
    for &u in &seeded_permutation(matrix.num_users(), seed)[..keep_count] {
        keep[u] = true;
    }
    InteractionMatrix::new(
        matrix.num_users(),
        matrix.num_items(),
        matrix.entries().filter(|&(u, _, _)| keep[u]),
    )
}

const SPLIT_MAGIC: &str = "# carousel-split v1";

/// Writes all three parts to one tab-separated file
/// (`part user item value`, after a `# carousel-split v1 users=.. items=.. seed=..` header).
pub fn save_split(split: &DatasetSplit, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(
        out,
        "{SPLIT_MAGIC} users={} items={} seed={}",
        split.train.num_users(),
        split.train.num_items(),
        split.seed
    )
    .map_err(io)?;
    for (name, part) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
        for (u, i, v) in part.entries() {
            writeln!(out, "{name}\t{u}\t{i}\t{v}").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

fn header_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}

pub fn load_split(path: impl AsRef<Path>) -> Result<DatasetSplit> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty split file"))?
        .map_err(|e| Error::io(path, e))?;
    if !header.starts_with(SPLIT_MAGIC) {
        return Err(Error::format(path, "missing or unsupported split header"));
    }
    let num = |key: &str| -> Result<u64> {
        header_value(&header, key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format(path, format!("header lacks '{key}'")))
    };
    let (users, items, seed) = (num("users")? as usize, num("items")? as usize, num("seed")?);
    let mut parts: [Vec<(usize, usize, f64)>; 3] = Default::default();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = n + 2;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::parse(path, line_no, "expected part, user, item, value"));
        }
        let slot = match f[0] {
            "train" => 0,
            "validation" => 1,
            "test" => 2,
            other => return Err(Error::parse(path, line_no, format!("unknown part '{other}'"))),
        };
        let bad = || Error::parse(path, line_no, "invalid number");
        parts[slot].push((
            f[1].parse().map_err(|_| bad())?,
            f[2].parse().map_err(|_| bad())?,
            f[3].parse().map_err(|_| bad())?,
        ));
    }
    let [train, validation, test] = parts;
    let build = |entries| InteractionMatrix::new(users, items, entries).map_err(|e| Error::format(path, e.to_string()));
    DatasetSplit::new(build(train)?, build(validation)?, build(test)?, seed)
        .map_err(|e| Error::format(path, e.to_string()))
}
