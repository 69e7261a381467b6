//! Seeded generator for a MovieLens-shaped toy dataset.
//!
//! Items carry one to three genres and a release year; popularity follows a
//! Zipf law; each user favours a few genres and rates items from them more
//! often and more highly. The files use the `::` layout of MovieLens 1M.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const GENRES: [&str; 12] = [
    "Action", "Adventure", "Animation", "Comedy", "Crime", "Documentary", "Drama", "Fantasy",
    "Horror", "Romance", "Sci-Fi", "Thriller",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub users: usize,
    pub items: usize,
    /// Mean number of ratings per user.
    pub ratings_per_user: usize,
    pub zipf_exponent: f64,
    /// Sampling weight multiplier for items in a user's favourite genres.
    pub genre_boost: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            users: 2000,
            items: 500,
            ratings_per_user: 40,
            zipf_exponent: 0.9,
            genre_boost: 4.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticItem {
    pub year: u32,
    pub genres: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub items: Vec<SyntheticItem>,
    pub favourite_genres: Vec<Vec<usize>>,
    /// `(user, item, rating, timestamp)` with 0-based indices.
    pub ratings: Vec<(usize, usize, f64, i64)>,
}

fn pick_genres(rng: &mut ChaCha8Rng, max: usize) -> Vec<usize> {
    let n = rng.random_range(1..=max);
    let mut g: Vec<usize> = sample(rng, GENRES.len(), n).into_vec();
    g.sort_unstable();
    g
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    if cfg.users == 0 || cfg.items == 0 || cfg.ratings_per_user == 0 {
        return Err(Error::invalid("synthetic dataset needs users, items and ratings"));
    }
    if !(cfg.zipf_exponent.is_finite() && cfg.zipf_exponent >= 0.0 && cfg.genre_boost >= 0.0) {
        return Err(Error::invalid("invalid synthetic popularity parameters"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, 0.8).expect("valid normal");
    let quality = Normal::new(0.0, 0.5).expect("valid normal");

    let items: Vec<SyntheticItem> = (0..cfg.items)
        .map(|_| SyntheticItem {
            year: rng.random_range(1950..2020),
            genres: pick_genres(&mut rng, 3),
        })
        .collect();
    let item_quality: Vec<f64> = (0..cfg.items).map(|_| quality.sample(&mut rng)).collect();
    // Popularity rank is a random permutation so item ids carry no signal.
    let ranks = sample(&mut rng, cfg.items, cfg.items).into_vec();
    let popularity: Vec<f64> = ranks
        .iter()
        .map(|&r| 1.0 / ((r + 1) as f64).powf(cfg.zipf_exponent))
        .collect();

    let favourite_genres: Vec<Vec<usize>> = (0..cfg.users).map(|_| pick_genres(&mut rng, 3)).collect();
    let per_user_cap = cfg.items;
    let mut ratings = Vec::with_capacity(cfg.users * cfg.ratings_per_user);
    let mut clock: i64 = 978_300_000;
    for (user, favs) in favourite_genres.iter().enumerate() {
        let matches = |i: usize| items[i].genres.iter().any(|g| favs.contains(g));
        let weights: Vec<f64> = (0..cfg.items)
            .map(|i| popularity[i] * if matches(i) { 1.0 + cfg.genre_boost } else { 1.0 })
            .collect();
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::invalid(e.to_string()))?;
        let lo = (cfg.ratings_per_user / 2).max(1);
        let hi = (cfg.ratings_per_user * 3 / 2).max(lo);
        let target = rng.random_range(lo..=hi).min(per_user_cap);
        let mut chosen = vec![false; cfg.items];
        let mut picked = Vec::with_capacity(target);
        while picked.len() < target {
            let i = dist.sample(&mut rng);
            if !chosen[i] {
                chosen[i] = true;
                picked.push(i);
            }
        }
        for item in picked {
            let affinity = if matches(item) { 1.2 } else { 0.0 };
            let raw = 2.6 + affinity + item_quality[item] + noise.sample(&mut rng);
            let rating = ((raw * 2.0).round() / 2.0).clamp(0.5, 5.0);
            clock += rng.random_range(1..600);
            ratings.push((user, item, rating, clock));
        }
    }
    Ok(SyntheticDataset {
        items,
        favourite_genres,
        ratings,
    })
}

/// Paths of the files written by [`write_dataset`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub ratings: PathBuf,
    pub movies: PathBuf,
    pub users: PathBuf,
}

/// Writes `ratings.dat`, `movies.dat` and `users.dat` into `dir`. External ids are 1-based.
pub fn write_dataset(data: &SyntheticDataset, dir: impl AsRef<Path>) -> Result<SyntheticFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = SyntheticFiles {
        ratings: dir.join("ratings.dat"),
        movies: dir.join("movies.dat"),
        users: dir.join("users.dat"),
    };
    write_lines(&files.ratings, data.ratings.iter().map(|&(u, i, r, t)| {
        format!("{}::{}::{}::{t}", u + 1, i + 1, r)
    }))?;
    write_lines(&files.movies, data.items.iter().enumerate().map(|(i, item)| {
        let genres: Vec<&str> = item.genres.iter().map(|&g| GENRES[g]).collect();
        format!("{}::Movie {} ({})::{}", i + 1, i + 1, item.year, genres.join("|"))
    }))?;
    write_lines(&files.users, data.favourite_genres.iter().enumerate().map(|(u, favs)| {
        let feats: Vec<String> = favs.iter().map(|&g| format!("likes:{}", GENRES[g])).collect();
        format!("{}::{}", u + 1, feats.join("|"))
    }))?;
    Ok(files)
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for line in lines {
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            users: 50,
            items: 40,
            ratings_per_user: 8,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate(&small()).unwrap();
        assert_eq!(a, generate(&small()).unwrap());
        let b = generate(&SyntheticConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a.ratings, b.ratings);
    }

    #[test]
    fn ratings_are_distinct_and_on_scale() {
        let d = generate(&small()).unwrap();
        let mut pairs: Vec<(usize, usize)> = d.ratings.iter().map(|r| (r.0, r.1)).collect();
        pairs.sort_unstable();
        let n = pairs.len();
        pairs.dedup();
        assert_eq!(pairs.len(), n);
        assert!(d.ratings.iter().all(|r| (0.5..=5.0).contains(&r.2) && (r.2 * 2.0).fract() == 0.0));
        assert!(d.ratings.windows(2).all(|w| w[0].3 < w[1].3));
    }

    #[test]
    fn files_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate(&small()).unwrap();
        let files = write_dataset(&d, dir.path()).unwrap();
        let raw = crate::data::parse_interactions(&files.ratings, Default::default(), true).unwrap();
        assert_eq!(raw.records.len(), d.ratings.len());
        let f = crate::data::parse_item_features(Some(&files.movies), None, &raw.items).unwrap();
        assert!(f.names.index_of("genre:Drama").is_some() || f.names.len() > 0);
    }
}
