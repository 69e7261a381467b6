use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{InteractionFormat, SplitConfig};
use crate::error::{Error, Result};
use crate::experiment::SearchSpace;
use crate::model::{DiscountWeights, RelevanceMode};
use crate::recommenders::{Algorithm, HyperParams};

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "CAROUSEL_DATA_DIR";

/// Everything a run needs, read from a TOML file. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub evaluation: EvaluationConfig,
    pub tuning: TuningConfig,
    pub algorithms: Vec<AlgorithmConfig>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Base directory for relative data paths. Falls back to `$CAROUSEL_DATA_DIR`, then `data`.
    pub dir: Option<PathBuf>,
    pub ratings: PathBuf,
    pub format: InteractionFormat,
    /// MovieLens `movies.dat`-style file for genre and decade features.
    pub movies: Option<PathBuf>,
    /// `user::item::tag` file for tag features.
    pub tags: Option<PathBuf>,
    /// `user::feature|feature` file for user content features.
    pub user_features: Option<PathBuf>,
    pub implicit_threshold: f64,
    /// Abort on the first malformed ratings line instead of skipping it.
    pub strict: bool,
    /// Fraction of users kept by a seeded subsample (1 keeps all).
    pub user_fraction: f64,
    pub relevance: RelevanceMode,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dir: None,
            ratings: PathBuf::from("ratings.dat"),
            format: InteractionFormat::DoubleColon,
            movies: None,
            tags: None,
            user_features: None,
            implicit_threshold: 3.5,
            strict: false,
            user_fraction: 1.0,
            relevance: RelevanceMode::Binary,
        }
    }
}

impl DataConfig {
    pub fn base_dir(&self) -> PathBuf {
        self.dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data"))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir().join(path)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Length of every carousel and of the individual lists.
    pub cutoff: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Fixed rows, top to bottom: an algorithm id or `grid:<path>[#row]`.
    pub fixed: Vec<String>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            cutoff: 10,
            alpha: 1.0,
            beta: 1.0,
            fixed: vec!["toppop".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub budget: usize,
    pub seed: u64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig { budget: 50, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub name: Algorithm,
    /// Fixed hyperparameter values; these are not searched.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Search ranges; defaults to a broad space over the remaining parameters.
    #[serde(default)]
    pub search: Option<SearchSpace>,
    #[serde(default)]
    pub exclude_seen: Option<bool>,
}

impl AlgorithmConfig {
    pub fn new(name: Algorithm) -> Self {
        AlgorithmConfig {
            name,
            params: BTreeMap::new(),
            search: None,
            exclude_seen: None,
        }
    }

    /// Defaults overlaid with the configured values; `seed` comes from the run.
    pub fn base_params(&self, seed: u64) -> Result<HyperParams> {
        let mut p = HyperParams {
            seed,
            ..HyperParams::default()
        };
        for (name, &value) in &self.params {
            p.set(name, value)
                .map_err(|_| Error::Config(format!("{}: unknown hyperparameter '{name}'", self.name)))?;
        }
        Ok(p)
    }

    pub fn search_space(&self) -> SearchSpace {
        match &self.search {
            Some(space) => space.clone(),
            None => {
                let mut space = SearchSpace::default_for(self.name);
                space.ranges.retain(|name, _| !self.params.contains_key(name));
                space
            }
        }
    }

    pub fn exclude_seen(&self) -> bool {
        self.exclude_seen.unwrap_or(self.name.default_exclude_seen())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub save_models: bool,
    /// Also write every evaluated carousel page as a grid file.
    pub save_grids: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            save_models: true,
            save_grids: false,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            split: SplitConfig::default(),
            evaluation: EvaluationConfig::default(),
            tuning: TuningConfig::default(),
            algorithms: [
                Algorithm::TopPop,
                Algorithm::ItemKnnCf,
                Algorithm::UserKnnCf,
                Algorithm::P3Alpha,
                Algorithm::Rp3Beta,
                Algorithm::EaseR,
                Algorithm::PureSvd,
            ]
            .into_iter()
            .map(AlgorithmConfig::new)
            .collect(),
            output: OutputConfig::default(),
        }
    }
}

/// A fixed row of the carousel scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedSpec {
    Algorithm(Algorithm),
    /// Row `row` (0-based) of a grid file.
    Grid { path: PathBuf, row: usize },
}

impl FixedSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.strip_prefix("grid:") {
            Some(rest) => {
                let (path, row) = match rest.rsplit_once('#') {
                    Some((p, r)) => {
                        let row: usize = r
                            .parse()
                            .ok()
                            .filter(|&r| r >= 1)
                            .ok_or_else(|| Error::Config(format!("invalid grid row in '{spec}'")))?;
                        (p, row - 1)
                    }
                    None => (rest, 0),
                };
                if path.is_empty() {
                    return Err(Error::Config(format!("missing grid path in '{spec}'")));
                }
                Ok(FixedSpec::Grid {
                    path: PathBuf::from(path),
                    row,
                })
            }
            None => Ok(FixedSpec::Algorithm(spec.parse()?)),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Replaces both the split seed and the tuning seed.
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub cutoff: Option<usize>,
    pub fixed: Vec<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.split.seed = seed;
            self.tuning.seed = seed;
        }
        if let Some(a) = o.alpha {
            self.evaluation.alpha = a;
        }
        if let Some(b) = o.beta {
            self.evaluation.beta = b;
        }
        if let Some(c) = o.cutoff {
            self.evaluation.cutoff = c;
        }
        if !o.fixed.is_empty() {
            self.evaluation.fixed = o.fixed.clone();
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
    }

    pub fn weights(&self) -> Result<DiscountWeights> {
        DiscountWeights::new(self.evaluation.alpha, self.evaluation.beta).map_err(|e| match e {
            Error::InvalidInput(m) => Error::Config(m),
            other => other,
        })
    }

    pub fn fixed_specs(&self) -> Result<Vec<FixedSpec>> {
        self.evaluation.fixed.iter().map(|s| FixedSpec::parse(s)).collect()
    }

    /// Checks every value before any work starts.
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        let d = &self.data;
        if !d.implicit_threshold.is_finite() {
            return cfg(format!("implicit_threshold must be finite, got {}", d.implicit_threshold));
        }
        if !(d.user_fraction > 0.0 && d.user_fraction <= 1.0) {
            return cfg(format!("user_fraction must lie in (0, 1], got {}", d.user_fraction));
        }
        self.split.validate()?;
        if self.evaluation.cutoff == 0 {
            return cfg("cutoff must be >= 1".into());
        }
        self.weights()?;
        if self.evaluation.fixed.is_empty() {
            return cfg("at least one fixed carousel is required".into());
        }
        self.fixed_specs()?;
        if self.tuning.budget == 0 {
            return cfg("tuning budget must be >= 1".into());
        }
        if self.algorithms.is_empty() {
            return cfg("no algorithms configured".into());
        }
        let mut seen = BTreeSet::new();
        for a in &self.algorithms {
            if !seen.insert(a.name) {
                return cfg(format!("algorithm '{}' listed twice", a.name));
            }
            a.base_params(self.tuning.seed)?
                .validate()
                .map_err(|e| Error::Config(format!("{}: {e}", a.name)))?;
            a.search_space()
                .validate()
                .map_err(|e| Error::Config(format!("{}: {e}", a.name)))?;
        }
        Ok(())
    }
}
