use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::protocol::{evaluate_individual, ModelProvider};
use crate::error::{Error, Result};
use crate::model::GroundTruth;
use crate::recommenders::{fit, Algorithm, HyperParams, TrainingData};

/// Sampling distribution of one hyperparameter.
///
/// In config files a bare number is a fixed value; otherwise one of
/// `{ uniform = [lo, hi] }`, `{ log_uniform = [lo, hi] }` or `{ int_uniform = [lo, hi] }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "RangeRepr")]
pub enum ParamRange {
    Fixed(f64),
    Uniform(f64, f64),
    LogUniform(f64, f64),
    IntUniform(i64, i64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    Value(f64),
    Spec(RangeSpec),
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RangeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    uniform: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_uniform: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    int_uniform: Option<[i64; 2]>,
}

impl TryFrom<RangeRepr> for ParamRange {
    type Error = Error;

    fn try_from(r: RangeRepr) -> Result<Self> {
        let range = match r {
            RangeRepr::Value(v) => ParamRange::Fixed(v),
            RangeRepr::Spec(s) => match (s.uniform, s.log_uniform, s.int_uniform) {
                (Some([lo, hi]), None, None) => ParamRange::Uniform(lo, hi),
                (None, Some([lo, hi]), None) => ParamRange::LogUniform(lo, hi),
                (None, None, Some([lo, hi])) => ParamRange::IntUniform(lo, hi),
                _ => {
                    return Err(Error::Config(
                        "a range needs exactly one of uniform, log_uniform, int_uniform".into(),
                    ))
                }
            },
        };
        range.validate()?;
        Ok(range)
    }
}

impl From<ParamRange> for RangeRepr {
    fn from(r: ParamRange) -> Self {
        let mut spec = RangeSpec::default();
        match r {
            ParamRange::Fixed(v) => return RangeRepr::Value(v),
            ParamRange::Uniform(a, b) => spec.uniform = Some([a, b]),
            ParamRange::LogUniform(a, b) => spec.log_uniform = Some([a, b]),
            ParamRange::IntUniform(a, b) => spec.int_uniform = Some([a, b]),
        }
        RangeRepr::Spec(spec)
    }
}

impl ParamRange {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ParamRange::Fixed(v) => v.is_finite(),
            ParamRange::Uniform(a, b) => a.is_finite() && b.is_finite() && a <= b,
            ParamRange::LogUniform(a, b) => a > 0.0 && b.is_finite() && a <= b,
            ParamRange::IntUniform(a, b) => a <= b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid range {self:?}")))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            ParamRange::Fixed(v) => v,
            ParamRange::Uniform(a, b) => a + (b - a) * rng.random::<f64>(),
            ParamRange::LogUniform(a, b) => (a.ln() + (b.ln() - a.ln()) * rng.random::<f64>()).exp(),
            ParamRange::IntUniform(a, b) => rng.random_range(a..=b) as f64,
        }
    }
}

/// Ranges keyed by hyperparameter name; unnamed parameters keep their base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchSpace {
    pub ranges: BTreeMap<String, ParamRange>,
}

impl SearchSpace {
    /// A broad default space over the parameters the algorithm reads.
    pub fn default_for(algorithm: Algorithm) -> Self {
        let mut ranges = BTreeMap::new();
        for &name in algorithm.params() {
            let range = match name {
                "k" => ParamRange::IntUniform(5, 500),
                "shrink" => ParamRange::LogUniform(1.0, 1000.0),
                "alpha" => ParamRange::Uniform(0.0, 2.0),
                "beta" => ParamRange::Uniform(0.0, 1.0),
                "lambda" => ParamRange::LogUniform(1.0, 10_000.0),
                "factors" => ParamRange::IntUniform(5, 200),
                "content_weight" => ParamRange::LogUniform(0.01, 10.0),
                _ => continue,
            };
            ranges.insert(name.to_owned(), range);
        }
        SearchSpace { ranges }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, range) in &self.ranges {
            if !HyperParams::NAMES.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown hyperparameter '{name}' in search space")));
            }
            range.validate()?;
        }
        Ok(())
    }

    /// Draws one configuration, visiting parameters in name order.
    pub fn sample(&self, base: &HyperParams, rng: &mut ChaCha8Rng) -> Result<HyperParams> {
        let mut params = base.clone();
        for (name, range) in &self.ranges {
            params.set(name, range.sample(rng))?;
        }
        Ok(params)
    }
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub params: HyperParams,
    pub score: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: HyperParams,
    pub best_score: f64,
    pub best_index: usize,
    pub trials: Vec<Trial>,
}

/// Evaluates `budget` configurations sampled under `seed` and keeps the one
/// with the highest objective (earliest trial on ties). Configurations are
/// drawn up front, evaluated in parallel and reported in draw order.
pub fn random_search<F>(
    space: &SearchSpace,
    base: &HyperParams,
    budget: usize,
    seed: u64,
    objective: F,
) -> Result<SearchOutcome>
where
    F: Fn(&HyperParams) -> Result<f64> + Sync,
{
    if budget == 0 {
        return Err(Error::invalid("search budget must be >= 1"));
    }
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs = (0..budget)
        .map(|_| space.sample(base, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let trials: Vec<Trial> = configs
        .into_par_iter()
        .enumerate()
        .map(|(index, params)| {
            let score = match objective(&params) {
                Ok(s) if s.is_finite() => Ok(s),
                Ok(s) => Err(format!("objective returned {s}")),
                Err(e) => Err(e.to_string()),
            };
            Trial { index, params, score }
        })
        .collect();
    let best = trials
        .iter()
        .filter_map(|t| t.score.as_ref().ok().map(|&s| (t, s)))
        .fold(None::<(&Trial, f64)>, |acc, (t, s)| match acc {
            Some((_, b)) if b >= s => acc,
            _ => Some((t, s)),
        });
    let Some((best, best_score)) = best else {
        let first = trials[0].score.clone().err().unwrap_or_default();
        return Err(Error::Numerical(format!("all {budget} trials failed; first error: {first}")));
    };
    Ok(SearchOutcome {
        best: best.params.clone(),
        best_score,
        best_index: best.index,
        trials,
    })
}

/// Random search for `algorithm` maximizing MAP@`cutoff` on `validation`.
pub fn tune_random_search(
    algorithm: Algorithm,
    space: &SearchSpace,
    base: &HyperParams,
    budget: usize,
    seed: u64,
    data: TrainingData<'_>,
    validation: &GroundTruth,
    cutoff: usize,
) -> Result<SearchOutcome> {
    random_search(space, base, budget, seed, |params| {
        let model = fit(algorithm, params, data)?;
        let provider = ModelProvider::new(&model, data.train);
        Ok(evaluate_individual(&provider, validation, cutoff)?.map)
    })
}

/// Writes one CSV line per trial: index, the algorithm's parameters, score, error.
pub fn write_trial_log(outcome: &SearchOutcome, algorithm: Algorithm, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let names = algorithm.params();
    let mut header = vec!["trial"];
    header.extend_from_slice(names);
    header.extend_from_slice(&["map", "best", "error"]);
    w.write_record(&header).map_err(csv_err)?;
    for t in &outcome.trials {
        let mut rec = vec![t.index.to_string()];
        rec.extend(names.iter().map(|n| t.params.get(n).expect("known name").to_string()));
        match &t.score {
            Ok(s) => rec.extend([s.to_string(), (t.index == outcome.best_index).to_string(), String::new()]),
            Err(e) => rec.extend([String::new(), "false".into(), e.clone()]),
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
