//! Baseline recommenders used to fill carousels.
//!
//! Every algorithm is trained through [`fit`] and queried through
//! [`recommend`]; the trained state is one of four shapes ([`Model`]).

mod ease;
mod graph;
mod knn;
pub mod persist;
mod svd;
mod toppop;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Carousel, FeatureMatrix, InteractionMatrix};
use crate::sparse::CsrMatrix;

pub use ease::{fit_easer, DenseWeightModel};
pub use graph::{fit_p3alpha, fit_rp3beta};
pub use knn::{cosine_topk, Orientation, SimilarityModel};
pub use svd::{fit_puresvd, randomized_svd, FactorModel, SvdOptions, TruncatedSvd};
pub use toppop::{fit_toppop, PopularityModel};

/// The implemented algorithm roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    TopPop,
    ItemKnnCf,
    UserKnnCf,
    ItemKnnCbf,
    UserKnnCbf,
    ItemKnnCfCbf,
    UserKnnCfCbf,
    P3Alpha,
    Rp3Beta,
    EaseR,
    PureSvd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::TopPop,
        Algorithm::ItemKnnCf,
        Algorithm::UserKnnCf,
        Algorithm::ItemKnnCbf,
        Algorithm::UserKnnCbf,
        Algorithm::ItemKnnCfCbf,
        Algorithm::UserKnnCfCbf,
        Algorithm::P3Alpha,
        Algorithm::Rp3Beta,
        Algorithm::EaseR,
        Algorithm::PureSvd,
    ];

    /// Stable identifier used in config files, logs and model containers.
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::TopPop => "toppop",
            Algorithm::ItemKnnCf => "itemknn-cf",
            Algorithm::UserKnnCf => "userknn-cf",
            Algorithm::ItemKnnCbf => "itemknn-cbf",
            Algorithm::UserKnnCbf => "userknn-cbf",
            Algorithm::ItemKnnCfCbf => "itemknn-cfcbf",
            Algorithm::UserKnnCfCbf => "userknn-cfcbf",
            Algorithm::P3Alpha => "p3alpha",
            Algorithm::Rp3Beta => "rp3beta",
            Algorithm::EaseR => "easer",
            Algorithm::PureSvd => "puresvd",
        }
    }

    /// Human-readable name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::TopPop => "TopPop",
            Algorithm::ItemKnnCf => "ItemKNN CF",
            Algorithm::UserKnnCf => "UserKNN CF",
            Algorithm::ItemKnnCbf => "ItemKNN CBF",
            Algorithm::UserKnnCbf => "UserKNN CBF",
            Algorithm::ItemKnnCfCbf => "ItemKNN CFCBF",
            Algorithm::UserKnnCfCbf => "UserKNN CFCBF",
            Algorithm::P3Alpha => "P3alpha",
            Algorithm::Rp3Beta => "RP3beta",
            Algorithm::EaseR => "EASE^R",
            Algorithm::PureSvd => "PureSVD",
        }
    }

    /// Hyperparameters the algorithm reads.
    pub fn params(self) -> &'static [&'static str] {
        match self {
            Algorithm::TopPop => &[],
            Algorithm::ItemKnnCf | Algorithm::UserKnnCf => &["k", "shrink"],
            Algorithm::ItemKnnCbf | Algorithm::UserKnnCbf => &["k", "shrink"],
            Algorithm::ItemKnnCfCbf | Algorithm::UserKnnCfCbf => &["k", "shrink", "content_weight"],
            Algorithm::P3Alpha => &["k", "alpha"],
            Algorithm::Rp3Beta => &["k", "alpha", "beta"],
            Algorithm::EaseR => &["lambda"],
            Algorithm::PureSvd => &["factors", "seed"],
        }
    }

    /// Non-personalized models see no benefit from hiding a user's training items.
    pub fn default_exclude_seen(self) -> bool {
        self != Algorithm::TopPop
    }

    pub fn needs_item_features(self) -> bool {
        matches!(self, Algorithm::ItemKnnCbf | Algorithm::ItemKnnCfCbf)
    }

    pub fn needs_user_features(self) -> bool {
        matches!(self, Algorithm::UserKnnCbf | Algorithm::UserKnnCfCbf)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == wanted)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.id().to_owned()
    }
}

/// All tunable quantities. Each algorithm reads only the ones listed by
/// [`Algorithm::params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Neighbors kept per similarity row.
    pub k: usize,
    /// Additive cosine denominator damping.
    pub shrink: f64,
    /// Transition probability exponent of P3alpha / RP3beta.
    pub alpha: f64,
    /// Popularity penalty exponent of RP3beta.
    pub beta: f64,
    /// Ridge strength of EASE^R.
    pub lambda: f64,
    /// Latent factors of PureSVD.
    pub factors: usize,
    /// Scale of the content block in CFCBF hybrids.
    pub content_weight: f64,
    /// Seed of the randomized SVD.
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            k: 100,
            shrink: 10.0,
            alpha: 1.0,
            beta: 0.5,
            lambda: 200.0,
            factors: 50,
            content_weight: 1.0,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub const NAMES: [&'static str; 8] = [
        "k",
        "shrink",
        "alpha",
        "beta",
        "lambda",
        "factors",
        "content_weight",
        "seed",
    ];

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.k < 1 {
            return bad(format!("k must be >= 1, got {}", self.k));
        }
        if !(self.shrink >= 0.0) {
            return bad(format!("shrink must be >= 0, got {}", self.shrink));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if self.factors < 1 {
            return bad(format!("factors must be >= 1, got {}", self.factors));
        }
        if !(self.content_weight >= 0.0) {
            return bad(format!("content_weight must be >= 0, got {}", self.content_weight));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "k" => self.k as f64,
            "shrink" => self.shrink,
            "alpha" => self.alpha,
            "beta" => self.beta,
            "lambda" => self.lambda,
            "factors" => self.factors as f64,
            "content_weight" => self.content_weight,
            "seed" => self.seed as f64,
            _ => return None,
        })
    }

    /// Sets a parameter by name; integer parameters are rounded.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "k" => self.k = value.round().max(0.0) as usize,
            "shrink" => self.shrink = value,
            "alpha" => self.alpha = value,
            "beta" => self.beta = value,
            "lambda" => self.lambda = value,
            "factors" => self.factors = value.round().max(0.0) as usize,
            "content_weight" => self.content_weight = value,
            "seed" => self.seed = value.round().max(0.0) as u64,
            _ => return Err(Error::Config(format!("unknown hyperparameter '{name}'"))),
        }
        Ok(())
    }

    /// `(name, value)` pairs for the given algorithm's parameters.
    pub fn relevant(&self, algorithm: Algorithm) -> Vec<(&'static str, f64)> {
        algorithm
            .params()
            .iter()
            .map(|&n| (n, self.get(n).expect("known name")))
            .collect()
    }
}

/// Inputs available to training.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub train: &'a InteractionMatrix,
    pub item_features: Option<&'a FeatureMatrix>,
    pub user_features: Option<&'a FeatureMatrix>,
}

impl<'a> TrainingData<'a> {
    pub fn new(train: &'a InteractionMatrix) -> Self {
        TrainingData {
            train,
            item_features: None,
            user_features: None,
        }
    }

    pub fn with_item_features(mut self, features: Option<&'a FeatureMatrix>) -> Self {
        self.item_features = features;
        self
    }

    pub fn with_user_features(mut self, features: Option<&'a FeatureMatrix>) -> Self {
        self.user_features = features;
        self
    }
}

/// Trained state, one variant per model shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Popularity(PopularityModel),
    Similarity(SimilarityModel),
    Factors(FactorModel),
    DenseWeights(DenseWeightModel),
}

/// A fitted model together with the algorithm and parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub algorithm: Algorithm,
    pub params: HyperParams,
    pub model: Model,
}

impl TrainedModel {
    pub fn label(&self) -> &'static str {
        self.algorithm.label()
    }

    /// Scores of every item for `user`, written into `out` (length = number of items).
    /// `train` provides the user history that item- and user-based models aggregate.
    pub fn score_user(&self, user: usize, train: &InteractionMatrix, out: &mut [f64]) -> Result<()> {
        if user >= train.num_users() {
            return Err(Error::UnknownUser {
                user,
                num_users: train.num_users(),
            });
        }
        if out.len() != train.num_items() {
            return Err(Error::invalid("score buffer length differs from item count"));
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        match &self.model {
            Model::Popularity(m) => m.score(out),
            Model::Similarity(m) => m.score(user, train, out),
            Model::Factors(m) => m.score(user, out)?,
            Model::DenseWeights(m) => m.score(user, train, out),
        }
        Ok(())
    }
}

fn hybrid_rows(
    collaborative: CsrMatrix,
    content: Option<&FeatureMatrix>,
    weight: f64,
    what: &str,
) -> Result<CsrMatrix> {
    let content = content.ok_or_else(|| Error::invalid(format!("{what} features are required")))?;
    collaborative.hstack(content.csr(), weight)
}

fn content_rows(content: Option<&FeatureMatrix>, expected: usize, what: &str) -> Result<CsrMatrix> {
    let content = content.ok_or_else(|| Error::invalid(format!("{what} features are required")))?;
    if content.num_entities() != expected {
        return Err(Error::invalid(format!(
            "{what} feature matrix has {} rows, expected {expected}",
            content.num_entities()
        )));
    }
    Ok(content.csr().clone())
}

/// Trains `algorithm` with `params` on `data`.
pub fn fit(algorithm: Algorithm, params: &HyperParams, data: TrainingData<'_>) -> Result<TrainedModel> {
    params.validate()?;
    let train = data.train;
    if train.is_empty() {
        return Err(Error::invalid("training matrix is empty"));
    }
    let (users, items) = (train.num_users(), train.num_items());
    let item_based = |rows: CsrMatrix| -> Result<Model> {
        Ok(Model::Similarity(SimilarityModel::new(
            cosine_topk(&rows, params.shrink, params.k)?,
            Orientation::ItemBased,
        )))
    };
    let user_based = |rows: CsrMatrix| -> Result<Model> {
        Ok(Model::Similarity(SimilarityModel::new(
            cosine_topk(&rows, params.shrink, params.k)?,
            Orientation::UserBased,
        )))
    };
    let model = match algorithm {
        Algorithm::TopPop => Model::Popularity(fit_toppop(train)?),
        Algorithm::ItemKnnCf => item_based(train.csr().transpose())?,
        Algorithm::UserKnnCf => user_based(train.csr().clone())?,
        Algorithm::ItemKnnCbf => item_based(content_rows(data.item_features, items, "item")?)?,
        Algorithm::UserKnnCbf => user_based(content_rows(data.user_features, users, "user")?)?,
        Algorithm::ItemKnnCfCbf => {
            content_rows(data.item_features, items, "item")?;
            item_based(hybrid_rows(
                train.csr().transpose(),
                data.item_features,
                params.content_weight,
                "item",
            )?)?
        }
        Algorithm::UserKnnCfCbf => {
            content_rows(data.user_features, users, "user")?;
            user_based(hybrid_rows(
                train.csr().clone(),
                data.user_features,
                params.content_weight,
                "user",
            )?)?
        }
        Algorithm::P3Alpha => Model::Similarity(fit_p3alpha(train, params.alpha, params.k)?),
        Algorithm::Rp3Beta => {
            Model::Similarity(fit_rp3beta(train, params.alpha, params.beta, params.k)?)
        }
        Algorithm::EaseR => Model::DenseWeights(fit_easer(train, params.lambda)?),
        Algorithm::PureSvd => Model::Factors(fit_puresvd(train, params.factors, params.seed)?),
    };
    Ok(TrainedModel {
        algorithm,
        params: params.clone(),
        model,
    })
}

/// A top-n list for one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recommendation {
    pub items: Vec<usize>,
    /// Fewer than `n` items were available after exclusion.
    pub short: bool,
}

impl Recommendation {
    /// The list as a carousel of exactly `len` cells, unfilled slots as placeholders.
    pub fn into_carousel(self, provider: impl Into<String>, len: usize) -> Result<Carousel> {
        Carousel::padded(provider, self.items, len)
    }
}

/// Orders `scores` descending (ties by ascending item index) and returns the
/// first `n` finite entries.
pub fn top_n(scores: &[f64], n: usize) -> Vec<usize> {
    let mut candidates: Vec<usize> = (0..scores.len())
        .filter(|&i| scores[i] != f64::NEG_INFINITY && !scores[i].is_nan())
        .collect();
    let order = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if n == 0 {
        return Vec::new();
    }
    if candidates.len() > n {
        candidates.select_nth_unstable_by(n - 1, order);
        candidates.truncate(n);
    }
    candidates.sort_unstable_by(order);
    candidates
}

/// Top-`n` items for `user`. With `exclude_seen`, the user's training items are
/// never returned; if fewer than `n` candidates remain the list is shorter and
/// flagged.
pub fn recommend(
    model: &TrainedModel,
    user: usize,
    n: usize,
    exclude_seen: bool,
    train: &InteractionMatrix,
) -> Result<Recommendation> {
    if n == 0 {
        return Err(Error::invalid("recommendation length must be >= 1"));
    }
    let mut scores = vec![0.0; train.num_items()];
    model.score_user(user, train, &mut scores)?;
    if exclude_seen {
        for &item in train.user_row(user).0 {
            scores[item] = f64::NEG_INFINITY;
        }
    }
    let items = top_n(&scores, n);
    Ok(Recommendation {
        short: items.len() < n,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> InteractionMatrix {
        // item 0 is seen by all three users, item 2 by two, item 1 by one
        InteractionMatrix::new(
            3,
            4,
            [(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 1, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn algorithm_ids_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.id().parse::<Algorithm>().unwrap(), a);
        }
        assert!("slim".parse::<Algorithm>().is_err());
    }

    #[test]
    fn hyperparams_validation() {
        assert!(HyperParams::default().validate().is_ok());
        let mut p = HyperParams::default();
        p.set("lambda", 0.0).unwrap();
        assert!(p.validate().is_err());
        let mut p = HyperParams::default();
        p.set("k", 0.2).unwrap();
        assert!(p.validate().is_err());
        assert!(HyperParams::default().set("gamma", 1.0).is_err());
    }

    #[test]
    fn top_n_orders_and_breaks_ties() {
        assert_eq!(top_n(&[1.0, 3.0, 3.0, 2.0], 3), vec![1, 2, 3]);
        assert_eq!(top_n(&[0.0, 0.0, 0.0], 2), vec![0, 1]);
        assert_eq!(top_n(&[f64::NEG_INFINITY, 1.0], 5), vec![1]);
    }

    #[test]
    fn toppop_recommends_global_ranking() {
        let train = tiny();
        let m = fit(Algorithm::TopPop, &HyperParams::default(), TrainingData::new(&train)).unwrap();
        let r = recommend(&m, 1, 2, false, &train).unwrap();
        assert_eq!(r.items, vec![0, 2]);
        assert!(!r.short);
    }

    #[test]
    fn exclusion_can_shorten_the_list() {
        let train = InteractionMatrix::new(1, 2, [(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let m = fit(Algorithm::TopPop, &HyperParams::default(), TrainingData::new(&train)).unwrap();
        let r = recommend(&m, 0, 2, true, &train).unwrap();
        assert!(r.items.is_empty() && r.short);
        let carousel = r.into_carousel("toppop", 2).unwrap();
        assert_eq!(carousel.items().count(), 0);
        assert_eq!(carousel.len(), 2);
    }

    #[test]
    fn unknown_user_is_an_error() {
        let train = tiny();
        let m = fit(Algorithm::TopPop, &HyperParams::default(), TrainingData::new(&train)).unwrap();
        assert!(matches!(
            recommend(&m, 7, 2, false, &train),
            Err(Error::UnknownUser { user: 7, .. })
        ));
    }

    #[test]
    fn zero_similarity_falls_back_to_index_order() {
        let train = tiny();
        let model = TrainedModel {
            algorithm: Algorithm::ItemKnnCf,
            params: HyperParams::default(),
            model: Model::Similarity(SimilarityModel::new(CsrMatrix::zeros(4, 4), Orientation::ItemBased)),
        };
        let r = recommend(&model, 0, 3, false, &train).unwrap();
        assert_eq!(r.items, vec![0, 1, 2]);
    }

    #[test]
    fn content_models_require_features() {
        let train = tiny();
        let err = fit(Algorithm::ItemKnnCbf, &HyperParams::default(), TrainingData::new(&train));
        assert!(err.is_err());
        let features = FeatureMatrix::new(4, 2, [(0, 0, 1.0), (1, 0, 1.0), (2, 1, 1.0)]).unwrap();
        let data = TrainingData::new(&train).with_item_features(Some(&features));
        let m = fit(Algorithm::ItemKnnCfCbf, &HyperParams::default(), data).unwrap();
        assert!(matches!(m.model, Model::Similarity(_)));
    }
}
