use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{FixedSpec, RunConfig};
use crate::data::{
    implicitize_with, load_grid, load_split, parse_entity_features, parse_interactions,
    parse_item_features, save_grid, save_split, split_holdout, user_subsample, GridHeader, IdMap,
    ImplicitOptions,
};
use crate::error::{Error, Result};
use crate::experiment::{
    evaluate_individual, tune_random_search, write_trial_log, CarouselScenario, FixedSummary,
    GridProvider, ModelProvider, Report, RowProvider,
};
use crate::model::{DatasetSplit, FeatureMatrix, GroundTruth, InteractionMatrix, RelevanceMode};
use crate::recommenders::persist::save_model;
use crate::recommenders::{fit, Algorithm, HyperParams, TrainedModel, TrainingData};

/// File names inside the output directory.
pub mod layout {
    pub const SPLIT: &str = "split.tsv";
    pub const USERS: &str = "users.txt";
    pub const ITEMS: &str = "items.txt";
    pub const TUNED: &str = "tuned.toml";
    pub const TUNING_DIR: &str = "tuning";
    pub const MODELS_DIR: &str = "models";
    pub const GRIDS_DIR: &str = "grids";
    pub const REPORT_CSV: &str = "report.csv";
    pub const REPORT_MD: &str = "report.md";
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Dataset statistics printed by `prepare`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub density: f64,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub skipped_lines: usize,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "users={} items={} interactions={} density={:.6} train={} validation={} test={}",
            self.users, self.items, self.interactions, self.density, self.train, self.validation, self.test
        )?;
        if self.skipped_lines > 0 {
            write!(f, " skipped_lines={}", self.skipped_lines)?;
        }
        Ok(())
    }
}

/// Parse, implicitize, optionally subsample users, split, and persist the split.
pub fn cmd_prepare(cfg: &RunConfig) -> Result<DatasetStats> {
    cfg.validate()?;
    let d = &cfg.data;
    let raw = parse_interactions(d.resolve(&d.ratings), d.format, d.strict)?;
    let implicit = implicitize_with(
        &raw,
        ImplicitOptions {
            threshold: d.implicit_threshold,
            keep_ratings: d.relevance == RelevanceMode::Graded,
            compact: true,
        },
    )?;
    let matrix = if d.user_fraction < 1.0 {
        user_subsample(&implicit.matrix, d.user_fraction, cfg.split.seed)?
    } else {
        implicit.matrix
    };
    let split = split_holdout(&matrix, &cfg.split)?;
    create_dir(&cfg.output.dir)?;
    save_split(&split, out_path(cfg, layout::SPLIT))?;
    implicit.users.save(out_path(cfg, layout::USERS))?;
    implicit.items.save(out_path(cfg, layout::ITEMS))?;
    let stats = DatasetStats {
        users: matrix.num_users(),
        items: matrix.num_items(),
        interactions: matrix.len(),
        density: matrix.density(),
        train: split.train.len(),
        validation: split.validation.len(),
        test: split.test.len(),
        skipped_lines: raw.malformed,
    };
    log::info!("prepared {stats}");
    Ok(stats)
}

/// A prepared split with its id-maps and content features.
pub struct Workspace {
    pub split: DatasetSplit,
    pub users: IdMap,
    pub items: IdMap,
    /// Feature loading problems are kept and reported by the algorithms that need them.
    pub item_features: std::result::Result<FeatureMatrix, String>,
    pub user_features: std::result::Result<FeatureMatrix, String>,
}

impl Workspace {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let split = load_split(out_path(cfg, layout::SPLIT))?;
        let users = IdMap::load(out_path(cfg, layout::USERS))?;
        let items = IdMap::load(out_path(cfg, layout::ITEMS))?;
        if users.len() != split.train.num_users() || items.len() != split.train.num_items() {
            return Err(Error::format(
                out_path(cfg, layout::SPLIT),
                "split and id-map files disagree on dimensions",
            ));
        }
        let d = &cfg.data;
        let item_features = if d.movies.is_none() && d.tags.is_none() {
            Err("no item feature files configured".to_string())
        } else {
            let movies = d.movies.as_ref().map(|p| d.resolve(p));
            let tags = d.tags.as_ref().map(|p| d.resolve(p));
            parse_item_features(movies.as_deref(), tags.as_deref(), &items)
                .map(|f| f.matrix)
                .map_err(|e| e.to_string())
        };
        let user_features = match &d.user_features {
            None => Err("no user feature file configured".to_string()),
            Some(p) => parse_entity_features(&d.resolve(p), &users)
                .map(|f| f.matrix)
                .map_err(|e| e.to_string()),
        };
        for (what, f) in [("item", &item_features), ("user", &user_features)] {
            if let Err(e) = f {
                log::debug!("{what} features unavailable: {e}");
            }
        }
        Ok(Workspace {
            split,
            users,
            items,
            item_features,
            user_features,
        })
    }

    pub fn training_data<'a>(&'a self, train: &'a InteractionMatrix, algorithm: Algorithm) -> Result<TrainingData<'a>> {
        let pick = |f: &'a std::result::Result<FeatureMatrix, String>, needed: bool| match (f, needed) {
            (Ok(m), _) => Ok(Some(m)),
            (Err(e), true) => Err(Error::invalid(format!("{algorithm}: {e}"))),
            (Err(_), false) => Ok(None),
        };
        Ok(TrainingData::new(train)
            .with_item_features(pick(&self.item_features, algorithm.needs_item_features())?)
            .with_user_features(pick(&self.user_features, algorithm.needs_user_features())?))
    }

    /// Train and validation parts together, used for the final models.
    pub fn train_and_validation(&self) -> Result<InteractionMatrix> {
        let t = &self.split.train;
        InteractionMatrix::new(
            t.num_users(),
            t.num_items(),
            t.entries().chain(self.split.validation.entries()),
        )
    }
}

/// Per-algorithm result of `tune`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneSummary {
    pub tuned: BTreeMap<Algorithm, (HyperParams, f64)>,
    pub failures: Vec<(Algorithm, String)>,
}

type TunedFile = BTreeMap<String, BTreeMap<String, f64>>;

fn read_tuned(cfg: &RunConfig) -> Result<BTreeMap<Algorithm, BTreeMap<String, f64>>> {
    let path = out_path(cfg, layout::TUNED);
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: TunedFile = toml::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    file.into_iter()
        .map(|(id, params)| Ok((id.parse().map_err(|e: Error| Error::format(&path, e.to_string()))?, params)))
        .collect()
}

/// Random search per configured algorithm on the validation part. Writes a
/// trial log per algorithm and the winning values to `tuned.toml`.
pub fn cmd_tune(cfg: &RunConfig) -> Result<TuneSummary> {
    cfg.validate()?;
    let ws = Workspace::load(cfg)?;
    let validation = GroundTruth::from_matrix(&ws.split.validation, cfg.data.relevance);
    let tuning_dir = out_path(cfg, layout::TUNING_DIR);
    create_dir(&tuning_dir)?;
    let mut summary = TuneSummary {
        tuned: BTreeMap::new(),
        failures: Vec::new(),
    };
    for a in &cfg.algorithms {
        let space = a.search_space();
        let budget = if space.ranges.is_empty() { 1 } else { cfg.tuning.budget };
        let result = ws.training_data(&ws.split.train, a.name).and_then(|data| {
            tune_random_search(
                a.name,
                &space,
                &a.base_params(cfg.tuning.seed)?,
                budget,
                cfg.tuning.seed,
                data,
                &validation,
                cfg.evaluation.cutoff,
            )
        });
        match result {
            Ok(outcome) => {
                write_trial_log(&outcome, a.name, tuning_dir.join(format!("{}.csv", a.name.id())))?;
                log::info!(
                    "{}: best validation MAP@{} = {:.4} after {} trials",
                    a.name,
                    cfg.evaluation.cutoff,
                    outcome.best_score,
                    outcome.trials.len()
                );
                summary.tuned.insert(a.name, (outcome.best, outcome.best_score));
            }
            Err(e) => {
                log::warn!("{}: tuning failed: {e}", a.name);
                summary.failures.push((a.name, e.to_string()));
            }
        }
    }
    let file: TunedFile = summary
        .tuned
        .iter()
        .map(|(a, (p, _))| (a.id().to_owned(), p.relevant(*a).into_iter().map(|(n, v)| (n.to_owned(), v)).collect()))
        .collect();
    let path = out_path(cfg, layout::TUNED);
    fs::write(&path, toml::to_string(&file).expect("tuned values serialize")).map_err(|e| Error::io(&path, e))?;
    if summary.tuned.is_empty() {
        return Err(Error::Numerical("tuning failed for every algorithm".into()));
    }
    Ok(summary)
}

fn final_params(
    cfg: &RunConfig,
    tuned: &BTreeMap<Algorithm, BTreeMap<String, f64>>,
    algorithm: Algorithm,
) -> Result<HyperParams> {
    let configured = cfg.algorithms.iter().find(|a| a.name == algorithm);
    let mut params = match configured {
        Some(a) => a.base_params(cfg.tuning.seed)?,
        None => HyperParams {
            seed: cfg.tuning.seed,
            ..HyperParams::default()
        },
    };
    for (name, &v) in tuned.get(&algorithm).into_iter().flatten() {
        params.set(name, v)?;
    }
    Ok(params)
}

fn exclude_seen_for(cfg: &RunConfig, algorithm: Algorithm) -> bool {
    cfg.algorithms
        .iter()
        .find(|a| a.name == algorithm)
        .map(|a| a.exclude_seen())
        .unwrap_or(algorithm.default_exclude_seen())
}

enum FixedProvider<'a> {
    Model(TrainedModel, &'a InteractionMatrix, bool),
    Grid(GridProvider),
}

impl FixedProvider<'_> {
    fn as_provider(&self) -> Box<dyn RowProvider + '_> {
        match self {
            FixedProvider::Model(m, history, exclude_seen) => Box::new(ModelProvider {
                model: m,
                history,
                exclude_seen: *exclude_seen,
            }),
            FixedProvider::Grid(g) => Box::new(g.clone()),
        }
    }
}

/// Trains the final models on train + validation and evaluates them on the test
/// part, individually and below the fixed carousels. Writes `report.csv` and
/// `report.md`; a failing algorithm leaves a gap row.
pub fn cmd_run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let ws = Workspace::load(cfg)?;
    let history = ws.train_and_validation()?;
    let test = GroundTruth::from_matrix(&ws.split.test, cfg.data.relevance);
    let tuned = read_tuned(cfg)?;
    let cutoff = cfg.evaluation.cutoff;
    let weights = cfg.weights()?;

    let mut fixed = Vec::new();
    for spec in cfg.fixed_specs()? {
        fixed.push(match spec {
            FixedSpec::Algorithm(a) => {
                let model = fit(a, &final_params(cfg, &tuned, a)?, ws.training_data(&history, a)?)?;
                FixedProvider::Model(model, &history, exclude_seen_for(cfg, a))
            }
            FixedSpec::Grid { path, row } => {
                let (_, pages) = load_grid(&path)?;
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("grid").to_owned();
                FixedProvider::Grid(GridProvider::from_pages(name, &pages, row)?)
            }
        });
    }
    let fixed_boxes: Vec<Box<dyn RowProvider + '_>> = fixed.iter().map(|f| f.as_provider()).collect();
    let fixed_refs: Vec<&dyn RowProvider> = fixed_boxes.iter().map(|b| b.as_ref()).collect();
    let scenario = CarouselScenario::new(fixed_refs.clone(), cutoff, weights)?;
    let prepared = scenario.prepare(&test)?;
    let fixed_label = fixed_refs.iter().map(|p| p.name()).collect::<Vec<_>>().join(" + ");
    let fixed_summary = FixedSummary {
        label: fixed_label,
        individual: evaluate_individual(fixed_refs[0], &test, cutoff)?,
        baseline: prepared.baseline(),
    };
    log::info!("baseline page MAP@{cutoff} = {:.4}", fixed_summary.baseline.map);

    if cfg.output.save_models {
        create_dir(&out_path(cfg, layout::MODELS_DIR))?;
    }
    if cfg.output.save_grids {
        create_dir(&out_path(cfg, layout::GRIDS_DIR))?;
    }
    let header = GridHeader {
        weights,
        cutoffs: vec![cutoff; fixed_refs.len() + 1],
    };
    let mut candidates = Vec::new();
    for a in &cfg.algorithms {
        let result = (|| {
            let model = fit(a.name, &final_params(cfg, &tuned, a.name)?, ws.training_data(&history, a.name)?)?;
            let provider = ModelProvider {
                model: &model,
                history: &history,
                exclude_seen: a.exclude_seen(),
            };
            let individual = evaluate_individual(&provider, &test, cutoff)?;
            let carousel = prepared.evaluate(&provider)?;
            if cfg.output.save_models {
                save_model(&model, out_path(cfg, layout::MODELS_DIR).join(format!("{}.bin", a.name.id())))?;
            }
            if cfg.output.save_grids {
                let path = out_path(cfg, layout::GRIDS_DIR).join(format!("{}.tsv", a.name.id()));
                save_grid(&prepared.pages(&provider)?, &header, path)?;
            }
            log::info!(
                "{}: individual MAP {:.4}, carousel MAP {:.4} ({:+.1}%)",
                a.name.label(),
                individual.map,
                carousel.page.map,
                carousel.improvement
            );
            Ok((individual, carousel))
        })();
        candidates.push((a.name.label().to_owned(), result));
    }
    let report = Report::build(fixed_summary, candidates)?;
    if let Some(tau) = report.kendall_tau() {
        log::info!("Kendall tau between individual and carousel rankings: {tau:.3}");
    }
    report.write(out_path(cfg, layout::REPORT_CSV), out_path(cfg, layout::REPORT_MD))?;
    Ok(report)
}

/// Re-renders `report.md` from `report.csv` and returns the Markdown.
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let report = Report::read_csv(out_path(cfg, layout::REPORT_CSV))?;
    let md = report.to_markdown();
    let path = out_path(cfg, layout::REPORT_MD);
    fs::write(&path, &md).map_err(|e| Error::io(&path, e))?;
    Ok(md)
}

/// Subcommands of the front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Prepare,
    Tune,
    Run,
    Report,
}

/// Validates the configuration and describes what `command` would do.
pub fn plan(cfg: &RunConfig, command: Command) -> Result<String> {
    cfg.validate()?;
    let mut lines = Vec::new();
    let d = &cfg.data;
    let out = cfg.output.dir.display();
    match command {
        Command::Prepare => {
            lines.push(format!("read {} ({:?})", d.resolve(&d.ratings).display(), d.format));
            lines.push(format!("keep ratings >= {} as interactions", d.implicit_threshold));
            if d.user_fraction < 1.0 {
                lines.push(format!("subsample {} of users", d.user_fraction));
            }
            let s = &cfg.split;
            lines.push(format!(
                "split {}/{}/{} with seed {}, write {out}/{}",
                s.train,
                s.validation,
                s.test,
                s.seed,
                layout::SPLIT
            ));
        }
        Command::Tune => {
            for a in &cfg.algorithms {
                let space = a.search_space();
                let budget = if space.ranges.is_empty() { 1 } else { cfg.tuning.budget };
                let names: Vec<&str> = space.ranges.keys().map(String::as_str).collect();
                lines.push(format!(
                    "tune {} over [{}] with {budget} trials (seed {})",
                    a.name,
                    names.join(", "),
                    cfg.tuning.seed
                ));
            }
            lines.push(format!("write {out}/{} and {out}/{}/", layout::TUNED, layout::TUNING_DIR));
        }
        Command::Run => {
            lines.push(format!(
                "fixed carousels: {} (cutoff {}, alpha {}, beta {})",
                cfg.evaluation.fixed.join(", "),
                cfg.evaluation.cutoff,
                cfg.evaluation.alpha,
                cfg.evaluation.beta
            ));
            for a in &cfg.algorithms {
                lines.push(format!("evaluate {} individually and as the next carousel", a.name));
            }
            lines.push(format!("write {out}/{} and {out}/{}", layout::REPORT_CSV, layout::REPORT_MD));
        }
        Command::Report => {
            lines.push(format!("render {out}/{} as {out}/{}", layout::REPORT_CSV, layout::REPORT_MD));
        }
    }
    Ok(lines.join("\n"))
}
