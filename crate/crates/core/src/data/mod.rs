//! Reading ratings and content files, implicitization, splitting, and the
//! on-disk formats for splits and recommendation grids.

mod features;
mod grid;
mod interactions;
mod split;
pub mod synthetic;

pub use features::{parse_entity_features, parse_item_features, Features};
pub use grid::{load_grid, save_grid, GridHeader};
pub use interactions::{
    parse_interactions, write_interactions, IdMap, InteractionFormat, RawInteractions, RawRecord,
};
pub use split::{
    implicitize, implicitize_with, load_split, save_split, seeded_permutation, split_holdout,
    user_subsample, Implicit, ImplicitOptions, SplitConfig,
};
