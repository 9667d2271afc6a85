//! Replicated Monte Carlo runs of the cell tree and their estimators.

mod accum;
mod estimate;
mod run;

pub use accum::{CellSet, GenerationAccumulator, Moments, RatioSums, Scales};
pub use estimate::{
    render_mc_csv, survival_curves, yaglom_compare, Estimate, SurvivalPoint, YaglomRow,
    YaglomTable, MIN_CI_REPLICATES,
};
pub use run::{
    count_replicates, map_replicates, run_mc, Condition, McConfig, McSummary, BLOCK_SIZE,
    DEFAULT_K_TOP,
};
