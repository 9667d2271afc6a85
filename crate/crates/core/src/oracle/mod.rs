//! Exact, deterministic computations on small instances, used as ground
//! truth for the simulators.

mod bpre;
mod brute;
mod cell_line;
mod gw;
mod yaglom;

pub use bpre::{
    bpre_sequence, exact_bpre_distribution, overflow_warning, DEFAULT_OVERFLOW_WARNING,
};
pub use brute::{
    brute_force_tree, brute_force_tree_with_budget, TreeCell, TreeOutcome, TreeOutcomeTable,
    DEFAULT_BUDGET,
};
pub use cell_line::{cell_line_sequence, exact_cell_line_distribution, CellLineDistribution};
pub use gw::{b_sum_offspring, gw_extinction_prob, GwExtinction};
pub use yaglom::{successive_tv, yaglom_proxies_b, yaglom_proxy_b};
