//! Forward simulation of the cell tree, the random cell line and the
//! reduced branching processes.

mod cell_line;
mod reduced;
mod sampling;
mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::CellType;

pub use cell_line::{simulate_cell_line, CellLineState, CellLineTrajectory};
pub use reduced::{simulate_bpre_a, simulate_bpre_b, simulate_gw_b, simulate_reduced, ZPath};
pub use sampling::{multinomial, AtomSampler, DEFAULT_EXPLICIT_SUM_LIMIT};
pub use tree::{
    simulate_tree, step_generation, BTracking, ContaminatedCell, GenerationState,
    GenerationSummary, HaltReason, Trajectory, TreeSimulator,
};

/// Random number generator used by every simulator.
pub type SimRng = ChaCha8Rng;

/// Generator for replicate `replicate` of a run with `master_seed`: the
/// ChaCha8 stream with that index. Streams never overlap, so results do
/// not depend on how replicates are spread over threads.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// Resource limits of a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimCaps {
    pub max_generations: u32,
    /// Largest number of contaminated cells held individually.
    pub max_roster: usize,
    /// Parasite counts above this value stop the trajectory.
    pub max_parasites_per_cell: u64,
    /// See [`AtomSampler::sum`].
    pub explicit_sum_limit: u64,
}

impl Default for SimCaps {
    fn default() -> Self {
        Self {
            max_generations: 40,
            max_roster: 10_000_000,
            max_parasites_per_cell: i64::MAX as u64,
            explicit_sum_limit: DEFAULT_EXPLICIT_SUM_LIMIT,
        }
    }
}

/// Initial condition: one cell of type `ty` holding `z` parasites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Start {
    pub ty: CellType,
    pub z: u64,
}

impl Default for Start {
    /// One A-cell with one parasite.
    fn default() -> Self {
        Self {
            ty: CellType::A,
            z: 1,
        }
    }
}
