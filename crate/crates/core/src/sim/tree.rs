use std::fmt;

use rand::Rng;
use serde::Serialize;

use super::sampling::{multinomial, AtomSampler};
use super::{replicate_rng, SimCaps, Start};
use crate::error::{Error, Result};
use crate::model::{CellType, DaughterTypePair as Pair, ValidatedModel};

/// How B-cells are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BTracking {
    /// Every contaminated B-cell is held in the roster and clean B-cells are
    /// counted: the full tree.
    Cells,
    /// Only the total number of B-parasites is followed. It evolves as a
    /// Galton-Watson process with offspring law `X0(B) + X1(B)` plus the
    /// parasites arriving from A-mothers, so its law is exact, but B-cell
    /// counts are unavailable.
    ParasiteTotal,
    /// B-cells and their parasites are dropped.
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContaminatedCell {
    pub ty: CellType,
    pub z: u64,
}

/// Why a trajectory stopped before its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    /// More contaminated cells than `max_roster`.
    RosterCap,
    /// A cell (or the B-parasite total) exceeded `max_parasites_per_cell`.
    ParasiteCap,
    /// The clean-cell counters overflowed.
    CleanOverflow,
}

impl fmt::Display for HaltReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HaltReason::RosterCap => "roster cap exceeded",
            HaltReason::ParasiteCap => "parasite count saturated",
            HaltReason::CleanOverflow => "clean-cell counter overflow",
        })
    }
}

/// Exact population at one generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationState {
    pub n: u32,
    /// Contaminated cells, in a deterministic order. B-cells appear here
    /// only with [`BTracking::Cells`].
    pub contaminated: Vec<ContaminatedCell>,
    pub clean_a: u64,
    /// Clean B-cells; `None` unless B-cells are tracked.
    pub clean_b: Option<u128>,
    /// B-parasites with [`BTracking::ParasiteTotal`], otherwise 0.
    pub b_parasites: u128,
    pub tracking: BTracking,
}

impl GenerationState {
    pub fn initial(start: Start, tracking: BTracking) -> Self {
        let mut s = Self {
            n: 0,
            contaminated: Vec::new(),
            clean_a: 0,
            clean_b: (tracking == BTracking::Cells).then_some(0),
            b_parasites: 0,
            tracking,
        };
        match (start.ty, start.z, tracking) {
            (CellType::A, 0, _) => s.clean_a = 1,
            (CellType::A, z, _) => s.contaminated.push(ContaminatedCell { ty: CellType::A, z }),
            (CellType::B, 0, BTracking::Cells) => s.clean_b = Some(1),
            (CellType::B, z, BTracking::Cells) => {
                s.contaminated.push(ContaminatedCell { ty: CellType::B, z })
            }
            (CellType::B, z, BTracking::ParasiteTotal) => s.b_parasites = z as u128,
            (CellType::B, _, BTracking::Ignore) => {}
        }
        s
    }

    fn cleared(&mut self, n: u32) {
        self.n = n;
        self.contaminated.clear();
        self.clean_a = 0;
        self.clean_b = (self.tracking == BTracking::Cells).then_some(0);
        self.b_parasites = 0;
    }

    /// `#G*_n(A)`.
    pub fn g_star_a(&self) -> u64 {
        self.contaminated
            .iter()
            .filter(|c| c.ty == CellType::A)
            .count() as u64
    }

    /// `#G*_n(B)`, if B-cells are tracked.
    pub fn g_star_b(&self) -> Option<u64> {
        (self.tracking == BTracking::Cells).then(|| {
            self.contaminated
                .iter()
                .filter(|c| c.ty == CellType::B)
                .count() as u64
        })
    }

    /// `Z_n(A)`, the number of parasites in A-cells.
    pub fn z_a(&self) -> u128 {
        self.contaminated
            .iter()
            .filter(|c| c.ty == CellType::A)
            .map(|c| c.z as u128)
            .sum()
    }

    /// `Z_n(B)`, if B-parasites are followed.
    pub fn z_b(&self) -> Option<u128> {
        match self.tracking {
            BTracking::Cells => Some(
                self.contaminated
                    .iter()
                    .filter(|c| c.ty == CellType::B)
                    .map(|c| c.z as u128)
                    .sum(),
            ),
            BTracking::ParasiteTotal => Some(self.b_parasites),
            BTracking::Ignore => None,
        }
    }

    /// `#G_n(A)`, contaminated or not.
    pub fn a_cells(&self) -> u64 {
        self.g_star_a() + self.clean_a
    }

    /// No parasites left anywhere that is followed.
    pub fn parasite_free(&self) -> bool {
        self.contaminated.is_empty() && self.b_parasites == 0
    }

    /// Per-generation totals, with counts of contaminated cells holding
    /// `k = 1..=k_top` parasites.
    pub fn summary(&self, k_top: usize) -> GenerationSummary {
        let tracked_b = self.tracking == BTracking::Cells;
        let mut s = GenerationSummary {
            n: self.n,
            g_star_a: 0,
            g_star_b: tracked_b.then_some(0),
            clean_a: self.clean_a,
            clean_b: self.clean_b,
            z_a: 0,
            z_b: match self.tracking {
                BTracking::Cells => Some(0),
                BTracking::ParasiteTotal => Some(self.b_parasites),
                BTracking::Ignore => None,
            },
            count_a_by_k: vec![0; k_top],
            count_b_by_k: if tracked_b {
                vec![0; k_top]
            } else {
                Vec::new()
            },
        };
        for c in &self.contaminated {
            let (g, z, counts) = match c.ty {
                CellType::A => (&mut s.g_star_a, &mut s.z_a, &mut s.count_a_by_k),
                CellType::B => (
                    s.g_star_b
                        .as_mut()
                        .expect("B-cells only in the roster when tracked"),
                    s.z_b
                        .as_mut()
                        .expect("B-cells only in the roster when tracked"),
                    &mut s.count_b_by_k,
                ),
            };
            *g += 1;
            *z += c.z as u128;
            if (c.z as usize) <= k_top {
                counts[c.z as usize - 1] += 1;
            }
        }
        s
    }
}

/// Totals of one generation of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationSummary {
    pub n: u32,
    pub g_star_a: u64,
    pub g_star_b: Option<u64>,
    pub clean_a: u64,
    pub clean_b: Option<u128>,
    pub z_a: u128,
    pub z_b: Option<u128>,
    /// Entry `k - 1` is the number of contaminated A-cells with `k`
    /// parasites.
    pub count_a_by_k: Vec<u64>,
    /// Same for B-cells; empty unless B-cells are tracked.
    pub count_b_by_k: Vec<u64>,
}

impl GenerationSummary {
    pub fn a_cells(&self) -> u64 {
        self.g_star_a + self.clean_a
    }

    /// `#G*_n`, if B-cells are tracked.
    pub fn g_star(&self) -> Option<u64> {
        self.g_star_b.map(|b| b + self.g_star_a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub summaries: Vec<GenerationSummary>,
    /// Generation at which the run stopped early, and why.
    pub halted: Option<(u32, HaltReason)>,
}

/// Simulator of the full cell tree, reusable across replicates.
#[derive(Debug, Clone)]
pub struct TreeSimulator {
    pair_cdf: [f64; 3],
    pair_probs: [f64; 3],
    laws_a: [AtomSampler; 3],
    law_b: AtomSampler,
    b_sum: AtomSampler,
    pub caps: SimCaps,
    pub tracking: BTracking,
    pub k_top: usize,
}

impl TreeSimulator {
    pub fn new(model: &ValidatedModel, caps: SimCaps, tracking: BTracking, k_top: usize) -> Self {
        let p = model.probs();
        Self {
            pair_cdf: [p[0], p[0] + p[1], 1.0],
            pair_probs: p,
            laws_a: Pair::ALL.map(|s| AtomSampler::joint(model.law_a(s))),
            law_b: AtomSampler::joint(model.law_b()),
            b_sum: AtomSampler::dense(&model.law_b().sum_pmf()),
            caps,
            tracking,
            k_top,
        }
    }

    #[inline]
    fn draw_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> Pair {
        let u: f64 = rng.random();
        if u < self.pair_cdf[0] {
            Pair::AA
        } else if u < self.pair_cdf[1] {
            Pair::AB
        } else {
            Pair::BB
        }
    }

    fn check_z(&self, s: u128) -> std::result::Result<u64, HaltReason> {
        if s > self.caps.max_parasites_per_cell as u128 {
            Err(HaltReason::ParasiteCap)
        } else {
            Ok(s as u64)
        }
    }

    /// Places a daughter of type `ty` with `z` parasites into `next`.
    #[inline]
    fn place(&self, next: &mut GenerationState, ty: CellType, z: u64) {
        match (ty, z, self.tracking) {
            (CellType::A, 0, _) => next.clean_a += 1,
            (CellType::A, z, _) => next.contaminated.push(ContaminatedCell { ty, z }),
            (CellType::B, 0, BTracking::Cells) => {
                *next.clean_b.as_mut().expect("tracked") += 1;
            }
            (CellType::B, z, BTracking::Cells) => {
                next.contaminated.push(ContaminatedCell { ty, z })
            }
            (CellType::B, z, BTracking::ParasiteTotal) => next.b_parasites += z as u128,
            (CellType::B, _, BTracking::Ignore) => {}
        }
    }

    /// Advances `cur` by one generation into `next` (whose previous content
    /// is discarded).
    pub fn step<R: Rng + ?Sized>(
        &self,
        cur: &GenerationState,
        next: &mut GenerationState,
        rng: &mut R,
    ) -> std::result::Result<(), HaltReason> {
        next.tracking = self.tracking;
        next.cleared(cur.n + 1);
        let limit = self.caps.explicit_sum_limit;
        for cell in &cur.contaminated {
            let (pair, law) = match cell.ty {
                CellType::A => {
                    let s = self.draw_pair(rng);
                    (s, &self.laws_a[s.index()])
                }
                CellType::B => (Pair::BB, &self.law_b),
            };
            let (s0, s1) = law.sum(cell.z, rng, limit);
            let [t0, t1] = pair.types();
            let z0 = self.check_z(s0)?;
            let z1 = self.check_z(s1)?;
            self.place(next, t0, z0);
            self.place(next, t1, z1);
            if next.contaminated.len() > self.caps.max_roster {
                return Err(HaltReason::RosterCap);
            }
        }
        if self.tracking == BTracking::ParasiteTotal && cur.b_parasites > 0 {
            let z = u64::try_from(cur.b_parasites).map_err(|_| HaltReason::ParasiteCap)?;
            next.b_parasites += self.b_sum.sum(z, rng, limit).0;
            if next.b_parasites > self.caps.max_parasites_per_cell as u128 {
                return Err(HaltReason::ParasiteCap);
            }
        }
        if cur.clean_a > 0 {
            let split = multinomial(cur.clean_a, &self.pair_probs, rng);
            let add_a = 2 * split[0] as u128 + split[1] as u128;
            next.clean_a = u64::try_from(next.clean_a as u128 + add_a)
                .map_err(|_| HaltReason::CleanOverflow)?;
            if let Some(cb) = next.clean_b.as_mut() {
                *cb = cb
                    .checked_add(split[1] as u128 + 2 * split[2] as u128)
                    .ok_or(HaltReason::CleanOverflow)?;
            }
        }
        if let (Some(old), Some(cb)) = (cur.clean_b, next.clean_b.as_mut()) {
            let doubled = old.checked_mul(2).ok_or(HaltReason::CleanOverflow)?;
            *cb = cb.checked_add(doubled).ok_or(HaltReason::CleanOverflow)?;
        }
        Ok(())
    }

    /// Runs `n_gens` generations, calling `observe` on generation 0 and on
    /// every new generation. Returning `false` from `observe` stops the run.
    /// Returns the halt reason if a cap stopped the run.
    pub fn run_with<R: Rng + ?Sized>(
        &self,
        start: Start,
        n_gens: u32,
        rng: &mut R,
        mut observe: impl FnMut(&GenerationState) -> bool,
    ) -> Result<Option<(u32, HaltReason)>> {
        if n_gens > self.caps.max_generations {
            return Err(Error::InvalidArgument(format!(
                "{n_gens} generations requested, cap is {}",
                self.caps.max_generations
            )));
        }
        let mut cur = GenerationState::initial(start, self.tracking);
        let mut next = GenerationState::initial(start, self.tracking);
        if !observe(&cur) {
            return Ok(None);
        }
        for _ in 0..n_gens {
            if let Err(reason) = self.step(&cur, &mut next, rng) {
                return Ok(Some((cur.n + 1, reason)));
            }
            std::mem::swap(&mut cur, &mut next);
            if !observe(&cur) {
                break;
            }
        }
        Ok(None)
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        start: Start,
        n_gens: u32,
        rng: &mut R,
    ) -> Result<Trajectory> {
        let mut summaries = Vec::with_capacity(n_gens as usize + 1);
        let halted = self.run_with(start, n_gens, rng, |s| {
            summaries.push(s.summary(self.k_top));
            true
        })?;
        Ok(Trajectory { summaries, halted })
    }
}

/// One generation of the full tree.
pub fn step_generation<R: Rng + ?Sized>(
    state: &GenerationState,
    model: &ValidatedModel,
    rng: &mut R,
    caps: SimCaps,
) -> std::result::Result<GenerationState, HaltReason> {
    let sim = TreeSimulator::new(model, caps, state.tracking, 0);
    let mut next = state.clone();
    sim.step(state, &mut next, rng)?;
    Ok(next)
}

/// Trajectory of the full tree from one A-cell with one parasite, using
/// stream 0 of `seed`, with `F_k` tallies for `k <= 10`.
pub fn simulate_tree(
    model: &ValidatedModel,
    n_gens: u32,
    seed: u64,
    caps: SimCaps,
) -> Result<Trajectory> {
    let sim = TreeSimulator::new(model, caps, BTracking::Cells, 10);
    sim.run(Start::default(), n_gens, &mut replicate_rng(seed, 0))
}
