use rayon::prelude::*;
use serde::Serialize;

use super::accum::{GenerationAccumulator, Scales};
use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::sim::{
    replicate_rng, BTracking, GenerationSummary, SimCaps, SimRng, Start, TreeSimulator,
};

/// Replicates handled as one unit of work. Results are reduced block by
/// block in index order, which keeps floating-point sums independent of
/// the number of workers.
pub const BLOCK_SIZE: u64 = 256;

pub const DEFAULT_K_TOP: usize = 10;

/// Event a replicate must satisfy at the final generation to be kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    None,
    /// `Z_n(A) > 0` at the horizon.
    SurvivalAAtN,
    /// Some followed parasite is left at the horizon.
    SurvivalAtN,
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Condition::None),
            "survival_A_at_n" | "survival_a_at_n" => Ok(Condition::SurvivalAAtN),
            "survival_at_n" => Ok(Condition::SurvivalAtN),
            other => Err(Error::InvalidArgument(format!(
                "unknown condition '{other}' (expected none, survival_A_at_n or survival_at_n)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    /// Replicates attempted, accepted or not.
    pub replicates: u64,
    pub n_gens: u32,
    pub master_seed: u64,
    pub workers: usize,
    pub condition: Condition,
    pub k_top: usize,
    pub tracking: BTracking,
    pub caps: SimCaps,
    pub start: Start,
}

impl McConfig {
    pub fn new(replicates: u64, n_gens: u32, master_seed: u64) -> Self {
        Self {
            replicates,
            n_gens,
            master_seed,
            workers: 1,
            condition: Condition::None,
            k_top: DEFAULT_K_TOP,
            tracking: BTracking::Cells,
            caps: SimCaps::default(),
            start: Start::default(),
        }
    }

    pub fn with_condition(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_tracking(mut self, tracking: BTracking) -> Self {
        self.tracking = tracking;
        self
    }

    pub fn with_k_top(mut self, k_top: usize) -> Self {
        self.k_top = k_top;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "replicates must be at least 1".into(),
            ));
        }
        if self.k_top == 0 {
            return Err(Error::InvalidArgument("K_top must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        if self.n_gens > self.caps.max_generations {
            return Err(Error::InvalidArgument(format!(
                "{} generations requested, cap is {}",
                self.n_gens, self.caps.max_generations
            )));
        }
        Ok(())
    }
}

/// Reduced output of [`run_mc`]. Entry `n` of `generations` holds the
/// accumulators of generation `n` over accepted, untruncated replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub config: McConfig,
    pub scales: Scales,
    pub generations: Vec<GenerationAccumulator>,
    pub attempted: u64,
    pub accepted: u64,
    pub rejected: u64,
    /// Replicates stopped by a resource cap. They are left out of every
    /// estimator and counted as surviving in the survival curves.
    pub truncated: u64,
    /// Entry `n`: attempted replicates with `Z_n(A) > 0`.
    pub survival_a: Vec<u64>,
    /// Entry `n`: attempted replicates with a followed parasite left.
    /// Not available under [`Condition::SurvivalAAtN`], where replicates
    /// are abandoned as soon as `Z_n(A) = 0`.
    pub survival_all: Option<Vec<u64>>,
}

impl McSummary {
    pub fn generation(&self, n: u32) -> Result<&GenerationAccumulator> {
        self.generations.get(n as usize).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "generation {n} not in summary (horizon {})",
                self.config.n_gens
            ))
        })
    }

    /// Fraction of replicates (among those that were not truncated)
    /// rejected by the conditioning event.
    pub fn rejection_rate(&self) -> f64 {
        let decided = self.attempted - self.truncated;
        if decided == 0 {
            return f64::NAN;
        }
        self.rejected as f64 / decided as f64
    }
}

#[derive(Debug, Clone, Default)]
struct Block {
    gens: Vec<GenerationAccumulator>,
    accepted: u64,
    rejected: u64,
    truncated: u64,
    survival_a: Vec<u64>,
    survival_all: Vec<u64>,
}

impl Block {
    fn new(n_gens: u32, k_top: usize) -> Self {
        let len = n_gens as usize + 1;
        Self {
            gens: (0..len)
                .map(|_| GenerationAccumulator::new(k_top))
                .collect(),
            survival_a: vec![0; len],
            survival_all: vec![0; len],
            ..Self::default()
        }
    }

    fn merge(&mut self, o: &Block) {
        for (a, b) in self.gens.iter_mut().zip(&o.gens) {
            a.merge(b);
        }
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.truncated += o.truncated;
        for (a, b) in self.survival_a.iter_mut().zip(&o.survival_a) {
            *a += b;
        }
        for (a, b) in self.survival_all.iter_mut().zip(&o.survival_all) {
            *a += b;
        }
    }
}

/// Runs `f(replicate, rng)` for every replicate in `0..replicates` on
/// `workers` threads, each with its own stream of `master_seed`, and
/// returns the results in replicate order.
pub fn map_replicates<T, F>(
    replicates: u64,
    master_seed: u64,
    workers: usize,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut SimRng) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| f(r, &mut replicate_rng(master_seed, r)))
            .collect()
    }))
}

/// Number of replicates among `0..replicates` for which `event` holds.
pub fn count_replicates<F>(
    replicates: u64,
    master_seed: u64,
    workers: usize,
    event: F,
) -> Result<u64>
where
    F: Fn(&mut SimRng) -> Result<bool> + Sync,
{
    let hits = map_replicates(replicates, master_seed, workers, |_, rng| event(rng))?;
    let mut count = 0;
    for h in hits {
        if h? {
            count += 1;
        }
    }
    Ok(count)
}

fn run_block(sim: &TreeSimulator, cfg: &McConfig, scales: &Scales, block: u64) -> Result<Block> {
    let mut out = Block::new(cfg.n_gens, cfg.k_top);
    let lo = block * BLOCK_SIZE;
    let hi = (lo + BLOCK_SIZE).min(cfg.replicates);
    let mut buf: Vec<GenerationSummary> = Vec::with_capacity(cfg.n_gens as usize + 1);
    for r in lo..hi {
        buf.clear();
        let mut rng = replicate_rng(cfg.master_seed, r);
        let halted = sim.run_with(cfg.start, cfg.n_gens, &mut rng, |state| {
            let n = state.n as usize;
            let alive_a = state.z_a() > 0;
            let alive = !state.parasite_free();
            if alive_a {
                out.survival_a[n] += 1;
            }
            if alive {
                out.survival_all[n] += 1;
            }
            buf.push(state.summary(cfg.k_top));
            match cfg.condition {
                Condition::None => true,
                Condition::SurvivalAAtN => alive_a,
                Condition::SurvivalAtN => alive,
            }
        })?;
        let last = buf.len() as u32 - 1;
        if let Some((g, _)) = halted {
            out.truncated += 1;
            // the halted generation and everything after it count as alive
            for n in g as usize..=cfg.n_gens as usize {
                out.survival_a[n] += 1;
                out.survival_all[n] += 1;
            }
            continue;
        }
        if last < cfg.n_gens {
            out.rejected += 1;
            continue;
        }
        let s = &buf[last as usize];
        let keep = match cfg.condition {
            Condition::None => true,
            Condition::SurvivalAAtN => s.z_a > 0,
            Condition::SurvivalAtN => {
                s.z_a > 0 || s.z_b.unwrap_or(0) > 0 || s.g_star_b.unwrap_or(0) > 0
            }
        };
        if !keep {
            out.rejected += 1;
            continue;
        }
        out.accepted += 1;
        for (acc, s) in out.gens.iter_mut().zip(&buf) {
            acc.push(s, scales);
        }
    }
    Ok(out)
}

/// Simulates `cfg.replicates` independent trees and reduces them on the
/// fly. Replicate `r` uses stream `r` of `cfg.master_seed`, so the summary
/// is the same for any number of workers.
pub fn run_mc(model: &ValidatedModel, cfg: &McConfig) -> Result<McSummary> {
    cfg.check()?;
    let d = crate::model::derive(model);
    let scales = Scales {
        gamma: d.gamma,
        nu: d.nu,
        mu_b: d.mu_b,
    };
    let sim = TreeSimulator::new(model, cfg.caps, cfg.tracking, cfg.k_top);
    let n_blocks = cfg.replicates.div_ceil(BLOCK_SIZE);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    let blocks: Vec<Result<Block>> = pool.install(|| {
        (0..n_blocks)
            .into_par_iter()
            .map(|b| run_block(&sim, cfg, &scales, b))
            .collect()
    });
    let mut total = Block::new(cfg.n_gens, cfg.k_top);
    for b in blocks {
        total.merge(&b?);
    }
    if cfg.condition != Condition::None && total.accepted == 0 {
        let n = cfg.n_gens as usize;
        let survivors = match cfg.condition {
            Condition::SurvivalAtN => total.survival_all[n],
            _ => total.survival_a[n],
        };
        return Err(Error::AllRejected {
            attempted: cfg.replicates,
            survival_frequency: survivors as f64 / cfg.replicates as f64,
        });
    }
    Ok(McSummary {
        config: cfg.clone(),
        scales,
        generations: total.gens,
        attempted: cfg.replicates,
        accepted: total.accepted,
        rejected: total.rejected,
        truncated: total.truncated,
        survival_a: total.survival_a,
        survival_all: (cfg.condition != Condition::SurvivalAAtN).then_some(total.survival_all),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::mc::CellSet;

    #[test]
    fn deterministic_model_has_zero_variance() {
        let cfg = McConfig::new(300, 8, 5);
        let s = run_mc(&bundled::deterministic_line(), &cfg).unwrap();
        for n in 0..=8 {
            let g = s.generation(n).unwrap();
            assert_eq!(g.z_a.variance(), 0.0);
            assert_eq!(g.g_star_a.variance(), 0.0);
            assert_eq!(s.estimate_fk(n, 1, CellSet::A).unwrap().estimate, 1.0);
        }
    }

    #[test]
    fn summary_does_not_depend_on_worker_count() {
        let m = bundled::m1();
        let base = McConfig::new(700, 7, 11).with_condition(Condition::SurvivalAAtN);
        let one = run_mc(&m, &base).unwrap();
        for w in [2, 3, 8] {
            assert_eq!(
                run_mc(&m, &base.clone().with_workers(w))
                    .unwrap()
                    .generations,
                one.generations
            );
        }
    }

    #[test]
    fn rejection_rate_matches_survival_frequency() {
        let cfg = McConfig::new(5000, 8, 3).with_condition(Condition::SurvivalAAtN);
        let s = run_mc(&bundled::m1(), &cfg).unwrap();
        assert_eq!(s.accepted + s.rejected + s.truncated, s.attempted);
        assert_eq!(s.survival_a[8], s.accepted);
        assert!((s.rejection_rate() - (1.0 - s.survival_a[8] as f64 / 5000.0)).abs() < 1e-12);
        assert!(s.survival_all.is_none());
    }

    #[test]
    fn survival_counts_are_non_increasing() {
        let cfg = McConfig::new(2000, 12, 8).with_tracking(BTracking::Ignore);
        let s = run_mc(&bundled::m1(), &cfg).unwrap();
        assert!(s.survival_a.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(s.survival_a[0], 2000);
    }

    #[test]
    fn extinct_model_rejects_everything() {
        let cfg = McConfig::new(2000, 30, 1)
            .with_condition(Condition::SurvivalAAtN)
            .with_tracking(BTracking::Ignore);
        match run_mc(&bundled::m2(), &cfg) {
            Err(Error::AllRejected {
                attempted,
                survival_frequency,
            }) => {
                assert_eq!(attempted, 2000);
                assert_eq!(survival_frequency, 0.0);
            }
            other => panic!("expected AllRejected, got {other:?}"),
        }
    }

    #[test]
    fn config_is_checked() {
        let m = bundled::m1();
        assert!(run_mc(&m, &McConfig::new(0, 3, 1)).is_err());
        assert!(run_mc(&m, &McConfig::new(10, 3, 1).with_k_top(0)).is_err());
        assert!(run_mc(&m, &McConfig::new(10, 3, 1).with_workers(0)).is_err());
        assert!("survival_A_at_n".parse::<Condition>().is_ok());
        assert!("sometimes".parse::<Condition>().is_err());
    }

    #[test]
    fn generation_zero_is_the_ancestor() {
        let s = run_mc(&bundled::m1(), &McConfig::new(50, 2, 1)).unwrap();
        assert_eq!(s.proportion_a(0).unwrap().estimate, 1.0);
        assert_eq!(s.mean_w(0).unwrap().estimate, 1.0);
    }
}
