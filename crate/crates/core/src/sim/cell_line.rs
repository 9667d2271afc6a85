use rand::Rng;
use serde::Serialize;

use super::sampling::AtomSampler;
use super::{SimCaps, Start};
use crate::model::{CellType, DaughterTypePair as Pair, ValidatedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellLineState {
    pub n: u32,
    pub ty: CellType,
    pub z: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellLineTrajectory {
    /// States for generations `0..=n` (fewer if saturated).
    pub states: Vec<CellLineState>,
    /// Child chosen at each step (the `U_k` draws).
    pub path: Vec<u8>,
    pub saturated: bool,
}

impl CellLineTrajectory {
    pub fn last(&self) -> CellLineState {
        *self.states.last().expect("generation 0 is always present")
    }
}

/// Follows one uniformly chosen root-to-leaf path of the tree: at each
/// step the daughter pair of the current cell is drawn, then a uniform
/// child `U`, and the child's parasite count is the sum of `z` draws from
/// the `U`-th marginal of the matching law.
pub fn simulate_cell_line<R: Rng + ?Sized>(
    model: &ValidatedModel,
    n: u32,
    rng: &mut R,
    start: Start,
    caps: SimCaps,
) -> CellLineTrajectory {
    let marg_a: Vec<[AtomSampler; 2]> = Pair::ALL
        .iter()
        .map(|&s| [0, 1].map(|i| AtomSampler::dense(model.law_a(s).marginal(i))))
        .collect();
    let marg_b = [0, 1].map(|i| AtomSampler::dense(model.law_b().marginal(i)));
    let p = model.probs();

    let mut state = CellLineState {
        n: 0,
        ty: start.ty,
        z: start.z,
    };
    let mut out = CellLineTrajectory {
        states: vec![state],
        path: Vec::with_capacity(n as usize),
        saturated: false,
    };
    for _ in 0..n {
        let pair = match state.ty {
            CellType::A => {
                let u: f64 = rng.random();
                if u < p[0] {
                    Pair::AA
                } else if u < p[0] + p[1] {
                    Pair::AB
                } else {
                    Pair::BB
                }
            }
            CellType::B => Pair::BB,
        };
        let child = rng.random_range(0..2u8);
        let sampler = match state.ty {
            CellType::A => &marg_a[pair.index()][child as usize],
            CellType::B => &marg_b[child as usize],
        };
        let z = sampler.sum(state.z, rng, caps.explicit_sum_limit).0;
        if z > caps.max_parasites_per_cell as u128 {
            out.saturated = true;
            break;
        }
        state = CellLineState {
            n: state.n + 1,
            ty: pair.types()[child as usize],
            z: z as u64,
        };
        out.states.push(state);
        out.path.push(child);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::sim::replicate_rng;

    #[test]
    fn unit_b_sharing_keeps_the_count() {
        let m = bundled::deterministic_line();
        let t = simulate_cell_line(
            &m,
            30,
            &mut replicate_rng(1, 0),
            Start {
                ty: CellType::B,
                z: 1,
            },
            SimCaps::default(),
        );
        assert!(t.states.iter().all(|s| s.z == 1 && s.ty == CellType::B));
        assert_eq!(t.path.len(), 30);
    }

    #[test]
    fn b_never_returns_to_a() {
        let m = bundled::m1();
        for r in 0..200 {
            let t = simulate_cell_line(
                &m,
                12,
                &mut replicate_rng(8, r),
                Start::default(),
                SimCaps::default(),
            );
            let first_b = t.states.iter().position(|s| s.ty == CellType::B);
            if let Some(i) = first_b {
                assert!(t.states[i..].iter().all(|s| s.ty == CellType::B));
            }
        }
    }
}
