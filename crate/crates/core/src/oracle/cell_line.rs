use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CellType, DaughterTypePair as Pair, ValidatedModel};
use crate::pmf::{ConvolutionPowers, PmfVector};

/// Joint law of `(T_[n], Z_[n])` for the random cell line: entry `k` of
/// `a` is `P(T = A, Z = k)`, likewise for `b`. Mass with `Z > k_max` is kept
/// per type in the overflow fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellLineDistribution {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub overflow_a: f64,
    pub overflow_b: f64,
}

impl CellLineDistribution {
    fn start(t: CellType, z: usize, k_max: usize) -> Self {
        let mut d = Self {
            a: vec![0.0; k_max + 1],
            b: vec![0.0; k_max + 1],
            overflow_a: 0.0,
            overflow_b: 0.0,
        };
        let (v, ov) = match t {
            CellType::A => (&mut d.a, &mut d.overflow_a),
            CellType::B => (&mut d.b, &mut d.overflow_b),
        };
        if z <= k_max {
            v[z] = 1.0;
        } else {
            *ov = 1.0;
        }
        d
    }

    pub fn prob_type(&self, t: CellType) -> f64 {
        match t {
            CellType::A => self.a.iter().sum::<f64>() + self.overflow_a,
            CellType::B => self.b.iter().sum::<f64>() + self.overflow_b,
        }
    }

    /// Law of `Z` given the type. `None` when the type has probability 0.
    pub fn conditional(&self, t: CellType) -> Option<PmfVector> {
        let (v, ov) = match t {
            CellType::A => (&self.a, self.overflow_a),
            CellType::B => (&self.b, self.overflow_b),
        };
        let total = self.prob_type(t);
        (total > 0.0)
            .then(|| PmfVector::from_parts(v.iter().map(|p| p / total).collect(), ov / total))
    }

    pub fn total(&self) -> f64 {
        self.prob_type(CellType::A) + self.prob_type(CellType::B)
    }
}

/// Forward recursion of the cell line on the pair `(type, parasite count)`
/// for generations `0..=n`, started from `start`.
///
/// From `(A, z)` each daughter pair `s` and child `i` is taken with
/// probability `p_s / 2`, and the child count is a sum of `z` draws from the
/// `i`-th marginal of the A-law for `s`. From `(B, z)` each child is taken
/// with probability 1/2 and uses the marginals of `law_B`.
pub fn cell_line_sequence(
    model: &ValidatedModel,
    n: u32,
    k_max: usize,
    start: (CellType, usize),
) -> Result<Vec<CellLineDistribution>> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    // (weight, child type, powers of the child's marginal)
    let mut a_moves: Vec<(f64, CellType, ConvolutionPowers)> = Vec::new();
    for pair in Pair::ALL {
        let p = model.p(pair);
        if p == 0.0 {
            continue;
        }
        for i in 0..2 {
            let marg = model.law_a(pair).marginal(i);
            a_moves.push((
                p / 2.0,
                pair.types()[i],
                ConvolutionPowers::new(marg, k_max),
            ));
        }
    }
    let mut b_moves: Vec<(f64, ConvolutionPowers)> = (0..2)
        .map(|i| {
            (
                0.5,
                ConvolutionPowers::new(model.law_b().marginal(i), k_max),
            )
        })
        .collect();
    let stay_a = model.nu() / 2.0;

    let mut out = vec![CellLineDistribution::start(start.0, start.1, k_max)];
    for _ in 0..n {
        let cur = out.last().expect("generation 0 is present");
        let mut next = CellLineDistribution {
            a: vec![0.0; k_max + 1],
            b: vec![0.0; k_max + 1],
            overflow_a: cur.overflow_a * stay_a,
            overflow_b: cur.overflow_b + cur.overflow_a * (1.0 - stay_a),
        };
        for (w, child, cache) in a_moves.iter_mut() {
            for (z, &pz) in cur.a.iter().enumerate() {
                if pz == 0.0 {
                    continue;
                }
                let m = *w * pz;
                let pw = cache.get(z);
                let (v, ov) = match child {
                    CellType::A => (&mut next.a, &mut next.overflow_a),
                    CellType::B => (&mut next.b, &mut next.overflow_b),
                };
                for (k, &q) in pw.probs().iter().enumerate() {
                    v[k] += m * q;
                }
                *ov += m * pw.overflow();
            }
        }
        for (w, cache) in b_moves.iter_mut() {
            for (z, &pz) in cur.b.iter().enumerate() {
                if pz == 0.0 {
                    continue;
                }
                let m = *w * pz;
                let pw = cache.get(z);
                for (k, &q) in pw.probs().iter().enumerate() {
                    next.b[k] += m * q;
                }
                next.overflow_b += m * pw.overflow();
            }
        }
        out.push(next);
    }
    Ok(out)
}

/// Joint law of `(T_[n], Z_[n])` started from one A-cell with one parasite.
pub fn exact_cell_line_distribution(
    model: &ValidatedModel,
    n: u32,
    k_max: usize,
) -> Result<CellLineDistribution> {
    let mut seq = cell_line_sequence(model, n, k_max, (CellType::A, 1))?;
    Ok(seq.pop().expect("sequence is non-empty"))
}
