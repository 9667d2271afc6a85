use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CellType, DaughterTypePair as Pair, JointOffspringLaw, ValidatedModel};

/// Default cap on the number of tree outcomes generated during enumeration.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TreeCell {
    pub ty: CellType,
    pub z: u64,
}

/// One labelled tree up to generation `n`, cells in heap order: generation
/// `g` occupies indices `2^g - 1 .. 2^(g+1) - 1` and the daughters of cell
/// `i` are `2i + 1` and `2i + 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeOutcome {
    pub prob: f64,
    pub cells: Vec<TreeCell>,
}

impl TreeOutcome {
    pub fn generation(&self, g: u32) -> &[TreeCell] {
        let lo = (1usize << g) - 1;
        &self.cells[lo..2 * lo + 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeOutcomeTable {
    pub n: u32,
    pub outcomes: Vec<TreeOutcome>,
    /// Number of outcomes generated before identical trees were merged.
    pub enumerated: u64,
}

impl TreeOutcomeTable {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.prob).sum()
    }

    /// `E #{v in generation g : pred(v)}`.
    pub fn expected_count(&self, g: u32, pred: impl Fn(&TreeCell) -> bool) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.prob * o.generation(g).iter().filter(|c| pred(c)).count() as f64)
            .sum()
    }

    /// `E #{v in G_g(A) : Z_v = k}`.
    pub fn expected_a_cells_with(&self, g: u32, k: u64) -> f64 {
        self.expected_count(g, |c| c.ty == CellType::A && c.z == k)
    }

    /// `E #G*_g(t)`.
    pub fn expected_contaminated(&self, g: u32, t: CellType) -> f64 {
        self.expected_count(g, |c| c.ty == t && c.z > 0)
    }

    /// `E Z_g(t)`, the expected number of parasites in type-`t` cells.
    pub fn expected_parasites(&self, g: u32, t: CellType) -> f64 {
        self.outcomes
            .iter()
            .map(|o| {
                let s: u64 = o
                    .generation(g)
                    .iter()
                    .filter(|c| c.ty == t)
                    .map(|c| c.z)
                    .sum();
                o.prob * s as f64
            })
            .sum()
    }

    /// Joint law of `(T_[g], Z_[g])` along a uniformly chosen path, as
    /// `(a, b)` with `a[k] = P(T = A, Z = k)`.
    pub fn cell_line_marginal(&self, g: u32) -> (Vec<f64>, Vec<f64>) {
        let zmax = self
            .outcomes
            .iter()
            .flat_map(|o| o.generation(g).iter().map(|c| c.z))
            .max()
            .unwrap_or(0) as usize;
        let mut a = vec![0.0; zmax + 1];
        let mut b = vec![0.0; zmax + 1];
        let w = 1.0 / (1u64 << g) as f64;
        for o in &self.outcomes {
            for c in o.generation(g) {
                let v = match c.ty {
                    CellType::A => &mut a,
                    CellType::B => &mut b,
                };
                v[c.z as usize] += o.prob * w;
            }
        }
        (a, b)
    }

    /// Joint law of the whole path `(T_[g], Z_[0], ..., Z_[g])` of a
    /// uniformly chosen cell line.
    pub fn cell_line_path_law(&self, g: u32) -> BTreeMap<(CellType, Vec<u64>), f64> {
        let mut out = BTreeMap::new();
        let w = 1.0 / (1u64 << g) as f64;
        for o in &self.outcomes {
            let lo = (1usize << g) - 1;
            for leaf in lo..2 * lo + 1 {
                let mut path = Vec::with_capacity(g as usize + 1);
                let mut i = leaf;
                loop {
                    path.push(o.cells[i].z);
                    if i == 0 {
                        break;
                    }
                    i = (i - 1) / 2;
                }
                path.reverse();
                *out.entry((o.cells[leaf].ty, path)).or_insert(0.0) += o.prob * w;
            }
        }
        out
    }
}

/// Exact law of `(Z0, Z1)` summed over `z` iid draws from a joint law.
type SumLaw = Vec<((u64, u64), f64)>;

struct SumLaws<'a> {
    laws: [&'a JointOffspringLaw; 4],
    cache: HashMap<(usize, u64), SumLaw>,
}

impl<'a> SumLaws<'a> {
    fn new(model: &'a ValidatedModel) -> Self {
        Self {
            laws: [
                model.law_a(Pair::AA),
                model.law_a(Pair::AB),
                model.law_a(Pair::BB),
                model.law_b(),
            ],
            cache: HashMap::new(),
        }
    }

    /// Index 0..3 are the A-laws in pair order, 3 is `law_B`.
    fn get(&mut self, law: usize, z: u64) -> &SumLaw {
        if !self.cache.contains_key(&(law, z)) {
            let value = if z == 0 {
                vec![((0, 0), 1.0)]
            } else {
                let prev = self.get(law, z - 1).clone();
                let mut acc: BTreeMap<(u64, u64), f64> = BTreeMap::new();
                for &((s0, s1), p) in &prev {
                    for pt in self.laws[law].points() {
                        if pt.p == 0.0 {
                            continue;
                        }
                        *acc.entry((s0 + pt.x0 as u64, s1 + pt.x1 as u64))
                            .or_insert(0.0) += p * pt.p;
                    }
                }
                acc.into_iter().collect()
            };
            self.cache.insert((law, z), value);
        }
        &self.cache[&(law, z)]
    }
}

/// Every way a single cell can divide: `(daughter 0, daughter 1, prob)`.
fn daughter_options(
    model: &ValidatedModel,
    laws: &mut SumLaws,
    cell: TreeCell,
) -> Vec<(TreeCell, TreeCell, f64)> {
    let pairs: Vec<(Pair, f64, usize)> = match cell.ty {
        CellType::A => Pair::ALL
            .iter()
            .map(|&s| (s, model.p(s), s.index()))
            .filter(|(_, p, _)| *p > 0.0)
            .collect(),
        CellType::B => vec![(Pair::BB, 1.0, 3)],
    };
    let mut out = Vec::new();
    for (pair, ps, law) in pairs {
        let [t0, t1] = pair.types();
        for &((z0, z1), q) in laws.get(law, cell.z) {
            out.push((
                TreeCell { ty: t0, z: z0 },
                TreeCell { ty: t1, z: z1 },
                ps * q,
            ));
        }
    }
    out
}

/// Exhaustive enumeration of the cell tree with its parasites up to
/// generation `n`, started from one A-cell with one parasite.
pub fn brute_force_tree(model: &ValidatedModel, n: u32) -> Result<TreeOutcomeTable> {
    brute_force_tree_with_budget(model, n, DEFAULT_BUDGET)
}

pub fn brute_force_tree_with_budget(
    model: &ValidatedModel,
    n: u32,
    budget: u64,
) -> Result<TreeOutcomeTable> {
    if n > 5 {
        return Err(Error::InvalidArgument(format!(
            "brute-force enumeration is limited to n <= 5, got {n}"
        )));
    }
    let mut laws = SumLaws::new(model);
    let mut current: Vec<TreeOutcome> = vec![TreeOutcome {
        prob: 1.0,
        cells: vec![TreeCell {
            ty: CellType::A,
            z: 1,
        }],
    }];
    let mut enumerated: u64 = 1;
    for g in 0..n {
        let mut merged: BTreeMap<Vec<TreeCell>, f64> = BTreeMap::new();
        for outcome in &current {
            let options: Vec<Vec<(TreeCell, TreeCell, f64)>> = outcome
                .generation(g)
                .iter()
                .map(|&c| daughter_options(model, &mut laws, c))
                .collect();
            let combos: u64 = options.iter().map(|o| o.len() as u64).product();
            enumerated = enumerated.saturating_add(combos);
            if enumerated > budget {
                return Err(Error::BudgetExceeded {
                    attempted: enumerated,
                    budget,
                });
            }
            // odometer over the per-cell options
            let mut idx = vec![0usize; options.len()];
            'combos: loop {
                let mut cells = outcome.cells.clone();
                let mut prob = outcome.prob;
                for (j, o) in options.iter().enumerate() {
                    let (d0, d1, p) = o[idx[j]];
                    cells.push(d0);
                    cells.push(d1);
                    prob *= p;
                }
                *merged.entry(cells).or_insert(0.0) += prob;
                let mut j = options.len();
                loop {
                    if j == 0 {
                        break 'combos;
                    }
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < options[j].len() {
                        break;
                    }
                    idx[j] = 0;
                }
            }
        }
        current = merged
            .into_iter()
            .map(|(cells, prob)| TreeOutcome { prob, cells })
            .collect();
    }
    Ok(TreeOutcomeTable {
        n,
        outcomes: current,
        enumerated,
    })
}
