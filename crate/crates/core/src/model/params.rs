use serde::{Deserialize, Serialize};

use super::law::{JointOffspringLaw, NORMALIZATION_TOL};
use crate::error::{Assumption, ValidationError, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellType {
    A,
    B,
}

impl std::fmt::Display for CellType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CellType::A => "A",
            CellType::B => "B",
        })
    }
}

/// Types of the two daughters of a dividing cell. `AB` puts the A-daughter
/// first; the ordered pair (B, A) has probability zero and is not
/// representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DaughterTypePair {
    AA,
    AB,
    BB,
}

impl DaughterTypePair {
    pub const ALL: [DaughterTypePair; 3] = [Self::AA, Self::AB, Self::BB];

    pub fn types(self) -> [CellType; 2] {
        match self {
            Self::AA => [CellType::A, CellType::A],
            Self::AB => [CellType::A, CellType::B],
            Self::BB => [CellType::B, CellType::B],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Raw model parameters, exactly as stored in a model file. Nothing is
/// checked until [`validate`] is called.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "p_AA")]
    pub p_aa: f64,
    #[serde(rename = "p_AB")]
    pub p_ab: f64,
    #[serde(rename = "p_BB")]
    pub p_bb: f64,
    /// Joint law of (X0(A,AA), X1(A,AA)) as `[x0, x1, p]` triples.
    #[serde(rename = "law_A_AA")]
    pub law_a_aa: Vec<(u32, u32, f64)>,
    #[serde(rename = "law_A_AB")]
    pub law_a_ab: Vec<(u32, u32, f64)>,
    #[serde(rename = "law_A_BB")]
    pub law_a_bb: Vec<(u32, u32, f64)>,
    /// Joint law of (X0(B), X1(B)).
    #[serde(rename = "law_B")]
    pub law_b: Vec<(u32, u32, f64)>,
}

impl ModelParams {
    /// Parameters with each A-law given as a product of independent
    /// marginals (dense pmfs) and a joint law for B-cells.
    pub fn with_independent_a_laws(
        p: [f64; 3],
        a_aa: (&[f64], &[f64]),
        a_ab: (&[f64], &[f64]),
        a_bb: (&[f64], &[f64]),
        law_b: &[(u32, u32, f64)],
    ) -> Self {
        let triples = |m: (&[f64], &[f64])| JointOffspringLaw::independent(m.0, m.1).triples();
        Self {
            p_aa: p[0],
            p_ab: p[1],
            p_bb: p[2],
            law_a_aa: triples(a_aa),
            law_a_ab: triples(a_ab),
            law_a_bb: triples(a_bb),
            law_b: law_b.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    /// Every standing assumption, as stated, including positivity of the
    /// AA-means when `p_AA = 0`.
    #[default]
    Strict,
    /// Waives the AA-mean part of SA5 when `p_AA = 0`, where those laws never
    /// act.
    Relaxed,
    /// Only structural checks (probabilities in range, normalization,
    /// distinct atoms). Used for degenerate test models such as pure
    /// deterministic sharing, which SA3-SA5 exclude.
    StructuralOnly,
}

/// A parameter set that satisfies all standing assumptions, with its laws
/// pre-built. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedModel {
    params: ModelParams,
    probs: [f64; 3],
    laws_a: [JointOffspringLaw; 3],
    law_b: JointOffspringLaw,
    mode: ValidationMode,
}

pub fn validate(params: &ModelParams) -> Result<ValidatedModel, ValidationError> {
    validate_with(params, ValidationMode::Strict)
}

pub fn validate_with(
    params: &ModelParams,
    mode: ValidationMode,
) -> Result<ValidatedModel, ValidationError> {
    let mut violations = Vec::new();

    let probs = [params.p_aa, params.p_ab, params.p_bb];
    let names = ["p_AA", "p_AB", "p_BB"];
    let mut probs_ok = true;
    for (p, name) in probs.iter().zip(names) {
        if !p.is_finite() || *p < 0.0 || *p > 1.0 {
            violations.push(Violation::InvalidProbability {
                what: name.to_string(),
                value: *p,
            });
            probs_ok = false;
        }
    }
    if probs_ok {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            violations.push(Violation::Normalization {
                what: "cell-type transition probabilities (p_AA + p_AB + p_BB)".to_string(),
                total,
            });
            probs_ok = false;
        }
    }

    let mut build =
        |name: &str, triples: &[(u32, u32, f64)]| match JointOffspringLaw::new(name, triples) {
            Ok(l) => Some(l),
            Err(v) => {
                violations.extend(v);
                None
            }
        };
    let aa = build("law_A_AA", &params.law_a_aa);
    let ab = build("law_A_AB", &params.law_a_ab);
    let bb = build("law_A_BB", &params.law_a_bb);
    let lb = build("law_B", &params.law_b);

    let assumptions = mode != ValidationMode::StructuralOnly;
    if assumptions && probs_ok && params.p_aa >= 1.0 {
        violations.push(Violation::Assumption {
            name: Assumption::SA2,
            detail: format!("p_AA = {} must be < 1", params.p_aa),
        });
    }
    if let (Some(aa), true) = (&aa, assumptions) {
        let q = aa.prob_both_at_most_one();
        if q >= 1.0 - NORMALIZATION_TOL {
            violations.push(Violation::Assumption {
                name: Assumption::SA3,
                detail: format!("P(X0(A,AA) <= 1, X1(A,AA) <= 1) = {q} must be < 1"),
            });
        }
    }
    if let (Some(lb), true) = (&lb, assumptions) {
        let q = lb.prob_both_at_most_one();
        if q >= 1.0 - NORMALIZATION_TOL {
            violations.push(Violation::Assumption {
                name: Assumption::SA4,
                detail: format!("P(X0(B) <= 1, X1(B) <= 1) = {q} must be < 1"),
            });
        }
    }

    let mut sa5 = Vec::new();
    let check_aa = mode == ValidationMode::Strict || params.p_aa > 0.0;
    if let (Some(aa), true) = (&aa, check_aa) {
        if aa.mean(0) <= 0.0 {
            sa5.push("mu_0A(AA) = 0".to_string());
        }
        if aa.mean(1) <= 0.0 {
            sa5.push("mu_1A(AA) = 0".to_string());
        }
    }
    if let Some(lb) = &lb {
        if lb.mean(0) <= 0.0 {
            sa5.push("mu_0B = 0".to_string());
        }
        if lb.mean(1) <= 0.0 {
            sa5.push("mu_1B = 0".to_string());
        }
    }
    if let (Some(ab), Some(bb), true) = (&ab, &bb, probs_ok) {
        let e = expected_contaminated_b_daughters_one(params.p_ab, params.p_bb, ab, bb);
        if e <= 0.0 {
            sa5.push("E #G*_1(B) = 0".to_string());
        }
    }
    if assumptions && !sa5.is_empty() {
        violations.push(Violation::Assumption {
            name: Assumption::SA5,
            detail: sa5.join(", "),
        });
    }

    match (violations.is_empty(), aa, ab, bb, lb) {
        (true, Some(aa), Some(ab), Some(bb), Some(lb)) => Ok(ValidatedModel {
            params: params.clone(),
            probs,
            laws_a: [aa, ab, bb],
            law_b: lb,
            mode,
        }),
        _ => Err(ValidationError { violations }),
    }
}

fn expected_contaminated_b_daughters_one(
    p_ab: f64,
    p_bb: f64,
    ab: &JointOffspringLaw,
    bb: &JointOffspringLaw,
) -> f64 {
    p_ab * ab.prob_positive(1) + p_bb * (bb.prob_positive(0) + bb.prob_positive(1))
}

impl ValidatedModel {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn mode(&self) -> ValidationMode {
        self.mode
    }

    /// Probability that an A-cell splits into the given daughter pair.
    pub fn p(&self, pair: DaughterTypePair) -> f64 {
        self.probs[pair.index()]
    }

    pub fn probs(&self) -> [f64; 3] {
        self.probs
    }

    /// Offspring law of a parasite in an A-mother whose daughters are `pair`.
    pub fn law_a(&self, pair: DaughterTypePair) -> &JointOffspringLaw {
        &self.laws_a[pair.index()]
    }

    pub fn law_b(&self) -> &JointOffspringLaw {
        &self.law_b
    }

    /// Law used by a mother of type `t` with daughters `pair`.
    pub fn law(&self, t: CellType, pair: DaughterTypePair) -> &JointOffspringLaw {
        match t {
            CellType::A => self.law_a(pair),
            CellType::B => &self.law_b,
        }
    }

    /// Mean number of A-daughters of an A-cell, `2 p_AA + p_AB`.
    pub fn nu(&self) -> f64 {
        2.0 * self.probs[0] + self.probs[1]
    }

    /// `mu_{i,A}(pair)`.
    pub fn mu_a(&self, i: usize, pair: DaughterTypePair) -> f64 {
        self.laws_a[pair.index()].mean(i)
    }

    /// `mu_{i,B}`.
    pub fn mu_b(&self, i: usize) -> f64 {
        self.law_b.mean(i)
    }

    /// Exact `E_{z,A} #G*_1(B)`: expected number of contaminated B-daughters
    /// of an A-cell holding `z` parasites.
    pub fn expected_contaminated_b_daughters(&self, z: u64) -> f64 {
        let [_, p_ab, p_bb] = self.probs;
        let ab = &self.laws_a[1];
        let bb = &self.laws_a[2];
        let hit = |q0: f64| 1.0 - q0.powf(z as f64);
        p_ab * hit(ab.prob_zero(1)) + p_bb * (hit(bb.prob_zero(0)) + hit(bb.prob_zero(1)))
    }
}
