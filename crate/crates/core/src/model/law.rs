use crate::error::Violation;

/// Absolute tolerance on the total mass of every probability vector.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// One atom of a joint per-parasite offspring law: `x0` offspring go to the
/// first daughter, `x1` to the second, with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportPoint {
    pub x0: u32,
    pub x1: u32,
    pub p: f64,
}

/// Finite-support joint law of the offspring numbers a single parasite sends
/// into the two daughter cells.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOffspringLaw {
    points: Vec<SupportPoint>,
    marginals: [Vec<f64>; 2],
    means: [f64; 2],
}

impl JointOffspringLaw {
    /// Builds a law from `(x0, x1, p)` triples. `name` is used in violation
    /// messages only.
    pub fn new(name: &str, triples: &[(u32, u32, f64)]) -> Result<Self, Vec<Violation>> {
        let mut violations = Vec::new();
        if triples.is_empty() {
            violations.push(Violation::EmptyLaw {
                law: name.to_string(),
            });
            return Err(violations);
        }
        let mut total = 0.0;
        for (i, &(x0, x1, p)) in triples.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                violations.push(Violation::InvalidProbability {
                    what: format!("{name} entry ({x0}, {x1})"),
                    value: p,
                });
            } else {
                total += p;
            }
            if triples[..i].iter().any(|&(a, b, _)| a == x0 && b == x1) {
                violations.push(Violation::DuplicateSupport {
                    law: name.to_string(),
                    x0,
                    x1,
                });
            }
        }
        if violations.is_empty() && (total - 1.0).abs() > NORMALIZATION_TOL {
            violations.push(Violation::Normalization {
                what: name.to_string(),
                total,
            });
        }
        if !violations.is_empty() {
            return Err(violations);
        }
        let points: Vec<SupportPoint> = triples
            .iter()
            .map(|&(x0, x1, p)| SupportPoint { x0, x1, p })
            .collect();
        Ok(Self::from_points_unchecked(points))
    }

    /// Point mass at `(x0, x1)`.
    pub fn point_mass(x0: u32, x1: u32) -> Self {
        Self::from_points_unchecked(vec![SupportPoint { x0, x1, p: 1.0 }])
    }

    /// Product law of two independent marginals given as dense pmfs.
    pub fn independent(m0: &[f64], m1: &[f64]) -> Self {
        let mut points = Vec::new();
        for (x0, &p0) in m0.iter().enumerate() {
            for (x1, &p1) in m1.iter().enumerate() {
                if p0 > 0.0 && p1 > 0.0 {
                    points.push(SupportPoint {
                        x0: x0 as u32,
                        x1: x1 as u32,
                        p: p0 * p1,
                    });
                }
            }
        }
        Self::from_points_unchecked(points)
    }

    fn from_points_unchecked(points: Vec<SupportPoint>) -> Self {
        let max0 = points.iter().map(|s| s.x0).max().unwrap_or(0) as usize;
        let max1 = points.iter().map(|s| s.x1).max().unwrap_or(0) as usize;
        let mut m0 = vec![0.0; max0 + 1];
        let mut m1 = vec![0.0; max1 + 1];
        for s in &points {
            m0[s.x0 as usize] += s.p;
            m1[s.x1 as usize] += s.p;
        }
        let mean = |m: &[f64]| m.iter().enumerate().map(|(x, p)| x as f64 * p).sum();
        let means = [mean(&m0), mean(&m1)];
        Self {
            points,
            marginals: [m0, m1],
            means,
        }
    }

    pub fn points(&self) -> &[SupportPoint] {
        &self.points
    }

    pub fn triples(&self) -> Vec<(u32, u32, f64)> {
        self.points.iter().map(|s| (s.x0, s.x1, s.p)).collect()
    }

    /// Dense pmf of coordinate `i` (0 or 1).
    pub fn marginal(&self, i: usize) -> &[f64] {
        &self.marginals[i]
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.means[i]
    }

    /// Dense pmf of `x0 + x1`.
    pub fn sum_pmf(&self) -> Vec<f64> {
        let max = self
            .points
            .iter()
            .map(|s| (s.x0 + s.x1) as usize)
            .max()
            .unwrap_or(0);
        let mut out = vec![0.0; max + 1];
        for s in &self.points {
            out[(s.x0 + s.x1) as usize] += s.p;
        }
        out
    }

    /// `P(X0 <= 1, X1 <= 1)`.
    pub fn prob_both_at_most_one(&self) -> f64 {
        self.points
            .iter()
            .filter(|s| s.x0 <= 1 && s.x1 <= 1)
            .map(|s| s.p)
            .sum()
    }

    /// `P(X_i = 0)`.
    pub fn prob_zero(&self, i: usize) -> f64 {
        self.marginals[i][0]
    }

    /// `P(X_i >= 1)`, summed over the positive atoms.
    pub fn prob_positive(&self, i: usize) -> f64 {
        self.marginals[i][1..].iter().sum()
    }

    pub fn max_value(&self) -> u32 {
        self.points
            .iter()
            .map(|s| s.x0.max(s.x1))
            .max()
            .unwrap_or(0)
    }

    /// Maps every coordinate value above `n` to zero, merging atoms that
    /// collide.
    pub fn truncated(&self, n: u32) -> Self {
        let mut merged: Vec<SupportPoint> = Vec::with_capacity(self.points.len());
        for s in &self.points {
            let x0 = if s.x0 > n { 0 } else { s.x0 };
            let x1 = if s.x1 > n { 0 } else { s.x1 };
            match merged.iter_mut().find(|m| m.x0 == x0 && m.x1 == x1) {
                Some(m) => m.p += s.p,
                None => merged.push(SupportPoint { x0, x1, p: s.p }),
            }
        }
        Self::from_points_unchecked(merged)
    }
}
