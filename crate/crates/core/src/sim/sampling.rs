use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::model::JointOffspringLaw;

/// Default largest count for which a sum of iid draws is sampled one draw
/// at a time; above it the counts per support point are drawn as a
/// multinomial vector.
pub const DEFAULT_EXPLICIT_SUM_LIMIT: u64 = 4096;

/// Sampler for a finite law on pairs `(x0, x1)`. One-dimensional laws are
/// stored with `x1 = 0`.
#[derive(Debug, Clone)]
pub struct AtomSampler {
    atoms: Vec<(u32, u32)>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl AtomSampler {
    fn from_atoms(atoms: Vec<(u32, u32)>, probs: Vec<f64>) -> Self {
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Self { atoms, probs, cdf }
    }

    /// Joint law, keeping only atoms of positive mass.
    pub fn joint(law: &JointOffspringLaw) -> Self {
        let (atoms, probs) = law
            .points()
            .iter()
            .filter(|s| s.p > 0.0)
            .map(|s| ((s.x0, s.x1), s.p))
            .unzip();
        Self::from_atoms(atoms, probs)
    }

    /// Dense pmf on `0..pmf.len()`.
    pub fn dense(pmf: &[f64]) -> Self {
        let (atoms, probs) = pmf
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| ((k as u32, 0), *p))
            .unzip();
        Self::from_atoms(atoms, probs)
    }

    /// The law has a single atom.
    pub fn is_point_mass(&self) -> bool {
        self.atoms.len() == 1
    }

    #[inline]
    fn index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.atoms.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        for (i, &c) in self.cdf.iter().enumerate() {
            if u < c {
                return i;
            }
        }
        self.atoms.len() - 1
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        self.atoms[self.index(rng)]
    }

    /// Coordinate-wise sum of `z` iid draws. Exact in both regimes: for
    /// `z <= explicit_limit` every draw is made, otherwise the number of
    /// draws landing on each atom is sampled as a multinomial vector by
    /// sequential binomials.
    pub fn sum<R: Rng + ?Sized>(&self, z: u64, rng: &mut R, explicit_limit: u64) -> (u128, u128) {
        if z == 0 {
            return (0, 0);
        }
        if self.atoms.len() == 1 {
            let (a, b) = self.atoms[0];
            return (a as u128 * z as u128, b as u128 * z as u128);
        }
        if z <= explicit_limit {
            let (mut s0, mut s1) = (0u64, 0u64);
            for _ in 0..z {
                let (a, b) = self.draw(rng);
                s0 += a as u64;
                s1 += b as u64;
            }
            return (s0 as u128, s1 as u128);
        }
        let (mut s0, mut s1) = (0u128, 0u128);
        for (i, count) in multinomial(z, &self.probs, rng).into_iter().enumerate() {
            let (a, b) = self.atoms[i];
            s0 += a as u128 * count as u128;
            s1 += b as u128 * count as u128;
        }
        (s0, s1)
    }
}

/// Multinomial counts of `n` trials over categories with weights `probs`
/// (not necessarily normalized), by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || p >= mass {
            out[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = if q == 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .expect("binomial parameters are in range")
                .sample(rng)
        };
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::replicate_rng;

    #[test]
    fn point_mass_sums_are_exact() {
        let s = AtomSampler::dense(&[0.0, 0.0, 1.0]);
        let mut rng = replicate_rng(1, 0);
        assert_eq!(s.sum(10_000, &mut rng, 16), (20_000, 0));
    }

    #[test]
    fn multinomial_conserves_count() {
        let mut rng = replicate_rng(3, 0);
        for n in [0u64, 1, 7, 1_000_000] {
            let c = multinomial(n, &[0.2, 0.0, 0.5, 0.3], &mut rng);
            assert_eq!(c.iter().sum::<u64>(), n);
            assert_eq!(c[1], 0);
        }
    }

    #[test]
    fn both_sum_regimes_have_the_right_mean() {
        // law {0: 1/4, 2: 3/4}, mean 1.5 per draw
        let s = AtomSampler::dense(&[0.25, 0.0, 0.75]);
        let mut rng = replicate_rng(5, 0);
        let z = 5000u64;
        let reps = 400;
        for limit in [u64::MAX, 16] {
            let total: u128 = (0..reps).map(|_| s.sum(z, &mut rng, limit).0).sum();
            let mean = total as f64 / reps as f64;
            // sd of one sum = sqrt(z * 0.75) ~ 61; of the mean ~ 3.1
            assert!((mean - 7500.0).abs() < 15.0, "limit {limit}: {mean}");
        }
    }
}
