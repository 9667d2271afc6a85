//! Truncated probability mass functions on the non-negative integers.

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on `sum(probs) + overflow = 1`.
pub const PMF_TOL: f64 = 1e-10;

/// Pmf on `0..=k_max` plus the mass of all values above `k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfVector {
    probs: Vec<f64>,
    overflow: f64,
}

impl PmfVector {
    pub fn new(probs: Vec<f64>, overflow: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument(
                "pmf needs at least one bucket".into(),
            ));
        }
        if probs.iter().chain([&overflow]).any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument("pmf entries must be >= 0".into()));
        }
        let total: f64 = probs.iter().sum::<f64>() + overflow;
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidArgument(format!(
                "pmf has total mass {total}"
            )));
        }
        Ok(Self { probs, overflow })
    }

    /// Internal constructor for outputs of mass-preserving operations.
    pub(crate) fn from_parts(probs: Vec<f64>, overflow: f64) -> Self {
        debug_assert!(!probs.is_empty());
        Self { probs, overflow }
    }

    pub fn point_mass(k: usize, k_max: usize) -> Self {
        let mut probs = vec![0.0; k_max + 1];
        if k <= k_max {
            probs[k] = 1.0;
            Self::from_parts(probs, 0.0)
        } else {
            Self::from_parts(probs, 1.0)
        }
    }

    /// Dense pmf cut at `k_max`; the tail becomes overflow.
    pub fn from_dense(pmf: &[f64], k_max: usize) -> Self {
        let mut probs = vec![0.0; k_max + 1];
        let mut overflow = 0.0;
        for (k, &p) in pmf.iter().enumerate() {
            if k <= k_max {
                probs[k] = p;
            } else {
                overflow += p;
            }
        }
        Self::from_parts(probs, overflow)
    }

    pub fn k_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn overflow(&self) -> f64 {
        self.overflow
    }

    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.overflow
    }

    /// `sum k p_k` over the tracked buckets, a lower bound on the mean.
    pub fn mean_tracked(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    /// Each bucket's true probability lies in `[lower, upper]` when the
    /// overflow mass stands for mass whose destination was not followed.
    pub fn bucket_bounds(&self, k: usize) -> (f64, f64) {
        let p = self.get(k);
        (p, (p + self.overflow).min(1.0))
    }

    /// Law conditioned on being positive. `None` if `P(0) = 1`.
    pub fn conditioned_positive(&self) -> Option<PmfVector> {
        let pos = 1.0 - self.probs[0];
        let pos_direct: f64 = self.probs[1..].iter().sum::<f64>() + self.overflow;
        let denom = if pos_direct > 0.0 { pos_direct } else { pos };
        if !(denom > 0.0) {
            return None;
        }
        let mut probs: Vec<f64> = self.probs.iter().map(|p| p / denom).collect();
        probs[0] = 0.0;
        Some(Self::from_parts(probs, self.overflow / denom))
    }

    /// Total variation distance, treating the overflow buckets as one atom.
    pub fn tv_distance(&self, other: &PmfVector) -> f64 {
        let n = self.probs.len().max(other.probs.len());
        let body: f64 = (0..n).map(|k| (self.get(k) - other.get(k)).abs()).sum();
        0.5 * (body + (self.overflow - other.overflow).abs())
    }

    /// Law of the sum of two independent variables, cut at `k_max`. The
    /// overflow is accumulated directly rather than as `1 - sum`.
    pub fn convolve(&self, other: &PmfVector, k_max: usize) -> PmfVector {
        let mut probs = vec![0.0; k_max + 1];
        let mut beyond = 0.0;
        for (i, &a) in self.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.probs.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                if i + j <= k_max {
                    probs[i + j] += a * b;
                } else {
                    beyond += a * b;
                }
            }
        }
        let (oa, ob) = (self.overflow, other.overflow);
        let overflow = oa + ob - oa * ob + beyond;
        Self::from_parts(probs, overflow)
    }

    /// Dense copy of the tracked buckets.
    pub fn to_vec(&self) -> Vec<f64> {
        self.probs.clone()
    }
}

/// Cached convolution powers `lambda^{*z}`, `z = 0, 1, ...`, all cut at the
/// same `k_max`. Powers are extended one factor at a time as they are
/// requested.
#[derive(Debug, Clone)]
pub struct ConvolutionPowers {
    base: PmfVector,
    k_max: usize,
    powers: Vec<PmfVector>,
}

impl ConvolutionPowers {
    pub fn new(base: &[f64], k_max: usize) -> Self {
        Self {
            base: PmfVector::from_dense(base, k_max),
            k_max,
            powers: vec![PmfVector::point_mass(0, k_max)],
        }
    }

    pub fn get(&mut self, z: usize) -> &PmfVector {
        while self.powers.len() <= z {
            let last = self.powers.last().expect("power 0 is always present");
            let next = last.convolve(&self.base, self.k_max);
            self.powers.push(next);
        }
        &self.powers[z]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn convolution_of_bernoullis_is_binomial() {
        let b = PmfVector::new(vec![0.5, 0.5], 0.0).unwrap();
        let c = b.convolve(&b, 4);
        assert_eq!(c.probs(), &[0.25, 0.5, 0.25, 0.0, 0.0]);
        assert_eq!(c.overflow(), 0.0);
    }

    #[test]
    fn truncated_convolution_moves_mass_to_overflow() {
        let b = PmfVector::new(vec![0.5, 0.5], 0.0).unwrap();
        let c = b.convolve(&b, 1);
        assert_eq!(c.probs(), &[0.25, 0.5]);
        assert_eq!(c.overflow(), 0.25);
        assert_abs_diff_eq!(c.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn powers_match_repeated_convolution() {
        let mut cache = ConvolutionPowers::new(&[0.25, 0.0, 0.75], 20);
        let p3 = cache.get(3).clone();
        // P(sum of three = 6) = 0.75^3
        assert_abs_diff_eq!(p3.get(6), 0.421875, epsilon = 1e-15);
        assert_abs_diff_eq!(p3.get(0), 0.015625, epsilon = 1e-15);
        assert_eq!(cache.get(0).probs()[0], 1.0);
    }

    #[test]
    fn conditioning_and_tv() {
        let p = PmfVector::new(vec![0.5, 0.25, 0.25], 0.0).unwrap();
        let c = p.conditioned_positive().unwrap();
        assert_eq!(c.probs(), &[0.0, 0.5, 0.5]);
        assert_eq!(p.tv_distance(&p), 0.0);
        let q = PmfVector::point_mass(1, 2);
        assert_abs_diff_eq!(c.tv_distance(&q), 0.5, epsilon = 1e-15);
        assert!(PmfVector::point_mass(0, 3).conditioned_positive().is_none());
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(PmfVector::new(vec![0.5, 0.4], 0.0).is_err());
        assert!(PmfVector::new(vec![0.5, 0.4], 0.1).is_ok());
        assert!(PmfVector::new(vec![-0.1, 1.1], 0.0).is_err());
    }
}
