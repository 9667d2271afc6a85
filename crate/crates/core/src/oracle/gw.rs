use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ValidatedModel;
use crate::pmf::PmfVector;

const MAX_ITERATIONS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GwExtinction {
    pub q: f64,
    /// The offspring law is the point mass at 1, for which extinction is
    /// impossible even though the mean is 1.
    pub degenerate: bool,
    pub iterations: u64,
}

/// Offspring law of the Galton-Watson process of B-parasites: the law of
/// `X0(B) + X1(B)`.
pub fn b_sum_offspring(model: &ValidatedModel) -> PmfVector {
    let s = model.law_b().sum_pmf();
    let k_max = s.len() - 1;
    PmfVector::from_dense(&s, k_max.max(1))
}

/// Extinction probability of a Galton-Watson process with one ancestor:
/// the smallest fixed point of the offspring generating function, found by
/// iterating `q <- f(q)` from 0 until the change is below `tol`.
pub fn gw_extinction_prob(offspring: &PmfVector, tol: f64) -> Result<GwExtinction> {
    if offspring.overflow() > 0.0 {
        return Err(Error::InvalidArgument(
            "offspring law has mass outside its tracked support".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be > 0")));
    }
    let p = offspring.probs();
    if p.get(1).copied().unwrap_or(0.0) == 1.0 {
        return Ok(GwExtinction {
            q: 0.0,
            degenerate: true,
            iterations: 0,
        });
    }
    if offspring.mean_tracked() <= 1.0 {
        return Ok(GwExtinction {
            q: 1.0,
            degenerate: false,
            iterations: 0,
        });
    }
    let f = |s: f64| p.iter().rev().fold(0.0, |acc, &c| acc * s + c);
    let mut q = 0.0;
    for it in 1..=MAX_ITERATIONS {
        let next = f(q);
        let change = (next - q).abs();
        q = next;
        if change < tol {
            return Ok(GwExtinction {
                q,
                degenerate: false,
                iterations: it,
            });
        }
    }
    Ok(GwExtinction {
        q,
        degenerate: false,
        iterations: MAX_ITERATIONS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use approx::assert_abs_diff_eq;

    fn pmf(v: &[f64]) -> PmfVector {
        PmfVector::new(v.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn quarter_three_quarters_gives_one_third() {
        let r = gw_extinction_prob(&pmf(&[0.25, 0.0, 0.75]), 1e-14).unwrap();
        assert_abs_diff_eq!(r.q, 1.0 / 3.0, epsilon = 1e-12);
        assert!(!r.degenerate);
        // smaller root of 3q^2 - 4q + 1 = 0
        let root = (4.0 - (16.0f64 - 12.0).sqrt()) / 6.0;
        assert_abs_diff_eq!(r.q, root, epsilon = 1e-12);
    }

    #[test]
    fn point_mass_at_one_is_flagged() {
        let r = gw_extinction_prob(&pmf(&[0.0, 1.0]), 1e-12).unwrap();
        assert_eq!(r.q, 0.0);
        assert!(r.degenerate);
    }

    #[test]
    fn subcritical_and_critical_die() {
        assert_eq!(gw_extinction_prob(&pmf(&[0.5, 0.5]), 1e-12).unwrap().q, 1.0);
        assert_eq!(
            gw_extinction_prob(&pmf(&[0.5, 0.0, 0.5]), 1e-12).unwrap().q,
            1.0
        );
    }

    #[test]
    fn bundled_gw_model_sum_law() {
        let s = b_sum_offspring(&bundled::gw_b());
        assert_eq!(s.probs(), &[0.25, 0.0, 0.75]);
        let s1 = b_sum_offspring(&bundled::m1());
        assert_eq!(s1.probs(), &[0.0, 0.0, 1.0]);
        assert_eq!(gw_extinction_prob(&s1, 1e-12).unwrap().q, 0.0);
    }
}
