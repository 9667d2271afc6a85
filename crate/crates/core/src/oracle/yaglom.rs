use super::bpre::bpre_sequence;
use crate::error::{Error, Result};
use crate::model::{b_line_environment, ValidatedModel};
use crate::pmf::PmfVector;

/// `P_{1,B}(Z_[m] = . | Z_[m] > 0)` for `m = 1..=n`, computed from the exact
/// recursion of the B-cell line (environments: the two marginals of
/// `law_B`, weight 1/2 each). Entry `m - 1` belongs to generation `m`.
pub fn yaglom_proxies_b(model: &ValidatedModel, n: u32, k_max: usize) -> Result<Vec<PmfVector>> {
    let env = b_line_environment(model);
    let seq = bpre_sequence(&env, 1, n, k_max)?;
    seq.iter()
        .enumerate()
        .skip(1)
        .map(|(m, p)| {
            p.conditioned_positive().ok_or_else(|| {
                Error::DegenerateModel(format!("the B-line is extinct by generation {m}"))
            })
        })
        .collect()
}

/// Conditional law of the B-line count at generation `n` given survival.
pub fn yaglom_proxy_b(model: &ValidatedModel, n: u32, k_max: usize) -> Result<PmfVector> {
    if n == 0 {
        return Ok(PmfVector::point_mass(1, k_max));
    }
    let mut v = yaglom_proxies_b(model, n, k_max)?;
    Ok(v.pop().expect("n >= 1 entries"))
}

/// Total variation distances between consecutive entries.
pub fn successive_tv(pmfs: &[PmfVector]) -> Vec<f64> {
    pmfs.windows(2).map(|w| w[0].tv_distance(&w[1])).collect()
}
