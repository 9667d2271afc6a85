use rand::Rng;
use serde::Serialize;

use super::sampling::AtomSampler;
use super::SimCaps;
use crate::error::Result;
use crate::model::{b_line_environment, bpre_environment, Environment, ValidatedModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZPath {
    /// Population sizes for generations `0..=n` (fewer if saturated).
    pub z: Vec<u64>,
    pub saturated: bool,
}

impl ZPath {
    pub fn last(&self) -> u64 {
        *self.z.last().expect("generation 0 is always present")
    }
}

/// BPRE path: each generation draws one law from `env`, then every
/// individual reproduces independently according to it.
pub fn simulate_reduced<R: Rng + ?Sized>(
    env: &Environment,
    start_z: u64,
    n: u32,
    rng: &mut R,
    caps: SimCaps,
) -> ZPath {
    let samplers: Vec<AtomSampler> = env
        .components
        .iter()
        .map(|c| AtomSampler::dense(&c.pmf))
        .collect();
    let mut cdf = Vec::with_capacity(samplers.len());
    let mut acc = 0.0;
    for c in &env.components {
        acc += c.weight;
        cdf.push(acc);
    }
    let mut z = start_z;
    let mut out = ZPath {
        z: vec![z],
        saturated: false,
    };
    for _ in 0..n {
        let e = if samplers.len() == 1 {
            0
        } else {
            let u: f64 = rng.random::<f64>() * acc;
            cdf.iter()
                .position(|&c| u < c)
                .unwrap_or(samplers.len() - 1)
        };
        let next = samplers[e].sum(z, rng, caps.explicit_sum_limit).0;
        if next > caps.max_parasites_per_cell as u128 {
            out.saturated = true;
            break;
        }
        z = next as u64;
        out.z.push(z);
    }
    out
}

/// Parasite count along the random A-cell line, one ancestor.
pub fn simulate_bpre_a<R: Rng + ?Sized>(
    model: &ValidatedModel,
    n: u32,
    rng: &mut R,
    caps: SimCaps,
) -> Result<ZPath> {
    let env = bpre_environment(model)?;
    Ok(simulate_reduced(&env, 1, n, rng, caps))
}

/// Parasite count along a random B-cell line.
pub fn simulate_bpre_b<R: Rng + ?Sized>(
    model: &ValidatedModel,
    n: u32,
    rng: &mut R,
    start_z: u64,
    caps: SimCaps,
) -> ZPath {
    simulate_reduced(&b_line_environment(model), start_z, n, rng, caps)
}

/// Galton-Watson process with offspring law `X0(B) + X1(B)`: the total
/// number of B-parasites descending from `start_z` parasites in B-cells.
pub fn simulate_gw_b<R: Rng + ?Sized>(
    model: &ValidatedModel,
    n: u32,
    rng: &mut R,
    start_z: u64,
    caps: SimCaps,
) -> ZPath {
    let env = Environment::fixed(model.law_b().sum_pmf()).expect("sum law of a validated law");
    simulate_reduced(&env, start_z, n, rng, caps)
}
