use crate::error::{Error, Result};
use crate::model::Environment;
use crate::pmf::{ConvolutionPowers, PmfVector};

/// Overflow mass above which callers should warn that `k_max` is too small.
pub const DEFAULT_OVERFLOW_WARNING: f64 = 1e-9;

/// Warning text when the overflow of `pmf` exceeds `threshold`.
pub fn overflow_warning(pmf: &PmfVector, threshold: f64) -> Option<String> {
    (pmf.overflow() > threshold).then(|| {
        format!(
            "overflow mass {:.3e} above k_max = {} exceeds {threshold:.1e}; bucket bounds are [p, p + overflow]",
            pmf.overflow(),
            pmf.k_max()
        )
    })
}

/// Annealed laws of a BPRE started from `start_z` individuals, for
/// generations `0..=n`. Each generation draws one law from `env` and lets
/// every individual reproduce independently according to it.
///
/// Mass sitting above `k_max` is not followed: it stays in the overflow
/// bucket, so every tracked bucket is a lower bound and bucket plus overflow
/// an upper bound.
pub fn bpre_sequence(
    env: &Environment,
    start_z: usize,
    n: u32,
    k_max: usize,
) -> Result<Vec<PmfVector>> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    let mut powers: Vec<(f64, ConvolutionPowers)> = env
        .components
        .iter()
        .map(|c| (c.weight, ConvolutionPowers::new(&c.pmf, k_max)))
        .collect();
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(PmfVector::point_mass(start_z, k_max));
    for _ in 0..n {
        let cur = out.last().expect("generation 0 is present");
        let mut probs = vec![0.0; k_max + 1];
        let mut overflow = cur.overflow();
        for (w, cache) in powers.iter_mut() {
            for (z, &pz) in cur.probs().iter().enumerate() {
                if pz == 0.0 {
                    continue;
                }
                let m = *w * pz;
                let pw = cache.get(z);
                for (k, &q) in pw.probs().iter().enumerate() {
                    probs[k] += m * q;
                }
                overflow += m * pw.overflow();
            }
        }
        out.push(PmfVector::from_parts(probs, overflow));
    }
    Ok(out)
}

/// Annealed law of `Z_n` for the BPRE with environment `env` and one
/// ancestor.
pub fn exact_bpre_distribution(env: &Environment, n: u32, k_max: usize) -> Result<PmfVector> {
    let mut seq = bpre_sequence(env, 1, n, k_max)?;
    Ok(seq.pop().expect("sequence is non-empty"))
}
