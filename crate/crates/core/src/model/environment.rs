use serde::Serialize;

use super::params::{DaughterTypePair as Pair, ValidatedModel};
use crate::error::{Error, Result};

/// One possible offspring law of the environment, with its probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedPmf {
    pub weight: f64,
    /// Dense pmf on `0..pmf.len()`.
    pub pmf: Vec<f64>,
}

impl WeightedPmf {
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Law of a single environment draw: a finite mixture of offspring pmfs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub components: Vec<WeightedPmf>,
}

impl Environment {
    /// Builds an environment, checking the weights.
    pub fn new(components: Vec<WeightedPmf>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("empty environment".into()));
        }
        let mut total = 0.0;
        for c in &components {
            if !(c.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "negative weight {}",
                    c.weight
                )));
            }
            let mass: f64 = c.pmf.iter().sum();
            if c.pmf.iter().any(|p| !(*p >= 0.0)) || (mass - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "environment pmf has total mass {mass}"
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "environment weights sum to {total}"
            )));
        }
        Ok(Self { components })
    }

    /// Environment that always offers the same law.
    pub fn fixed(pmf: Vec<f64>) -> Result<Self> {
        Self::new(vec![WeightedPmf { weight: 1.0, pmf }])
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// Mean of the mixture, `E g'(1)`.
    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean()).sum()
    }

    pub fn max_value(&self) -> usize {
        self.components
            .iter()
            .map(|c| c.pmf.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }
}

/// Environment of the random A-cell line: marginal 0 and marginal 1 of the
/// AA-law with weight `p_AA / nu` each, and marginal 0 of the AB-law with
/// weight `p_AB / nu`. Components of zero weight are dropped.
pub fn bpre_environment(model: &ValidatedModel) -> Result<Environment> {
    let nu = model.nu();
    if nu <= 0.0 {
        return Err(Error::DegenerateModel(
            "nu = 0: A-cells have no A-daughters".into(),
        ));
    }
    let candidates = [
        (model.p(Pair::AA) / nu, model.law_a(Pair::AA).marginal(0)),
        (model.p(Pair::AA) / nu, model.law_a(Pair::AA).marginal(1)),
        (model.p(Pair::AB) / nu, model.law_a(Pair::AB).marginal(0)),
    ];
    let components = candidates
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(weight, pmf)| WeightedPmf {
            weight,
            pmf: pmf.to_vec(),
        })
        .collect();
    Environment::new(components)
}

/// Environment of the random B-cell line: the two marginals of `law_B`,
/// weight one half each.
pub fn b_line_environment(model: &ValidatedModel) -> Environment {
    let lb = model.law_b();
    Environment {
        components: (0..2)
            .map(|i| WeightedPmf {
                weight: 0.5,
                pmf: lb.marginal(i).to_vec(),
            })
            .collect(),
    }
}
