use super::params::{validate_with, ModelParams, ValidatedModel};
use crate::error::{Error, Result};

/// The model in which every A-mother offspring value above `n` is replaced
/// by zero. `law_B` and the split probabilities are unchanged, so `nu` is
/// preserved. The result is re-validated in the mode of the input; small
/// `n` may violate the assumptions, which is reported as an error.
pub fn truncate(model: &ValidatedModel, n: u32) -> Result<ValidatedModel> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "truncation level must be >= 1".into(),
        ));
    }
    let p = model.params();
    let cut = |triples: &[(u32, u32, f64)], name: &str| -> Vec<(u32, u32, f64)> {
        // The law was validated, so it can be rebuilt without error.
        super::law::JointOffspringLaw::new(name, triples)
            .map(|l| l.truncated(n).triples())
            .unwrap_or_else(|_| triples.to_vec())
    };
    let out = ModelParams {
        p_aa: p.p_aa,
        p_ab: p.p_ab,
        p_bb: p.p_bb,
        law_a_aa: cut(&p.law_a_aa, "law_A_AA"),
        law_a_ab: cut(&p.law_a_ab, "law_A_AB"),
        law_a_bb: cut(&p.law_a_bb, "law_A_BB"),
        law_b: p.law_b.clone(),
    };
    Ok(validate_with(&out, model.mode())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::error::Assumption;
    use crate::model::DaughterTypePair as Pair;

    #[test]
    fn identity_above_support() {
        let m = bundled::m1();
        let t = truncate(&m, 2).unwrap();
        for pair in Pair::ALL {
            assert_eq!(t.law_a(pair).marginal(0), m.law_a(pair).marginal(0));
            assert_eq!(t.law_a(pair).marginal(1), m.law_a(pair).marginal(1));
        }
        assert_eq!(t.nu(), m.nu());
    }

    #[test]
    fn all_mass_above_level_goes_to_zero() {
        let mut p = bundled::m1_params();
        p.law_a_ab = vec![(0, 1, 0.5), (3, 1, 0.5)];
        let m = crate::model::validate(&p).unwrap();
        let t = truncate(&m, 2).unwrap();
        assert_eq!(t.law_a(Pair::AB).marginal(0), &[1.0]);
        assert_eq!(t.law_b(), m.law_b());
    }

    #[test]
    fn tiny_level_can_break_assumptions() {
        let mut p = bundled::m1_params();
        p.law_a_aa = vec![(0, 5, 0.5), (5, 0, 0.5)];
        let m = crate::model::validate(&p).unwrap();
        match truncate(&m, 1) {
            Err(Error::Invalid(e)) => assert!(e.has_assumption(Assumption::SA5)),
            other => panic!("expected a violation, got {other:?}"),
        }
        assert!(truncate(&m, 0).is_err());
    }
}
