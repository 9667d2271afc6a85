//! Invariants over randomly generated models.

use std::collections::BTreeMap;

use hpbranch_core::io::{parse_model_str, to_model_json};
use hpbranch_core::mc::{run_mc, McConfig};
use hpbranch_core::model::{
    bpre_environment, derive, minimize_phi, phi, truncate, validate_with, CellType,
    DaughterTypePair, ModelParams, ValidatedModel, ValidationMode,
};
use hpbranch_core::oracle::cell_line_sequence;
use hpbranch_core::sim::{
    replicate_rng, simulate_cell_line, simulate_tree, BTracking, SimCaps, Start,
};
use hpbranch_core::PmfVector;
use proptest::prelude::*;

fn law() -> impl Strategy<Value = Vec<(u32, u32, f64)>> {
    prop::collection::vec((0u32..4, 0u32..4, 0.05f64..1.0), 1..5).prop_map(|atoms| {
        let mut merged: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for (a, b, w) in atoms {
            *merged.entry((a, b)).or_default() += w;
        }
        let total: f64 = merged.values().sum();
        merged
            .into_iter()
            .map(|((a, b), w)| (a, b, w / total))
            .collect()
    })
}

fn params() -> impl Strategy<Value = ModelParams> {
    (
        (0.05f64..1.0, 0.05f64..1.0, 0.0f64..1.0),
        law(),
        law(),
        law(),
        law(),
    )
        .prop_map(|((a, b, c), aa, ab, bb, lb)| {
            let s = a + b + c;
            ModelParams {
                p_aa: a / s,
                p_ab: b / s,
                p_bb: c / s,
                law_a_aa: aa,
                law_a_ab: ab,
                law_a_bb: bb,
                law_b: lb,
            }
        })
}

fn model() -> impl Strategy<Value = ValidatedModel> {
    params().prop_map(|p| {
        validate_with(&p, ValidationMode::StructuralOnly)
            .expect("generated model is structurally valid")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_endpoints_and_convexity(m in model()) {
        let d = derive(&m);
        prop_assert!((phi(&m, 0.0).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((phi(&m, 1.0).unwrap() - d.gamma / d.nu).abs() < 1e-12);
        let mid = phi(&m, 0.5).unwrap();
        prop_assert!(mid <= 0.5 * (1.0 + d.gamma / d.nu) + 1e-12);
        let (theta, min) = minimize_phi(&m, 1e-10).unwrap();
        prop_assert!((0.0..=1.0).contains(&theta));
        for i in 0..=20 {
            prop_assert!(min <= phi(&m, i as f64 / 20.0).unwrap() + 1e-9);
        }
    }

    #[test]
    fn environment_is_a_probability_mixture(m in model()) {
        let env = bpre_environment(&m).unwrap();
        let w: f64 = env.weights().iter().sum();
        prop_assert!((w - 1.0).abs() < 1e-12);
        let d = derive(&m);
        prop_assert!((env.mean() - d.gamma / d.nu).abs() < 1e-12);
    }

    #[test]
    fn cell_line_mass_and_type_probability(m in model()) {
        let nu = derive(&m).nu;
        let seq = cell_line_sequence(&m, 4, 48, (CellType::A, 1)).unwrap();
        for (n, d) in seq.iter().enumerate() {
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
            prop_assert!((d.prob_type(CellType::A) - (nu / 2.0).powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_lowers_means(m in model(), level in 1u32..3) {
        let t = truncate(&m, level).unwrap();
        let (d, dt) = (derive(&m), derive(&t));
        prop_assert!(dt.gamma <= d.gamma + 1e-12);
        prop_assert_eq!(dt.nu, d.nu);
        prop_assert_eq!(t.law_b(), m.law_b());
        for pair in DaughterTypePair::ALL {
            prop_assert!(t.law_a(pair).max_value() <= level);
        }
    }

    #[test]
    fn model_json_round_trip(p in params()) {
        prop_assert_eq!(parse_model_str("generated", &to_model_json(&p)).unwrap(), p);
    }

    #[test]
    fn pmf_operations_keep_mass(a in prop::collection::vec(0.01f64..1.0, 1..6), b in prop::collection::vec(0.01f64..1.0, 1..6)) {
        let norm = |v: &[f64]| -> Vec<f64> { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s).collect() };
        let pa = PmfVector::from_dense(&norm(&a), 4);
        let pb = PmfVector::from_dense(&norm(&b), 4);
        prop_assert!((pa.total() - 1.0).abs() < 1e-12);
        prop_assert!((pa.convolve(&pb, 4).total() - 1.0).abs() < 1e-12);
        let tv = pa.tv_distance(&pb);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tv));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_simulation_invariants(m in model(), seed in any::<u64>()) {
        let a = simulate_tree(&m, 8, seed, SimCaps::default()).unwrap();
        prop_assert_eq!(&a, &simulate_tree(&m, 8, seed, SimCaps::default()).unwrap());
        if a.halted.is_none() {
            for s in &a.summaries {
                let total = s.a_cells() as u128 + s.g_star_b.unwrap() as u128 + s.clean_b.unwrap();
                prop_assert_eq!(total, 1u128 << s.n);
                let tallied: u64 = s.count_a_by_k.iter().sum();
                prop_assert!(tallied <= s.g_star_a);
            }
        }
    }

    #[test]
    fn cell_line_never_returns_to_a(m in model(), seed in any::<u64>()) {
        let t = simulate_cell_line(&m, 12, &mut replicate_rng(seed, 0), Start::default(), SimCaps::default());
        let first_b = t.states.iter().position(|s| s.ty == CellType::B).unwrap_or(t.states.len());
        prop_assert!(t.states[first_b..].iter().all(|s| s.ty == CellType::B));
    }

    #[test]
    fn survival_counts_are_nested(m in model(), seed in any::<u64>()) {
        let cfg = McConfig::new(64, 8, seed).with_tracking(BTracking::ParasiteTotal);
        let s = run_mc(&m, &cfg).unwrap();
        prop_assert!(s.survival_a.windows(2).all(|w| w[1] <= w[0]));
        let all = s.survival_all.as_ref().unwrap();
        prop_assert!(s.survival_a.iter().zip(all).all(|(a, b)| a <= b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn summary_is_worker_count_invariant(m in model(), seed in any::<u64>()) {
        let cfg = McConfig::new(600, 6, seed);
        let one = run_mc(&m, &cfg).unwrap();
        let mut many = run_mc(&m, &cfg.clone().with_workers(5)).unwrap();
        many.config.workers = 1;
        prop_assert_eq!(one, many);
    }
}
