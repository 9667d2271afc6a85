use super::{Ctx, Verdict};
use crate::error::{Error, Result};
use crate::io::{parse_model_str, to_model_json};
use crate::mc::{
    count_replicates, render_mc_csv, run_mc, yaglom_compare, CellSet, Condition, Estimate,
    McConfig, Moments,
};
use crate::model::{
    bpre_environment, classify, derive, minimize_phi, phi, BpreClass, CellType, ValidatedModel,
};
use crate::oracle::{
    b_sum_offspring, brute_force_tree_with_budget, cell_line_sequence, exact_bpre_distribution,
    gw_extinction_prob, yaglom_proxies_b, DEFAULT_BUDGET,
};
use crate::pmf::PmfVector;
use crate::sim::{simulate_bpre_a, simulate_cell_line, simulate_gw_b, BTracking, SimCaps, Start};

const SIGMAS: f64 = 3.0;
const BIG_RUN: u64 = 100_000;

type CheckFn<T> = for<'a, 'b> fn(&Ctx<'a>, &'b T, u64) -> Result<Verdict>;

/// One entry of the suite.
pub struct CheckDef<T: 'static> {
    pub id: u32,
    pub name: &'static str,
    /// Skipped under the small budget.
    pub heavy: bool,
    /// Retried once with a fresh seed on failure.
    pub stochastic: bool,
    pub max_seconds: f64,
    pub run: CheckFn<T>,
}

pub static CHECKS: [CheckDef<()>; 15] = [
    CheckDef {
        id: 1,
        name: "cell_line_given_a_is_bpre",
        heavy: false,
        stochastic: false,
        max_seconds: 1.0,
        run: |c, _, s| cell_line_given_a_is_bpre(&c.model("m1")?, s),
    },
    CheckDef {
        id: 2,
        name: "brute_force_matches_bpre",
        heavy: false,
        stochastic: false,
        max_seconds: 30.0,
        run: |c, _, _| brute_force_matches_bpre(&c.model("m1")?, DEFAULT_BUDGET),
    },
    CheckDef {
        id: 3,
        name: "a_line_probability",
        heavy: false,
        stochastic: true,
        max_seconds: 10.0,
        run: |c, _, s| a_line_probability(c, &c.model("m1")?, s, BIG_RUN),
    },
    CheckDef {
        id: 4,
        name: "mean_identities",
        heavy: true,
        stochastic: true,
        max_seconds: 60.0,
        run: mean_identities,
    },
    CheckDef {
        id: 5,
        name: "extinction_vs_simulation",
        heavy: true,
        stochastic: true,
        max_seconds: 120.0,
        run: extinction_vs_simulation,
    },
    CheckDef {
        id: 6,
        name: "gw_fixed_point",
        heavy: false,
        stochastic: true,
        max_seconds: 10.0,
        run: gw_fixed_point,
    },
    CheckDef {
        id: 7,
        name: "phi_minimization",
        heavy: false,
        stochastic: false,
        max_seconds: 1.0,
        run: phi_minimization,
    },
    CheckDef {
        id: 8,
        name: "proportion_a_decays",
        heavy: true,
        stochastic: true,
        max_seconds: 120.0,
        run: proportion_a_decays,
    },
    CheckDef {
        id: 9,
        name: "fk_a_decays",
        heavy: true,
        stochastic: true,
        max_seconds: 120.0,
        run: fk_a_decays,
    },
    CheckDef {
        id: 10,
        name: "yaglom_comparison",
        heavy: true,
        stochastic: true,
        max_seconds: 300.0,
        run: yaglom_comparison,
    },
    CheckDef {
        id: 11,
        name: "martingale_directions",
        heavy: true,
        stochastic: true,
        max_seconds: 60.0,
        run: martingale_directions,
    },
    CheckDef {
        id: 12,
        name: "worker_count_determinism",
        heavy: true,
        stochastic: false,
        max_seconds: 60.0,
        run: worker_count_determinism,
    },
    CheckDef {
        id: 13,
        name: "bundled_classification",
        heavy: false,
        stochastic: false,
        max_seconds: 5.0,
        run: bundled_classification,
    },
    CheckDef {
        id: 14,
        name: "model_file_round_trip",
        heavy: false,
        stochastic: false,
        max_seconds: 1.0,
        run: model_file_round_trip,
    },
    CheckDef {
        id: 15,
        name: "edge_models",
        heavy: false,
        stochastic: false,
        max_seconds: 10.0,
        run: edge_models,
    },
];

/// Identities that hold for every model, run on a user-supplied one.
pub static MODEL_CHECKS: [CheckDef<ValidatedModel>; 4] = [
    CheckDef {
        id: 1,
        name: "cell_line_given_a_is_bpre",
        heavy: false,
        stochastic: false,
        max_seconds: 30.0,
        run: |_, m, s| cell_line_given_a_is_bpre(m, s),
    },
    CheckDef {
        id: 2,
        name: "brute_force_matches_bpre",
        heavy: false,
        stochastic: false,
        max_seconds: 60.0,
        run: |_, m, _| brute_force_matches_bpre(m, DEFAULT_BUDGET / 10),
    },
    CheckDef {
        id: 3,
        name: "a_line_probability",
        heavy: false,
        stochastic: true,
        max_seconds: 60.0,
        run: |c, m, s| a_line_probability(c, m, s, 20_000),
    },
    CheckDef {
        id: 4,
        name: "mean_identities",
        heavy: true,
        stochastic: true,
        max_seconds: 300.0,
        run: |c, m, s| tree_mean_identities(c, m, s),
    },
];

fn verdict(pass: bool, observed: String, expected: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        observed,
        expected: expected.into(),
    }
}

/// `|estimate - target|` in standard errors; 0 when both agree exactly.
fn z_score(e: &Estimate, target: f64) -> f64 {
    let d = (e.estimate - target).abs();
    if d == 0.0 {
        0.0
    } else {
        d / e.se
    }
}

fn combined_se(a: &Estimate, b: &Estimate) -> f64 {
    (a.se * a.se + b.se * b.se).sqrt()
}

fn cell_line_given_a_is_bpre(m: &ValidatedModel, _seed: u64) -> Result<Verdict> {
    let k_max = 128;
    let env = bpre_environment(m)?;
    let seq = cell_line_sequence(m, 6, k_max, (CellType::A, 1))?;
    let mut worst: f64 = 0.0;
    for (n, d) in seq.iter().enumerate() {
        let cond = d.conditional(CellType::A).ok_or_else(|| {
            Error::DegenerateModel(format!(
                "the cell line is never of type A at generation {n}"
            ))
        })?;
        let bpre = exact_bpre_distribution(&env, n as u32, k_max)?;
        for k in 0..=k_max {
            worst = worst.max((cond.get(k) - bpre.get(k)).abs());
        }
        worst = worst.max((cond.overflow() - bpre.overflow()).abs());
    }
    Ok(verdict(
        worst <= 1e-12,
        format!("max bucket difference {worst:e} over n <= 6"),
        "<= 1e-12",
    ))
}

fn brute_force_matches_bpre(m: &ValidatedModel, budget: u64) -> Result<Verdict> {
    let nu = derive(m).nu;
    let env = bpre_environment(m)?;
    let mut worst: f64 = 0.0;
    let mut depth = 0;
    for n in 0..=3u32 {
        // parasite-heavy models can outgrow the enumeration budget at n = 3
        let t = match brute_force_tree_with_budget(m, n, budget) {
            Err(Error::BudgetExceeded { .. }) if n > 2 => break,
            r => r?,
        };
        depth = n;
        let bpre = exact_bpre_distribution(&env, n, 64)?;
        for k in 0..=8u64 {
            let lhs = t.expected_a_cells_with(n, k) / nu.powi(n as i32);
            worst = worst.max((lhs - bpre.get(k as usize)).abs());
        }
    }
    Ok(verdict(
        worst <= 1e-10,
        format!("max |nu^-n E#{{A-cells with k}} - bpre| = {worst:e} over n <= {depth}, k <= 8"),
        "<= 1e-10",
    ))
}

fn a_line_probability(
    ctx: &Ctx,
    m: &ValidatedModel,
    seed: u64,
    replicates: u64,
) -> Result<Verdict> {
    let nu = derive(m).nu;
    let seq = cell_line_sequence(m, 10, 64, (CellType::A, 1))?;
    let worst = seq
        .iter()
        .enumerate()
        .map(|(n, d)| (d.prob_type(CellType::A) - (nu / 2.0).powi(n as i32)).abs())
        .fold(0.0, f64::max);
    let caps = SimCaps::default();
    let hits = count_replicates(replicates, seed, ctx.opts.workers, |rng| {
        Ok(simulate_cell_line(m, 4, rng, Start::default(), caps)
            .last()
            .ty
            == CellType::A)
    })?;
    let p = (nu / 2.0).powi(4);
    let freq = hits as f64 / replicates as f64;
    let sigma = (p * (1.0 - p) / replicates as f64).sqrt();
    let z = (freq - p).abs() / sigma;
    Ok(verdict(
        worst <= 1e-12 && z <= SIGMAS,
        format!(
            "exact max error {worst:e} (n <= 10); MC P(T_4 = A) = {freq} ({z:.2} sigma from {p})"
        ),
        "<= 1e-12; within 3 sigma",
    ))
}

/// M1 tree run to generation 10 shared by the mean and martingale checks.
fn m1_tree_run(ctx: &Ctx, seed: u64) -> Result<std::sync::Arc<crate::mc::McSummary>> {
    ctx.cached_run("m1_tree_10", seed, || {
        let cfg = McConfig::new(BIG_RUN, 10, seed).with_workers(ctx.opts.workers);
        run_mc(&ctx.model("m1")?, &cfg)
    })
}

fn mean_identities(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let m = ctx.model("m1")?;
    let s = m1_tree_run(ctx, seed)?;
    let (mut zw, mut zg) = (0.0f64, 0.0f64);
    for n in 0..=10 {
        zw = zw.max(z_score(&s.mean_w(n)?, 1.0));
        zg = zg.max(z_score(&s.mean_scaled_a_cells(n)?, 1.0));
    }
    let d = derive(&m);
    let paths = crate::mc::map_replicates(BIG_RUN, seed ^ 0xA11E, ctx.opts.workers, |_, rng| {
        simulate_bpre_a(&m, 10, rng, SimCaps::default())
    })?;
    let mut line = vec![Moments::default(); 11];
    for p in paths {
        let p = p?;
        if p.saturated {
            return Err(Error::InvalidArgument("A-line path saturated".into()));
        }
        for (n, &z) in p.z.iter().enumerate() {
            line[n].push(z as f64);
        }
    }
    let mut zl = 0.0f64;
    for (n, mo) in line.iter().enumerate() {
        zl = zl.max(z_score(
            &Estimate::from_moments(mo),
            (d.gamma / d.nu).powi(n as i32),
        ));
    }
    Ok(verdict(
        zw <= SIGMAS && zg <= SIGMAS && zl <= SIGMAS,
        format!(
            "max SE distance over n <= 10: W_n {zw:.2}, nu^-n #G_n(A) {zg:.2}, A-line Z_n vs (gamma/nu)^n {zl:.2}"
        ),
        "each <= 3",
    ))
}

fn extinction_vs_simulation(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let mut freq = Vec::new();
    for name in ["m2", "m1"] {
        let cfg = McConfig::new(BIG_RUN, 30, seed)
            .with_workers(ctx.opts.workers)
            .with_tracking(BTracking::Ignore);
        let s = run_mc(&ctx.model(name)?, &cfg)?;
        freq.push(s.survival_a[30] as f64 / BIG_RUN as f64);
    }
    let m2_extinct = classify(&ctx.model("m2")?).a_parasites_as_extinction;
    let m1_extinct = classify(&ctx.model("m1")?).a_parasites_as_extinction;
    Ok(verdict(
        freq[0] < 0.01 && freq[1] > 0.05 && m2_extinct && !m1_extinct,
        format!(
            "P(Z_30(A) > 0): M2 {} (classified extinct: {m2_extinct}), M1 {} (classified extinct: {m1_extinct})",
            freq[0], freq[1]
        ),
        "M2 < 0.01, M1 > 0.05",
    ))
}

fn gw_fixed_point(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let law = PmfVector::from_dense(&[0.25, 0.0, 0.75], 2);
    let q = gw_extinction_prob(&law, 1e-15)?.q;
    let exact_err = (q - 1.0 / 3.0).abs();
    let m = ctx.model("gw_b")?;
    let same_law = b_sum_offspring(&m).tv_distance(&law) < 1e-15;
    let extinct = count_replicates(BIG_RUN, seed, ctx.opts.workers, |rng| {
        let p = simulate_gw_b(&m, 50, rng, 1, SimCaps::default());
        Ok(!p.saturated && p.last() == 0)
    })?;
    let freq = extinct as f64 / BIG_RUN as f64;
    let sigma = (q * (1.0 - q) / BIG_RUN as f64).sqrt();
    let z = (freq - 1.0 / 3.0).abs() / sigma;
    Ok(verdict(
        exact_err <= 1e-10 && z <= SIGMAS && same_law,
        format!("q = {q} (error {exact_err:e}); MC extinction by n = 50: {freq} ({z:.2} sigma)"),
        "|q - 1/3| <= 1e-10; within 3 sigma of 1/3",
    ))
}

fn phi_minimization(ctx: &Ctx, _: &(), _seed: u64) -> Result<Verdict> {
    let m = ctx.model("m2")?;
    let (theta, phi_min) = minimize_phi(&m, 1e-12)?;
    let phi1 = phi(&m, 1.0)?;
    let d = derive(&m);
    let b = d
        .bpre
        .ok_or_else(|| Error::DegenerateModel("M2 has no A-line environment".into()))?;
    let strong =
        b.e_gprime_log_gprime < 0.0 && classify(&m).bpre_class == BpreClass::SubcriticalStrong;
    Ok(verdict(
        (phi_min - 0.5).abs() <= 1e-8
            && (theta - 1.0).abs() <= 1e-8
            && strong
            && (phi_min - phi1).abs() <= 1e-8,
        format!(
            "theta* = {theta}, phi_min = {phi_min}, phi(1) = {phi1}, E g' log g' = {}",
            b.e_gprime_log_gprime
        ),
        "theta* = 1, phi_min = 0.5 = phi(1) within 1e-8, strongly subcritical",
    ))
}

/// M1 conditioned on `Z_12(A) > 0`, shared by the two decay checks.
fn m1_conditioned_run(ctx: &Ctx, seed: u64) -> Result<std::sync::Arc<crate::mc::McSummary>> {
    ctx.cached_run("m1_survival_a_12", seed, || {
        let cfg = McConfig::new(BIG_RUN, 12, seed)
            .with_workers(ctx.opts.workers)
            .with_condition(Condition::SurvivalAAtN);
        run_mc(&ctx.model("m1")?, &cfg)
    })
}

fn proportion_a_decays(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let s = m1_conditioned_run(ctx, seed)?;
    let (p6, p12) = (s.proportion_a(6)?, s.proportion_a(12)?);
    let gap = (p6.estimate - p12.estimate) / combined_se(&p6, &p12);
    Ok(verdict(
        p12.below(&p6, SIGMAS),
        format!(
            "proportion_A(6) = {:.5}, proportion_A(12) = {:.5}, gap {gap:.1} SE ({} accepted)",
            p6.estimate, p12.estimate, s.accepted
        ),
        "n = 12 below n = 6 by more than 3 SE",
    ))
}

fn fk_a_decays(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let s = m1_conditioned_run(ctx, seed)?;
    let f6 = s.estimate_fk_cumulative(6, 2, CellSet::A)?;
    let f12 = s.estimate_fk_cumulative(12, 2, CellSet::A)?;
    let gap = (f6.estimate - f12.estimate) / combined_se(&f6, &f12);
    Ok(verdict(
        f12.below(&f6, SIGMAS),
        format!(
            "F_1 + F_2 (A): n = 6 {:.5}, n = 12 {:.5}, gap {gap:.1} SE",
            f6.estimate, f12.estimate
        ),
        "n = 12 below n = 6 by more than 3 SE",
    ))
}

fn yaglom_comparison(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let m = ctx.model("m3")?;
    let cfg = McConfig::new(BIG_RUN, 15, seed)
        .with_workers(ctx.opts.workers)
        .with_condition(Condition::SurvivalAAtN);
    let t = yaglom_compare(&m, &cfg, 15, 10)?;
    let proxies = yaglom_proxies_b(&m, 25, 256)?;
    let tv = proxies[19].tv_distance(&proxies[24]);
    let max_diff = t.max_diff();
    Ok(verdict(
        max_diff < 0.05 && tv < 1e-3 && t.in_regime,
        format!(
            "max_k |F_k(15,B) - proxy| = {max_diff:.5} ({} accepted); TV(20, 25) = {tv:e}; in regime: {}",
            t.summary.accepted, t.in_regime
        ),
        "< 0.05; < 1e-3",
    ))
}

fn martingale_directions(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let s = m1_tree_run(ctx, seed)?;
    let mut worst_wb = f64::INFINITY;
    let mut worst_la = f64::INFINITY;
    for n in 0..10 {
        let (a, b) = (s.mean_wb(n)?, s.mean_wb(n + 1)?);
        // slack left for the increase, in combined SE
        worst_wb = worst_wb.min(slack(b.estimate - a.estimate, &a, &b));
        let (a, b) = (s.mean_la(n)?, s.mean_la(n + 1)?);
        worst_la = worst_la.min(slack(a.estimate - b.estimate, &a, &b));
    }
    Ok(verdict(
        worst_wb >= -SIGMAS && worst_la >= -SIGMAS,
        format!("smallest step in SE: WB_n increase {worst_wb:.2}, LA_n decrease {worst_la:.2} (n <= 10)"),
        "each >= -3",
    ))
}

fn slack(step: f64, a: &Estimate, b: &Estimate) -> f64 {
    let se = combined_se(a, b);
    if se == 0.0 {
        if step >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        step / se
    }
}

fn worker_count_determinism(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let m = ctx.model("m1")?;
    let mut outputs = Vec::new();
    for workers in [1, 4, 16] {
        let cfg = McConfig::new(20_000, 10, seed)
            .with_workers(workers)
            .with_condition(Condition::SurvivalAAtN);
        outputs.push(render_mc_csv(m.params(), &run_mc(&m, &cfg)?));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    Ok(verdict(
        same,
        format!(
            "workers 1/4/16: {} bytes each, identical: {same}",
            outputs[0].len()
        ),
        "byte-identical",
    ))
}

fn bundled_classification(ctx: &Ctx, _: &(), _seed: u64) -> Result<Verdict> {
    let r1 = classify(&ctx.model("m1")?);
    let r2 = classify(&ctx.model("m2")?);
    let r3 = classify(&ctx.model("m3")?);
    let pass = r1.bpre_class == BpreClass::Supercritical
        && !r1.la_trivial
        && r1.l_trivial
        && r1.a_line_supercritical
        && r2.a_parasites_as_extinction
        && r3.b_yaglom_regime;
    Ok(verdict(
        pass,
        format!(
            "M1: bpre_class {}, LA_trivial {}, L_trivial {}, A-line supercritical {}; M2: A-parasites die out {}; M3: Yaglom regime {}",
            r1.bpre_class, r1.la_trivial, r1.l_trivial, r1.a_line_supercritical, r2.a_parasites_as_extinction, r3.b_yaglom_regime
        ),
        "supercritical, false, true, true; true; true",
    ))
}

fn model_file_round_trip(ctx: &Ctx, _: &(), _seed: u64) -> Result<Verdict> {
    let mut bad = Vec::new();
    for name in ctx.inputs.models.keys() {
        let p = ctx.model(name)?.params().clone();
        if parse_model_str(name, &to_model_json(&p))? != p {
            bad.push(name.clone());
        }
    }
    Ok(verdict(
        bad.is_empty(),
        format!("{} models, mismatches: {bad:?}", ctx.inputs.models.len()),
        "no mismatches",
    ))
}

fn edge_models(ctx: &Ctx, _: &(), seed: u64) -> Result<Verdict> {
    let det = ctx.model("deterministic_line")?;
    let env = bpre_environment(&det)?;
    let point = exact_bpre_distribution(&env, 5, 8)?.get(1);
    let s = run_mc(&det, &McConfig::new(200, 5, seed))?;
    let f1 = s.estimate_fk(5, 1, CellSet::A)?.estimate;
    let edge = ctx.model("edge_single_a_line")?;
    let d = derive(&edge);
    let seq = cell_line_sequence(&edge, 6, 64, (CellType::A, 1))?;
    let mass = seq
        .iter()
        .map(|x| (x.total() - 1.0).abs())
        .fold(0.0, f64::max);
    let pass = point == 1.0 && f1 == 1.0 && mass < 1e-12 && d.nu == 1.0;
    Ok(verdict(
        pass,
        format!(
            "deterministic line: P(Z_5 = 1) = {point}, F_1(5,A) = {f1}; p_AA = 0 model: nu = {}, cell-line mass error {mass:e}",
            d.nu
        ),
        "1, 1; nu = 1, < 1e-12",
    ))
}

/// `E W_n = 1` and `E nu^-n #G_n(A) = 1` for `n <= 6` on any model.
fn tree_mean_identities(ctx: &Ctx, m: &ValidatedModel, seed: u64) -> Result<Verdict> {
    let cfg = McConfig::new(20_000, 6, seed)
        .with_workers(ctx.opts.workers)
        .with_tracking(BTracking::Ignore);
    let s = run_mc(m, &cfg)?;
    let (mut zw, mut zg) = (0.0f64, 0.0f64);
    for n in 0..=6 {
        zw = zw.max(z_score(&s.mean_w(n)?, 1.0));
        zg = zg.max(z_score(&s.mean_scaled_a_cells(n)?, 1.0));
    }
    Ok(verdict(
        zw <= SIGMAS && zg <= SIGMAS,
        format!(
            "max SE distance over n <= 6: W_n {zw:.2}, nu^-n #G_n(A) {zg:.2} ({} truncated)",
            s.truncated
        ),
        "each <= 3",
    ))
}
