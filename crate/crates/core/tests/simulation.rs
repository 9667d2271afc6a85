//! Statistical agreement between the simulators and the exact oracles.
//! Each check allows 3 standard errors and gets one retry with a fresh
//! seed, the same protocol as the verification suite.

use hpbranch_core::bundled;
use hpbranch_core::mc::Moments;
use hpbranch_core::model::{bpre_environment, derive, CellType};
use hpbranch_core::oracle::{brute_force_tree, exact_bpre_distribution};
use hpbranch_core::sim::{
    replicate_rng, simulate_bpre_a, simulate_bpre_b, BTracking, SimCaps, Start, TreeSimulator,
};

const SIGMAS: f64 = 3.0;

fn with_retry(name: &str, check: impl Fn(u64) -> Result<(), String>) {
    let first = match check(1) {
        Ok(()) => return,
        Err(e) => e,
    };
    if let Err(second) = check(2) {
        panic!("{name} failed twice:\n  {first}\n  {second}");
    }
}

/// Per generation and `k`, moments of the number of A-cells with `k`
/// parasites (`k = 0` counts clean A-cells).
fn tree_counts(seed: u64, reps: u64, n_gens: u32, k_top: usize) -> Vec<Vec<Moments>> {
    let m = bundled::m1();
    let sim = TreeSimulator::new(&m, SimCaps::default(), BTracking::Ignore, k_top);
    let mut out = vec![vec![Moments::default(); k_top + 1]; n_gens as usize + 1];
    for r in 0..reps {
        let t = sim
            .run(Start::default(), n_gens, &mut replicate_rng(seed, r))
            .unwrap();
        assert!(t.halted.is_none());
        for s in &t.summaries {
            let row = &mut out[s.n as usize];
            row[0].push(s.clean_a as f64);
            for (k, &c) in s.count_a_by_k.iter().enumerate() {
                row[k + 1].push(c as f64);
            }
        }
    }
    out
}

#[test]
fn tree_counts_match_brute_force() {
    let m = bundled::m1();
    let exact: Vec<_> = (0..=3).map(|n| brute_force_tree(&m, n).unwrap()).collect();
    with_retry("tree vs brute force", |seed| {
        let counts = tree_counts(seed, 20_000, 3, 8);
        for n in 1..=3u32 {
            for k in 0..=8u64 {
                let mo = &counts[n as usize][k as usize];
                let target = exact[n as usize].expected_a_cells_with(n, k);
                let d = (mo.mean() - target).abs();
                if d > SIGMAS * mo.std_error() && d > 0.0 {
                    return Err(format!("n={n} k={k}: {} vs exact {target}", mo.mean()));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn many_to_one_identity_holds_statistically() {
    let m = bundled::m1();
    let nu = derive(&m).nu;
    let reps = 20_000u64;
    with_retry("many-to-one", |seed| {
        let counts = tree_counts(seed, reps, 6, 8);
        let mut freq = vec![vec![0u64; 9]; 7];
        for r in 0..reps {
            let p = simulate_bpre_a(
                &m,
                6,
                &mut replicate_rng(seed ^ 0x5EED, r),
                SimCaps::default(),
            )
            .unwrap();
            for (n, &z) in p.z.iter().enumerate() {
                if z <= 8 {
                    freq[n][z as usize] += 1;
                }
            }
        }
        for n in 0..=6usize {
            let scale = nu.powi(n as i32);
            for k in 0..=8usize {
                let p = freq[n][k] as f64 / reps as f64;
                let line = scale * p;
                let line_se = scale * (p * (1.0 - p) / reps as f64).sqrt();
                let mo = &counts[n][k];
                let se = (line_se * line_se + mo.variance() / reps as f64).sqrt();
                let d = (line - mo.mean()).abs();
                if d > SIGMAS * se && d > 0.0 {
                    return Err(format!(
                        "n={n} k={k}: nu^n P = {line}, tree mean {}",
                        mo.mean()
                    ));
                }
            }
        }
        Ok(())
    });
}

#[test]
fn a_line_pmf_matches_exact_law() {
    let m = bundled::m1();
    let exact = exact_bpre_distribution(&bpre_environment(&m).unwrap(), 4, 64).unwrap();
    let reps = 50_000u64;
    with_retry("A-line pmf", |seed| {
        let mut hist = vec![0u64; 65];
        for r in 0..reps {
            let z = simulate_bpre_a(&m, 4, &mut replicate_rng(seed, r), SimCaps::default())
                .unwrap()
                .last();
            hist[(z as usize).min(64)] += 1;
        }
        for (k, &h) in hist.iter().enumerate().take(20) {
            let p = exact.get(k);
            let f = h as f64 / reps as f64;
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            if (f - p).abs() > SIGMAS * se && (f - p).abs() > 0.0 {
                return Err(format!("k={k}: {f} vs {p}"));
            }
        }
        Ok(())
    });
}

#[test]
fn b_started_line_mean_stays_bounded() {
    // For the B-line started from one parasite, (mu_B/2)^-n Z_[n] has mean
    // one, below the geometric bound sum_m (gamma/mu_B)^m when mu_B > gamma.
    let m = bundled::m3();
    let d = derive(&m);
    assert!(d.mu_b > d.gamma);
    let bound = 1.0 / (1.0 - d.gamma / d.mu_b);
    let reps = 50_000u64;
    with_retry("B-line mean", |seed| {
        let mut mo = vec![Moments::default(); 21];
        for r in 0..reps {
            let p = simulate_bpre_b(&m, 20, &mut replicate_rng(seed, r), 1, SimCaps::default());
            for (n, &z) in p.z.iter().enumerate() {
                mo[n].push(z as f64 / (d.mu_b / 2.0).powi(n as i32));
            }
        }
        for (n, x) in mo.iter().enumerate() {
            if x.mean() > bound
                || (x.mean() - 1.0).abs() > SIGMAS * x.std_error().max(1e-300) && n > 0
            {
                return Err(format!("n={n}: mean {} (bound {bound})", x.mean()));
            }
        }
        Ok(())
    });
}

#[test]
fn contaminated_b_cells_need_b_tracking() {
    let m = bundled::m1();
    let sim = TreeSimulator::new(&m, SimCaps::default(), BTracking::Ignore, 4);
    let t = sim
        .run(
            Start {
                ty: CellType::B,
                z: 5,
            },
            3,
            &mut replicate_rng(0, 0),
        )
        .unwrap();
    assert!(t
        .summaries
        .iter()
        .all(|s| s.g_star_b.is_none() && s.z_b.is_none()));
}
