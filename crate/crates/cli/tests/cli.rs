use std::fs;
use std::process::{Command, Output};

use hpbranch_core::bundled;
use hpbranch_core::io::{parse_model_str, to_model_json};

fn hpbranch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpbranch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// CSV body without the leading comment line.
fn csv_rows(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn classify_reports_regimes() {
    let o = hpbranch(&["classify", "--model", "m1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("bpre_class: supercritical"), "{s}");
    assert!(s.contains("L_trivial: true"), "{s}");
    assert!(s.contains("nu <= 1: 1.25 <= 1 -> false"), "{s}");

    let s = stdout(&hpbranch(&["classify", "--model", "m2"]));
    assert!(s.contains("a_parasites_as_extinction: true"), "{s}");
}

#[test]
fn classify_json_carries_the_report() {
    let o = hpbranch(&["classify", "--model", "m3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["b_yaglom_regime"], true);
    assert_eq!(v["metadata"]["params_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn malformed_pmf_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = bundled::m1_params();
    p.law_a_aa[0].2 -= 0.1;
    let path = dir.path().join("bad.json");
    fs::write(&path, to_model_json(&p)).unwrap();
    let o = hpbranch(&["classify", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(
        e.contains("NormalizationError") && e.contains("law_A_AA"),
        "{e}"
    );
}

#[test]
fn syntax_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\n  \"p_AA\": 0.5,\n  oops\n}\n").unwrap();
    let o = hpbranch(&["classify", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hpbranch(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        hpbranch(&["classify", "--model", "no_such_model"])
            .status
            .code(),
        Some(2)
    );
    // no silent entropy
    let o = hpbranch(&["simulate", "--model", "m1", "--generations", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
    let o = hpbranch(&[
        "mc",
        "--model",
        "m1",
        "--seed",
        "1",
        "--replicates",
        "10",
        "--generations",
        "2",
        "--condition",
        "sometimes",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_one_step_law() {
    let o = hpbranch(&["exact", "--model", "m1", "--generations", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("# hpbranch "), "{s}");
    let rows = csv_rows(&s);
    assert_eq!(rows[0], "k,probability");
    let parsed: Vec<(usize, f64)> = rows[1..]
        .iter()
        .map(|r| {
            let (k, p) = r.split_once(',').unwrap();
            (k.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    let want = [(0, 0.25), (1, 0.4), (2, 0.35)];
    assert_eq!(parsed.len(), want.len());
    for ((k, p), (wk, wp)) in parsed.iter().zip(want) {
        assert_eq!(*k, wk);
        assert!((p - wp).abs() < 1e-12);
    }
    let meta: serde_json::Value = serde_json::from_str(&stderr(&o)).unwrap();
    assert_eq!(meta["details"]["overflow_mass"], 0.0);
}

#[test]
fn exact_writes_files_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let o = hpbranch(&[
        "exact",
        "--model",
        "m1",
        "--generations",
        "3",
        "--kind",
        "cell-line",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("exact.csv")).unwrap();
    assert!(csv.contains("k,prob_A,prob_B"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("exact.json")).unwrap()).unwrap();
    assert!((meta["details"]["prob_type_A"].as_f64().unwrap() - 0.244140625).abs() < 1e-12);
}

#[test]
fn simulate_zero_generations_is_the_initial_state() {
    let o = hpbranch(&[
        "simulate",
        "--model",
        "m1",
        "--seed",
        "7",
        "--generations",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(
        rows,
        [
            "replicate,n,G_star_A,G_star_B,clean_A,clean_B,Z_A,Z_B,W_n,LA_n,L_n,truncated_flag",
            "0,0,1,0,0,0,1,0,1,1,1,0"
        ]
    );
}

#[test]
fn simulate_conserves_cells() {
    let o = hpbranch(&[
        "simulate",
        "--model",
        "m1",
        "--seed",
        "3",
        "--generations",
        "6",
        "--replicates",
        "5",
    ]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1 + 5 * 7);
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        let n: u32 = f[1].parse().unwrap();
        let total: u128 = [2, 3, 4, 5]
            .iter()
            .map(|&i| f[i].parse::<u128>().unwrap())
            .sum();
        assert_eq!(total, 1u128 << n, "{r}");
    }
}

#[test]
fn cell_line_json_output() {
    let o = hpbranch(&[
        "cell-line",
        "--model",
        "m1",
        "--seed",
        "2",
        "--generations",
        "5",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["type"], "A");
    assert_eq!(rows[0]["Z"], 1);
    assert_eq!(v["metadata"]["seed"], 2);
}

#[test]
fn mc_output_is_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = hpbranch(&[
            "mc",
            "--model",
            "m1",
            "--seed",
            "11",
            "--replicates",
            "1500",
            "--generations",
            "6",
            "--condition",
            "survival_A_at_n",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(out.join("mc.csv")).unwrap()
    };
    let base = run("1", "w1");
    assert_eq!(base, run("1", "w1_again"));
    assert_eq!(base, run("4", "w4"));
    assert_eq!(base, run("16", "w16"));
    let text = String::from_utf8(base).unwrap();
    assert!(text.contains("generation,statistic,k,estimate,ci_lo,ci_hi"));
    assert!(text.contains(",F_k_A,1,"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("w1/mc.json")).unwrap()).unwrap();
    assert_eq!(meta["details"]["attempted"], 1500);
}

#[test]
fn verify_small_budget() {
    let o = hpbranch(&["verify", "--budget", "small", "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.lines().filter(|l| l.starts_with('[')).count() >= 12);
    assert!(s.contains("skipped"));
}

#[test]
fn verify_model_checks_on_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m1.json");
    fs::write(&path, to_model_json(&bundled::m1_params())).unwrap();
    let o = hpbranch(&[
        "verify",
        "--budget",
        "small",
        "--model",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn written_model_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for b in bundled::ALL {
        let path = dir.path().join(format!("{}.json", b.name));
        fs::write(&path, to_model_json(&b.params())).unwrap();
        let back = parse_model_str(b.name, &fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, b.params());
        // the CLI reads it back to the same parameters hash
        let o = hpbranch(&[
            "classify",
            "--model",
            path.to_str().unwrap(),
            "--format",
            "json",
            "--structural-only",
        ]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(
            v["metadata"]["params_hash"],
            hpbranch_core::io::params_hash(&b.params())
        );
    }
}
