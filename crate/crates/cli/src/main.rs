//! `hpbranch`: command-line front end of the host-parasite branching toolkit.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or parse error.

mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hpbranch_core::bundled;
use hpbranch_core::io::{fmt_f64, read_model_file, CsvTable, RunMetadata};
use hpbranch_core::mc::{
    map_replicates, render_mc_csv, run_mc, Condition, McConfig, DEFAULT_K_TOP,
};
use hpbranch_core::model::{
    bpre_environment, classify, derive, validate_with, CellType, ModelParams, ValidationMode,
};
use hpbranch_core::oracle::{
    exact_bpre_distribution, exact_cell_line_distribution, overflow_warning,
    DEFAULT_OVERFLOW_WARNING,
};
use hpbranch_core::sim::{simulate_cell_line, BTracking, SimCaps, Start, TreeSimulator};
use hpbranch_core::verify::{run_model_checks, run_suite, Budget, VerifyOptions};
use hpbranch_core::ValidatedModel;
use serde_json::{json, Value};

use output::Sink;

#[derive(Parser)]
#[command(
    name = "hpbranch",
    version,
    about = "Host-parasite branching model: classification, simulation, exact laws and Monte Carlo"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Model file (JSON) or bundled model name (m1, m2, m3, gw_b, ...).
    #[arg(long, global = true)]
    model: Option<String>,
    /// Master seed; required by simulate, cell-line and mc.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for replicated runs. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Check only normalization and support, not the standing assumptions.
    #[arg(long, global = true)]
    structural_only: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TypeArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrackingArg {
    Cells,
    ParasiteTotal,
    Ignore,
}

impl From<TrackingArg> for BTracking {
    fn from(t: TrackingArg) -> Self {
        match t {
            TrackingArg::Cells => BTracking::Cells,
            TrackingArg::ParasiteTotal => BTracking::ParasiteTotal,
            TrackingArg::Ignore => BTracking::Ignore,
        }
    }
}

#[derive(Args)]
struct StartArgs {
    /// Type of the ancestor cell.
    #[arg(long, value_enum, default_value_t = TypeArg::A)]
    start_type: TypeArg,
    /// Parasites in the ancestor cell.
    #[arg(long, default_value_t = 1)]
    start_z: u64,
}

impl StartArgs {
    fn start(&self) -> Start {
        let ty = match self.start_type {
            TypeArg::A => CellType::A,
            TypeArg::B => CellType::B,
        };
        Start {
            ty,
            z: self.start_z,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactKind {
    /// Parasites along the A-cell line (random environment process).
    Bpre,
    /// Joint law of type and parasites along a random cell line.
    CellLine,
}

#[derive(Subcommand)]
enum Command {
    /// Derived quantities and regime flags with the inequalities behind them.
    Classify,
    /// Whole-tree trajectories.
    Simulate {
        #[arg(long)]
        generations: u32,
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        #[arg(long, value_enum, default_value_t = TrackingArg::Cells)]
        tracking: TrackingArg,
        #[command(flatten)]
        start: StartArgs,
    },
    /// Random cell-line trajectories.
    CellLine {
        #[arg(long)]
        generations: u32,
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        #[command(flatten)]
        start: StartArgs,
    },
    /// Exact parasite-count law at one generation.
    Exact {
        #[arg(long)]
        generations: u32,
        #[arg(long, value_enum, default_value_t = ExactKind::Bpre)]
        kind: ExactKind,
        /// Largest tracked parasite count; mass above it is reported as overflow.
        #[arg(long, default_value_t = 256)]
        k_max: usize,
    },
    /// Replicated Monte Carlo estimates per generation.
    Mc {
        #[arg(long)]
        replicates: u64,
        #[arg(long)]
        generations: u32,
        /// none, survival_A_at_n or survival_at_n.
        #[arg(long, default_value = "none")]
        condition: String,
        #[arg(long, default_value_t = DEFAULT_K_TOP)]
        k_top: usize,
        #[arg(long, value_enum, default_value_t = TrackingArg::Cells)]
        tracking: TrackingArg,
    },
    /// Self-verification suite; with --model, the model-generic identities.
    Verify {
        #[arg(long, default_value = "full")]
        budget: String,
    },
}

/// Bad input from the user: exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// A verification run that completed with failures: exit code 1.
#[derive(Debug)]
struct ChecksFailed;

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("verification failed")
    }
}

impl std::error::Error for ChecksFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use hpbranch_core::Error as E;
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<hpbranch_core::error::ValidationError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            if matches!(
                e,
                E::Parse { .. } | E::Invalid(_) | E::InvalidArgument(_) | E::Io(_)
            ) {
                return 2;
            }
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.is::<ChecksFailed>() {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Loaded {
    name: String,
    params: ModelParams,
    model: ValidatedModel,
}

fn load_model(g: &Global) -> Result<Loaded> {
    let spec = g
        .model
        .as_deref()
        .ok_or_else(|| usage("--model is required for this command"))?;
    let path = Path::new(spec);
    let (params, bundled_mode) = if path.exists() {
        (read_model_file(path)?, None)
    } else if let Some(b) = bundled::by_name(spec) {
        (b.params(), Some(b.mode))
    } else {
        bail!(usage(format!(
            "'{spec}' is neither a model file nor a bundled model"
        )));
    };
    let mode = if g.structural_only {
        ValidationMode::StructuralOnly
    } else {
        bundled_mode.unwrap_or(ValidationMode::Strict)
    };
    let model = validate_with(&params, mode)?;
    Ok(Loaded {
        name: spec.to_string(),
        params,
        model,
    })
}

fn seed(g: &Global) -> Result<u64> {
    g.seed
        .ok_or_else(|| usage("--seed is required: runs never draw entropy silently"))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if g.workers == 0 {
        bail!(usage("--workers must be at least 1"));
    }
    let sink = Sink::new(g.out.clone(), g.format)?;
    match &cli.command {
        Command::Classify => cmd_classify(g, &sink),
        Command::Simulate {
            generations,
            replicates,
            tracking,
            start,
        } => cmd_simulate(
            g,
            &sink,
            *generations,
            *replicates,
            (*tracking).into(),
            start.start(),
        ),
        Command::CellLine {
            generations,
            replicates,
            start,
        } => cmd_cell_line(g, &sink, *generations, *replicates, start.start()),
        Command::Exact {
            generations,
            kind,
            k_max,
        } => cmd_exact(g, &sink, *generations, *kind, *k_max),
        Command::Mc {
            replicates,
            generations,
            condition,
            k_top,
            tracking,
        } => {
            let condition: Condition = condition.parse()?;
            let cfg = McConfig::new(*replicates, *generations, seed(g)?)
                .with_condition(condition)
                .with_k_top(*k_top)
                .with_tracking((*tracking).into())
                .with_workers(g.workers);
            cmd_mc(g, &sink, &cfg)
        }
        Command::Verify { budget } => cmd_verify(g, &sink, budget.parse()?),
    }
}

/// Flattens a JSON object into `prefix.key: value` lines.
fn flatten(v: &Value, prefix: &str, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(x, &key, out);
            }
        }
        other => {
            let _ = writeln!(out, "  {prefix}: {other}");
        }
    }
}

fn cmd_classify(g: &Global, sink: &Sink) -> Result<()> {
    let m = load_model(g)?;
    let r = classify(&m.model);
    let meta = RunMetadata::new("classify", &m.params, None);
    let mut s = String::new();
    let _ = writeln!(s, "model: {} (params_hash {})", m.name, meta.params_hash);
    let _ = writeln!(s, "bpre_class: {}", r.bpre_class);
    let _ = writeln!(s, "kappa: {}", r.kappa);
    let _ = writeln!(
        s,
        "a_parasites_as_extinction: {}",
        r.a_parasites_as_extinction
    );
    let _ = writeln!(
        s,
        "all_parasites_as_extinction: {}",
        r.all_parasites_as_extinction
    );
    let _ = writeln!(s, "LA_trivial: {}", r.la_trivial);
    let _ = writeln!(s, "L_trivial: {}", r.l_trivial);
    let _ = writeln!(s, "b_line_supercritical: {}", r.b_line_supercritical);
    let _ = writeln!(s, "a_line_supercritical: {}", r.a_line_supercritical);
    let _ = writeln!(s, "b_yaglom_regime: {}", r.b_yaglom_regime);
    let _ = writeln!(s, "marginal: {}", r.marginal);
    s.push_str("derived:\n");
    flatten(&serde_json::to_value(r.derived)?, "", &mut s);
    s.push_str("comparisons:\n");
    for c in &r.comparisons {
        let flag = if c.marginal { " (marginal)" } else { "" };
        let _ = writeln!(
            s,
            "  {}: {} {} {} -> {}{flag}",
            c.name, c.lhs, c.op, c.rhs, c.holds
        );
    }
    let doc = json!({ "metadata": meta, "report": r });
    sink.report("classify", &s, &doc)
}

fn cmd_simulate(
    g: &Global,
    sink: &Sink,
    n_gens: u32,
    reps: u64,
    tracking: BTracking,
    start: Start,
) -> Result<()> {
    let m = load_model(g)?;
    let seed = seed(g)?;
    if reps == 0 {
        bail!(usage("--replicates must be at least 1"));
    }
    let caps = SimCaps::default();
    let sim = TreeSimulator::new(&m.model, caps, tracking, 0);
    let d = derive(&m.model);
    let runs = map_replicates(reps, seed, g.workers, |_, rng| sim.run(start, n_gens, rng))?;

    let mut t = CsvTable::new([
        "replicate",
        "n",
        "G_star_A",
        "G_star_B",
        "clean_A",
        "clean_B",
        "Z_A",
        "Z_B",
        "W_n",
        "LA_n",
        "L_n",
        "truncated_flag",
    ]);
    let opt = |x: Option<String>| x.unwrap_or_default();
    let mut halted = Vec::new();
    for (r, traj) in runs.into_iter().enumerate() {
        let traj = traj?;
        if let Some((n, reason)) = traj.halted {
            halted.push(json!({ "replicate": r, "generation": n, "reason": reason.to_string() }));
        }
        let flag = if traj.halted.is_some() { "1" } else { "0" };
        for s in &traj.summaries {
            let n = s.n as i32;
            let w = if d.gamma > 0.0 {
                fmt_f64(s.z_a as f64 / d.gamma.powi(n))
            } else {
                String::new()
            };
            t.push(vec![
                r.to_string(),
                s.n.to_string(),
                s.g_star_a.to_string(),
                opt(s.g_star_b.map(|x| x.to_string())),
                s.clean_a.to_string(),
                opt(s.clean_b.map(|x| x.to_string())),
                s.z_a.to_string(),
                opt(s.z_b.map(|x| x.to_string())),
                w,
                fmt_f64(s.g_star_a as f64 / d.nu.powi(n)),
                opt(s.g_star().map(|x| fmt_f64(x as f64 / 2f64.powi(n)))),
                flag.to_string(),
            ]);
        }
    }
    let meta = RunMetadata::new("simulate", &m.params, Some(seed)).with_details(json!({
        "model": m.name,
        "generations": n_gens,
        "replicates": reps,
        "start": start,
        "tracking": format!("{tracking:?}"),
        "caps": caps,
        "halted": halted,
    }));
    sink.table("simulate", &t, &meta)
}

fn cmd_cell_line(g: &Global, sink: &Sink, n_gens: u32, reps: u64, start: Start) -> Result<()> {
    let m = load_model(g)?;
    let seed = seed(g)?;
    if reps == 0 {
        bail!(usage("--replicates must be at least 1"));
    }
    let caps = SimCaps::default();
    let runs = map_replicates(reps, seed, g.workers, |_, rng| {
        simulate_cell_line(&m.model, n_gens, rng, start, caps)
    })?;
    let mut t = CsvTable::new(["replicate", "n", "type", "Z", "daughter", "saturated"]);
    for (r, traj) in runs.iter().enumerate() {
        for s in &traj.states {
            let daughter = match s.n {
                0 => String::new(),
                n => traj.path[n as usize - 1].to_string(),
            };
            t.push(vec![
                r.to_string(),
                s.n.to_string(),
                s.ty.to_string(),
                s.z.to_string(),
                daughter,
                u8::from(traj.saturated).to_string(),
            ]);
        }
    }
    let meta = RunMetadata::new("cell-line", &m.params, Some(seed)).with_details(json!({
        "model": m.name,
        "generations": n_gens,
        "replicates": reps,
        "start": start,
        "caps": caps,
    }));
    sink.table("cell_line", &t, &meta)
}

/// Index one past the last nonzero entry (at least one row).
fn trimmed_len(v: &[f64]) -> usize {
    v.iter().rposition(|&p| p != 0.0).map_or(1, |i| i + 1)
}

fn cmd_exact(g: &Global, sink: &Sink, n: u32, kind: ExactKind, k_max: usize) -> Result<()> {
    let m = load_model(g)?;
    let (t, details) = match kind {
        ExactKind::Bpre => {
            let env = bpre_environment(&m.model)?;
            let pmf = exact_bpre_distribution(&env, n, k_max)?;
            let mut t = CsvTable::new(["k", "probability"]);
            for (k, p) in pmf.probs()[..trimmed_len(pmf.probs())].iter().enumerate() {
                t.push(vec![k.to_string(), fmt_f64(*p)]);
            }
            let d = derive(&m.model);
            let details = json!({
                "kind": "bpre",
                "generation": n,
                "k_max": k_max,
                "overflow_mass": pmf.overflow(),
                "bucket_error_bound": pmf.overflow(),
                "mean_tracked": pmf.mean_tracked(),
                "mean_exact": (d.gamma / d.nu).powi(n as i32),
                "warning": overflow_warning(&pmf, DEFAULT_OVERFLOW_WARNING),
            });
            (t, details)
        }
        ExactKind::CellLine => {
            let dist = exact_cell_line_distribution(&m.model, n, k_max)?;
            let len = trimmed_len(&dist.a).max(trimmed_len(&dist.b));
            let mut t = CsvTable::new(["k", "prob_A", "prob_B"]);
            for k in 0..len {
                t.push(vec![k.to_string(), fmt_f64(dist.a[k]), fmt_f64(dist.b[k])]);
            }
            let details = json!({
                "kind": "cell_line",
                "generation": n,
                "k_max": k_max,
                "overflow_mass_A": dist.overflow_a,
                "overflow_mass_B": dist.overflow_b,
                "bucket_error_bound": dist.overflow_a + dist.overflow_b,
                "prob_type_A": dist.prob_type(CellType::A),
            });
            (t, details)
        }
    };
    let details = match details {
        Value::Object(mut o) => {
            o.insert("model".into(), m.name.clone().into());
            Value::Object(o)
        }
        other => other,
    };
    let meta = RunMetadata::new("exact", &m.params, None).with_details(details);
    sink.table("exact", &t, &meta)
}

fn cmd_mc(g: &Global, sink: &Sink, cfg: &McConfig) -> Result<()> {
    let m = load_model(g)?;
    let s = run_mc(&m.model, cfg)?;
    let meta = RunMetadata::new("mc", &m.params, Some(cfg.master_seed)).with_details(json!({
        "model": m.name,
        "replicates": cfg.replicates,
        "generations": cfg.n_gens,
        "condition": cfg.condition,
        "k_top": cfg.k_top,
        "tracking": format!("{:?}", cfg.tracking),
        "caps": cfg.caps,
        "attempted": s.attempted,
        "accepted": s.accepted,
        "rejected": s.rejected,
        "truncated": s.truncated,
    }));
    let table = s.to_csv_table();
    sink.table_csv("mc", &render_mc_csv(&m.params, &s), &table, &meta)
}

fn cmd_verify(g: &Global, sink: &Sink, budget: Budget) -> Result<()> {
    let opts = VerifyOptions {
        budget,
        seed: g.seed.unwrap_or(VerifyOptions::default().seed),
        workers: g.workers,
        ..VerifyOptions::default()
    };
    let report = match &g.model {
        Some(_) => run_model_checks(&load_model(g)?.model, &opts),
        None => run_suite(&opts),
    };
    let doc = json!({ "budget": budget, "seed": opts.seed, "passed": report.passed(), "checks": report.outcomes });
    sink.report("verify", &report.to_text(), &doc)?;
    sink.extra("verify.csv", &report.to_csv_table().to_csv_string(None))?;
    if report.passed() {
        Ok(())
    } else {
        Err(anyhow!(ChecksFailed))
    }
}
