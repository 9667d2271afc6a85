//! Self-verification suite: every exact identity and Monte Carlo check
//! the tool promises, runnable from the command line and from the test
//! suite.
//!
//! Stochastic checks compare against 3 standard errors, a false-failure
//! rate of about 0.3% per comparison, and are retried once with a fresh
//! seed before a failure is reported.

mod checks;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::Serialize;

use crate::bundled;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, parse_model_str, CsvTable};
use crate::mc::McSummary;
use crate::model::{validate_with, ValidatedModel, ValidationMode};

pub use checks::{CheckDef, CHECKS, MODEL_CHECKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Exact checks and cheap simulations only.
    Small,
    Full,
}

impl std::str::FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Budget::Small),
            "full" => Ok(Budget::Full),
            other => Err(Error::InvalidArgument(format!(
                "unknown budget '{other}' (expected small or full)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
    Error,
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skipped",
            CheckStatus::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub status: CheckStatus,
    pub observed: String,
    pub expected: String,
    /// Number of seeds tried (0 for skipped checks).
    pub attempts: u32,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{:>2}] {:<32} {:<7} observed: {} | expected: {} ({:.2} s)",
            self.id, self.name, self.status, self.observed, self.expected, self.seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    /// No check failed or errored (skipped checks are fine).
    pub fn passed(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| matches!(o.status, CheckStatus::Pass | CheckStatus::Skipped))
    }

    pub fn count(&self, status: CheckStatus) -> usize {
        self.outcomes.iter().filter(|o| o.status == status).count()
    }

    pub fn to_text(&self) -> String {
        let mut s: String = self.outcomes.iter().map(|o| o.line() + "\n").collect();
        s.push_str(&format!(
            "{} checks: {} passed, {} failed, {} errors, {} skipped\n",
            self.outcomes.len(),
            self.count(CheckStatus::Pass),
            self.count(CheckStatus::Fail),
            self.count(CheckStatus::Error),
            self.count(CheckStatus::Skipped)
        ));
        s
    }

    pub fn to_csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new([
            "id", "name", "status", "observed", "expected", "attempts", "seconds",
        ]);
        for o in &self.outcomes {
            t.push(vec![
                o.id.to_string(),
                o.name.to_string(),
                o.status.to_string(),
                o.observed.clone(),
                o.expected.clone(),
                o.attempts.to_string(),
                fmt_f64(o.seconds),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub budget: Budget,
    pub seed: u64,
    pub workers: usize,
    /// Fail checks that exceed their runtime limit.
    pub enforce_runtime: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            budget: Budget::Full,
            seed: 20_240_601,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            enforce_runtime: true,
        }
    }
}

/// Model files the suite runs on, by name. Defaults to the bundled set;
/// tests swap entries to exercise error isolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteInputs {
    pub models: BTreeMap<String, (String, ValidationMode)>,
}

impl Default for SuiteInputs {
    fn default() -> Self {
        Self {
            models: bundled::ALL
                .iter()
                .map(|m| (m.name.to_string(), (m.json.to_string(), m.mode)))
                .collect(),
        }
    }
}

/// Outcome of one check on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub observed: String,
    pub expected: String,
}

/// Shared state of one suite run: inputs, options and cached Monte Carlo
/// runs used by more than one check.
pub struct Ctx<'a> {
    pub inputs: &'a SuiteInputs,
    pub opts: &'a VerifyOptions,
    cache: Mutex<HashMap<(&'static str, u64), Arc<McSummary>>>,
}

impl<'a> Ctx<'a> {
    pub fn new(inputs: &'a SuiteInputs, opts: &'a VerifyOptions) -> Self {
        Self {
            inputs,
            opts,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self, name: &str) -> Result<ValidatedModel> {
        let (json, mode) = self.inputs.models.get(name).ok_or_else(|| {
            Error::InvalidArgument(format!("model '{name}' is not among the inputs"))
        })?;
        Ok(validate_with(&parse_model_str(name, json)?, *mode)?)
    }

    /// Summary of a named run for `seed`, computed once.
    pub fn cached_run(
        &self,
        key: &'static str,
        seed: u64,
        run: impl FnOnce() -> Result<McSummary>,
    ) -> Result<Arc<McSummary>> {
        if let Some(s) = self.cache.lock().expect("cache lock").get(&(key, seed)) {
            return Ok(Arc::clone(s));
        }
        let s = Arc::new(run()?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert((key, seed), Arc::clone(&s));
        Ok(s)
    }
}

fn seed_for(base: u64, attempt: u32) -> u64 {
    base.wrapping_add(attempt as u64 * 0x9E37_79B9)
}

fn run_one<T>(def: &CheckDef<T>, target: &T, ctx: &Ctx) -> CheckOutcome {
    let mut out = CheckOutcome {
        id: def.id,
        name: def.name,
        status: CheckStatus::Skipped,
        observed: String::new(),
        expected: String::new(),
        attempts: 0,
        seconds: 0.0,
    };
    if def.heavy && ctx.opts.budget == Budget::Small {
        out.observed = "not run".into();
        out.expected = "budget small".into();
        return out;
    }
    let max_attempts = if def.stochastic { 2 } else { 1 };
    for attempt in 0..max_attempts {
        let seed = seed_for(ctx.opts.seed, attempt);
        let t0 = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(|| (def.run)(ctx, target, seed)));
        out.seconds = t0.elapsed().as_secs_f64();
        out.attempts = attempt + 1;
        match r {
            Ok(Ok(v)) => {
                out.observed = v.observed;
                out.expected = v.expected;
                out.status = if v.pass {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                if ctx.opts.enforce_runtime && out.seconds > def.max_seconds {
                    out.status = CheckStatus::Fail;
                    out.observed = format!("{} [took {:.1} s]", out.observed, out.seconds);
                    out.expected = format!("{} [within {} s]", out.expected, def.max_seconds);
                }
            }
            Ok(Err(e)) => {
                out.status = CheckStatus::Error;
                out.observed = e.to_string();
                out.expected = "no error".into();
            }
            Err(panic) => {
                out.status = CheckStatus::Error;
                out.observed = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                out.expected = "no error".into();
            }
        }
        if out.status != CheckStatus::Fail {
            break;
        }
    }
    out
}

/// Runs the checks with the given ids, in that order, sharing cached runs.
pub fn run_selected(
    ids: &[u32],
    inputs: &SuiteInputs,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let ctx = Ctx::new(inputs, opts);
    let mut outcomes = Vec::with_capacity(ids.len());
    for &id in ids {
        let def = CHECKS
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("no check with id {id}")))?;
        outcomes.push(run_one(def, &(), &ctx));
    }
    Ok(VerifyReport { outcomes })
}

/// Runs the full suite on the bundled models. Individual failures and
/// errors never stop the remaining checks.
pub fn run_suite(opts: &VerifyOptions) -> VerifyReport {
    run_suite_with(&SuiteInputs::default(), opts)
}

pub fn run_suite_with(inputs: &SuiteInputs, opts: &VerifyOptions) -> VerifyReport {
    let ctx = Ctx::new(inputs, opts);
    VerifyReport {
        outcomes: CHECKS.iter().map(|def| run_one(def, &(), &ctx)).collect(),
    }
}

/// Model-independent identities checked on a user-supplied model.
pub fn run_model_checks(model: &ValidatedModel, opts: &VerifyOptions) -> VerifyReport {
    let inputs = SuiteInputs::default();
    let ctx = Ctx::new(&inputs, opts);
    VerifyReport {
        outcomes: MODEL_CHECKS
            .iter()
            .map(|def| run_one(def, model, &ctx))
            .collect(),
    }
}
