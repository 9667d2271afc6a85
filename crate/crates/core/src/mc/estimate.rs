use serde::Serialize;

use super::accum::{CellSet, Moments, RatioSums};
use super::run::{run_mc, McConfig, McSummary};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, CsvTable, RunMetadata};
use crate::model::{classify, ModelParams, ValidatedModel};
use crate::oracle::yaglom_proxy_b;

/// Fewest values behind an estimate for which a confidence interval is
/// reported.
pub const MIN_CI_REPLICATES: u64 = 1000;

const Z95: f64 = 1.959_963_984_540_054;

/// Point estimate with its standard error and the number of replicates
/// behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
    pub count: u64,
}

impl Estimate {
    pub fn from_moments(m: &Moments) -> Self {
        Self {
            estimate: m.mean(),
            se: m.std_error(),
            count: m.count,
        }
    }

    fn from_ratio(r: &RatioSums, what: &str, n: u32) -> Result<Self> {
        let (estimate, se) = r.ratio().ok_or_else(|| Error::NoContaminatedCells {
            what: what.to_string(),
            n,
        })?;
        Ok(Self {
            estimate,
            se,
            count: r.count,
        })
    }

    /// Binomial proportion `hits / total`.
    pub fn proportion(hits: u64, total: u64) -> Self {
        let p = hits as f64 / total as f64;
        Self {
            estimate: p,
            se: (p * (1.0 - p) / total as f64).sqrt(),
            count: total,
        }
    }

    /// Normal-approximation 95% interval, only with enough replicates.
    pub fn ci(&self) -> Option<(f64, f64)> {
        (self.count >= MIN_CI_REPLICATES && self.se.is_finite())
            .then_some((self.estimate - Z95 * self.se, self.estimate + Z95 * self.se))
    }

    /// `self < other` by more than `sigmas` combined standard errors.
    pub fn below(&self, other: &Estimate, sigmas: f64) -> bool {
        let se = (self.se * self.se + other.se * other.se).sqrt();
        other.estimate - self.estimate > sigmas * se
    }

    /// `|self - target| <= sigmas * se`.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.estimate - target).abs() <= sigmas * self.se
    }
}

impl McSummary {
    fn moments(
        &self,
        n: u32,
        pick: impl Fn(&super::GenerationAccumulator) -> &Moments,
    ) -> Result<Estimate> {
        Ok(Estimate::from_moments(pick(self.generation(n)?)))
    }

    /// Mean of `Z_n(A)`.
    pub fn mean_z_a(&self, n: u32) -> Result<Estimate> {
        self.moments(n, |g| &g.z_a)
    }

    /// Mean of `W_n = gamma^-n Z_n(A)`.
    pub fn mean_w(&self, n: u32) -> Result<Estimate> {
        self.moments(n, |g| &g.w)
    }

    /// Mean of `LA_n = nu^-n #G*_n(A)`.
    pub fn mean_la(&self, n: u32) -> Result<Estimate> {
        self.moments(n, |g| &g.la)
    }

    /// Mean of `nu^-n #G_n(A)`, all A-cells.
    pub fn mean_scaled_a_cells(&self, n: u32) -> Result<Estimate> {
        let g = self.generation(n)?;
        let s = self.scales.nu.powi(n as i32);
        let m = Estimate::from_moments(&g.a_cells);
        Ok(Estimate {
            estimate: m.estimate / s,
            se: m.se / s,
            count: m.count,
        })
    }

    /// Mean of `L_n = 2^-n #G*_n`; needs B-cells tracked.
    pub fn mean_l(&self, n: u32) -> Result<Estimate> {
        self.tracked(n, |g| &g.l, "L_n")
    }

    /// Mean of `WB_n = mu_B^-n Z_n(B)`; needs B-parasites followed.
    pub fn mean_wb(&self, n: u32) -> Result<Estimate> {
        self.tracked(n, |g| &g.wb, "WB_n")
    }

    fn tracked(
        &self,
        n: u32,
        pick: impl Fn(&super::GenerationAccumulator) -> &Moments,
        what: &str,
    ) -> Result<Estimate> {
        let g = self.generation(n)?;
        let m = pick(g);
        if m.count == 0 && g.z_a.count > 0 {
            return Err(Error::InvalidArgument(format!(
                "{what} is not available with B-tracking {:?}",
                self.config.tracking
            )));
        }
        Ok(Estimate::from_moments(m))
    }

    /// `F_k(n, t)`: share of contaminated cells of set `t` holding exactly
    /// `k` parasites, as a ratio of sums over replicates.
    pub fn estimate_fk(&self, n: u32, k: usize, set: CellSet) -> Result<Estimate> {
        let r = self.fk_sums(n, k, set, false)?;
        Estimate::from_ratio(&r, set.label(), n)
    }

    /// `F_1(n, t) + ... + F_k(n, t)`.
    pub fn estimate_fk_cumulative(&self, n: u32, k: usize, set: CellSet) -> Result<Estimate> {
        let r = self.fk_sums(n, k, set, true)?;
        Estimate::from_ratio(&r, set.label(), n)
    }

    fn fk_sums(&self, n: u32, k: usize, set: CellSet, cumulative: bool) -> Result<RatioSums> {
        let g = self.generation(n)?;
        if k == 0 || k > self.config.k_top {
            return Err(Error::InvalidArgument(format!(
                "k = {k} outside 1..={}",
                self.config.k_top
            )));
        }
        let v = if cumulative {
            g.fk_cumulative(set)
        } else {
            g.fk(set)
        };
        if v[k - 1].count == 0 && set != CellSet::A {
            return Err(Error::InvalidArgument(format!(
                "F_k for {} cells needs B-cells tracked",
                set.label()
            )));
        }
        Ok(v[k - 1])
    }

    /// Per-replicate `#G*_n(A) / #G*_n` averaged over replicates with at
    /// least one contaminated cell.
    pub fn proportion_a(&self, n: u32) -> Result<Estimate> {
        let g = self.generation(n)?;
        if g.prop_a.count == 0 {
            return Err(Error::NoContaminatedCells {
                what: "contaminated".into(),
                n,
            });
        }
        Ok(Estimate::from_moments(&g.prop_a))
    }

    /// Long-format table: `generation, statistic, k, estimate, ci_lo, ci_hi`.
    /// `k` is empty for statistics without one; CI cells are empty when no
    /// interval is reported.
    pub fn to_csv_table(&self) -> CsvTable {
        let mut t = CsvTable::new(["generation", "statistic", "k", "estimate", "ci_lo", "ci_hi"]);
        let mut row = |n: usize, stat: &str, k: Option<usize>, e: Estimate| {
            let (lo, hi) = e
                .ci()
                .map(|(l, h)| (fmt_f64(l), fmt_f64(h)))
                .unwrap_or_default();
            t.push(vec![
                n.to_string(),
                stat.to_string(),
                k.map(|k| k.to_string()).unwrap_or_default(),
                fmt_f64(e.estimate),
                lo,
                hi,
            ]);
        };
        for (n, g) in self.generations.iter().enumerate() {
            let mut moment = |name: &str, m: &Moments| {
                if m.count > 0 {
                    let e = Estimate::from_moments(m);
                    row(n, &format!("mean_{name}"), None, e);
                    let var = Estimate {
                        estimate: m.variance(),
                        se: f64::NAN,
                        count: m.count,
                    };
                    row(n, &format!("var_{name}"), None, var);
                }
            };
            moment("Z_A", &g.z_a);
            moment("Z_B", &g.z_b);
            moment("G_star_A", &g.g_star_a);
            moment("G_star_B", &g.g_star_b);
            moment("G_A", &g.a_cells);
            moment("W", &g.w);
            moment("LA", &g.la);
            moment("L", &g.l);
            moment("WB", &g.wb);
            if g.prop_a.count > 0 {
                row(n, "proportion_A", None, Estimate::from_moments(&g.prop_a));
            }
            for set in CellSet::ALL {
                for (j, r) in g.fk(set).iter().enumerate() {
                    if let Some((estimate, se)) = r.ratio() {
                        let e = Estimate {
                            estimate,
                            se,
                            count: r.count,
                        };
                        row(n, &format!("F_k_{}", set.label()), Some(j + 1), e);
                    }
                }
            }
        }
        for p in survival_curves(self) {
            row(p.n as usize, "survival_A", None, p.survival_a);
            if let Some(s) = p.survival_all {
                row(p.n as usize, "survival_all", None, s);
            }
        }
        row(
            self.config.n_gens as usize,
            "rejection_rate",
            None,
            Estimate::proportion(self.rejected, self.attempted - self.truncated),
        );
        row(
            self.config.n_gens as usize,
            "truncated_fraction",
            None,
            Estimate::proportion(self.truncated, self.attempted),
        );
        t
    }
}

/// CSV text of a run as written by the `mc` command: a metadata comment
/// line, then the long-format table.
pub fn render_mc_csv(params: &ModelParams, summary: &McSummary) -> String {
    let meta = RunMetadata::new("mc", params, Some(summary.config.master_seed));
    summary
        .to_csv_table()
        .to_csv_string(Some(&meta.comment_line()))
}

/// Survival frequencies at one generation, over attempted replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalPoint {
    pub n: u32,
    /// Frequency of `Z_n(A) > 0`.
    pub survival_a: Estimate,
    /// Frequency of any followed parasite being left.
    pub survival_all: Option<Estimate>,
}

/// Per-generation survival frequencies of a finished run.
pub fn survival_curves(summary: &McSummary) -> Vec<SurvivalPoint> {
    let total = summary.attempted;
    (0..summary.survival_a.len())
        .map(|n| SurvivalPoint {
            n: n as u32,
            survival_a: Estimate::proportion(summary.survival_a[n], total),
            survival_all: summary
                .survival_all
                .as_ref()
                .map(|s| Estimate::proportion(s[n], total)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YaglomRow {
    pub k: usize,
    pub mc: Estimate,
    pub proxy: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YaglomTable {
    pub n: u32,
    pub rows: Vec<YaglomRow>,
    /// The model satisfies the hypotheses of the B-line Yaglom limit.
    pub in_regime: bool,
    pub summary: McSummary,
}

impl YaglomTable {
    pub fn max_diff(&self) -> f64 {
        self.rows.iter().map(|r| r.diff).fold(0.0, f64::max)
    }
}

/// Runs `cfg` up to generation `n` and sets `F_k(n, B)`, `k = 1..=k_top`,
/// against the exact conditional law of the B-line count at `n`.
pub fn yaglom_compare(
    model: &ValidatedModel,
    cfg: &McConfig,
    n: u32,
    k_top: usize,
) -> Result<YaglomTable> {
    let mut cfg = cfg.clone();
    cfg.n_gens = n;
    cfg.k_top = k_top;
    cfg.tracking = crate::sim::BTracking::Cells;
    let summary = run_mc(model, &cfg)?;
    let proxy = yaglom_proxy_b(model, n, k_top.max(64))?;
    let mut rows = Vec::with_capacity(k_top);
    for k in 1..=k_top {
        let mc = summary.estimate_fk(n, k, CellSet::B)?;
        let p = proxy.get(k);
        rows.push(YaglomRow {
            k,
            mc,
            proxy: p,
            diff: (mc.estimate - p).abs(),
        });
    }
    Ok(YaglomTable {
        n,
        rows,
        in_regime: classify(model).b_yaglom_regime,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::sim::BTracking;

    #[test]
    fn ci_needs_enough_replicates() {
        let small = Estimate {
            estimate: 1.0,
            se: 0.1,
            count: 999,
        };
        assert!(small.ci().is_none());
        let (lo, hi) = Estimate {
            count: 1000,
            ..small
        }
        .ci()
        .unwrap();
        assert!(lo < 1.0 && hi > 1.0);
    }

    #[test]
    fn unit_b_law_gives_point_mass_on_both_sides() {
        let cfg = McConfig::new(200, 6, 2);
        let t = yaglom_compare(&bundled::deterministic_line(), &cfg, 6, 3);
        // the deterministic line never makes a B-cell
        assert!(matches!(t, Err(Error::NoContaminatedCells { .. })));
        let mut cfg = McConfig::new(200, 6, 2);
        cfg.start = crate::sim::Start {
            ty: crate::model::CellType::B,
            z: 1,
        };
        let t = yaglom_compare(&bundled::deterministic_line(), &cfg, 6, 3).unwrap();
        assert_eq!(t.rows[0].mc.estimate, 1.0);
        assert_eq!(t.rows[0].proxy, 1.0);
        assert!(t.rows.iter().all(|r| (0.0..=1.0).contains(&r.diff)));
    }

    #[test]
    fn fk_sums_to_at_most_one() {
        let s = run_mc(&bundled::m1(), &McConfig::new(500, 8, 4)).unwrap();
        for set in CellSet::ALL {
            let total: f64 = (1..=10)
                .map(|k| s.estimate_fk(8, k, set).unwrap().estimate)
                .sum();
            assert!(total <= 1.0 + 1e-12);
            let cum = s.estimate_fk_cumulative(8, 10, set).unwrap().estimate;
            assert!((cum - total).abs() < 1e-12);
        }
    }

    #[test]
    fn b_statistics_need_b_cells() {
        let cfg = McConfig::new(100, 4, 4).with_tracking(BTracking::Ignore);
        let s = run_mc(&bundled::m1(), &cfg).unwrap();
        assert!(s.estimate_fk(4, 1, CellSet::B).is_err());
        assert!(s.mean_wb(4).is_err());
        assert!(s.estimate_fk(4, 1, CellSet::A).is_ok());
    }

    #[test]
    fn csv_is_long_format() {
        let s = run_mc(&bundled::m1(), &McConfig::new(1200, 3, 4)).unwrap();
        let text = s.to_csv_table().to_csv_string(None);
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("generation,statistic,k,estimate,ci_lo,ci_hi")
        );
        assert!(text.contains("\n0,mean_W,,1,1,1\n"));
        assert!(text.lines().any(|l| l.starts_with("3,F_k_A,1,")));
        assert!(text.lines().any(|l| l.starts_with("3,survival_all,,")));
    }
}
