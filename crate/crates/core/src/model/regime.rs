use std::fmt;

use serde::Serialize;

use super::derived::{derive_with_tol, DerivedQuantities, PHI_TOL};
use super::params::{DaughterTypePair as Pair, ValidatedModel};

/// Default distance to a threshold below which a comparison is flagged as
/// numerically marginal.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BpreClass {
    Supercritical,
    Critical,
    SubcriticalStrong,
    SubcriticalIntermediate,
    SubcriticalWeak,
    NotApplicable,
}

impl fmt::Display for BpreClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BpreClass::Supercritical => "supercritical",
            BpreClass::Critical => "critical",
            BpreClass::SubcriticalStrong => "subcritical_strong",
            BpreClass::SubcriticalIntermediate => "subcritical_intermediate",
            BpreClass::SubcriticalWeak => "subcritical_weak",
            BpreClass::NotApplicable => "not_applicable",
        })
    }
}

/// Polynomial order `n^-kappa` in the survival decay of a subcritical A-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa {
    Zero,
    Half,
    ThreeHalves,
    NotApplicable,
}

impl Kappa {
    pub fn value(self) -> Option<f64> {
        match self {
            Kappa::Zero => Some(0.0),
            Kappa::Half => Some(0.5),
            Kappa::ThreeHalves => Some(1.5),
            Kappa::NotApplicable => None,
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("not_applicable"),
        }
    }
}

/// One inequality evaluated during classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: &'static str,
    pub lhs: f64,
    pub op: &'static str,
    pub rhs: f64,
    pub holds: bool,
    /// `|lhs - rhs|` is within the boundary tolerance.
    pub marginal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    /// Contaminated A-cells die out almost surely.
    pub a_parasites_as_extinction: bool,
    /// All parasites die out almost surely.
    pub all_parasites_as_extinction: bool,
    pub bpre_class: BpreClass,
    pub kappa: Kappa,
    /// The limit of `nu^-n #G*_n(A)` is zero almost surely.
    #[serde(rename = "LA_trivial")]
    pub la_trivial: bool,
    /// The limit of `2^-n #G*_n` is zero almost surely.
    #[serde(rename = "L_trivial")]
    pub l_trivial: bool,
    /// `mu_0B mu_1B > 1`: the B-cell line is a supercritical BPRE.
    pub b_line_supercritical: bool,
    /// `supc_product > 1`: the A-cell line is a supercritical BPRE.
    pub a_line_supercritical: bool,
    /// A-line supercritical, `mu_B > gamma` and `B_sslog < 0`: the B-type
    /// proportions have a Yaglom-type limit.
    pub b_yaglom_regime: bool,
    /// Some comparison was within the boundary tolerance.
    pub marginal: bool,
    pub comparisons: Vec<Comparison>,
    pub derived: DerivedQuantities,
}

struct Recorder {
    tol: f64,
    comparisons: Vec<Comparison>,
}

impl Recorder {
    fn cmp(&mut self, name: &'static str, lhs: f64, op: &'static str, rhs: f64) -> bool {
        let holds = match op {
            "<" => lhs < rhs,
            "<=" => lhs <= rhs,
            ">" => lhs > rhs,
            ">=" => lhs >= rhs,
            "==" => lhs == rhs,
            _ => unreachable!("unknown operator {op}"),
        };
        let marginal = if lhs.is_finite() && rhs.is_finite() {
            (lhs - rhs).abs() <= self.tol
        } else {
            false
        };
        self.comparisons.push(Comparison {
            name,
            lhs,
            op,
            rhs,
            holds,
            marginal,
        });
        holds
    }
}

pub fn classify(model: &ValidatedModel) -> RegimeReport {
    classify_with_tol(model, BOUNDARY_TOL)
}

pub fn classify_with_tol(model: &ValidatedModel, tol: f64) -> RegimeReport {
    let d = derive_with_tol(model, PHI_TOL);
    let mut r = Recorder {
        tol,
        comparisons: Vec::new(),
    };

    let nu_le_1 = r.cmp("nu <= 1", d.nu, "<=", 1.0);
    let a_ext = if model.p(Pair::AA) == 0.0 {
        let m = model.mu_a(0, Pair::AB);
        r.cmp("mu_0A(AB) <= 1", m, "<=", 1.0) || r.cmp("nu < 1", d.nu, "<", 1.0)
    } else if nu_le_1 {
        true
    } else {
        match d.bpre {
            Some(b) => {
                let neg = r.cmp("E log g'(1) < 0", b.e_log_gprime, "<", 0.0);
                let small = r.cmp("phi_min <= 1/nu", b.phi_min, "<=", 1.0 / d.nu);
                neg && small
            }
            None => true,
        }
    };
    let mu_b_le_1 = r.cmp("mu_B <= 1", d.mu_b, "<=", 1.0);

    let (bpre_class, kappa) = match d.bpre {
        None => (BpreClass::NotApplicable, Kappa::NotApplicable),
        Some(b) => {
            if b.e_log_gprime == f64::NEG_INFINITY {
                (BpreClass::SubcriticalStrong, Kappa::Zero)
            } else if r.cmp("E log g'(1) > 0", b.e_log_gprime, ">", 0.0) {
                (BpreClass::Supercritical, Kappa::NotApplicable)
            } else if b.e_log_gprime == 0.0 {
                (BpreClass::Critical, Kappa::NotApplicable)
            } else {
                let s = b.e_gprime_log_gprime;
                if r.cmp("E g'(1) log g'(1) < 0", s, "<", 0.0) {
                    (BpreClass::SubcriticalStrong, Kappa::Zero)
                } else if s == 0.0 {
                    (BpreClass::SubcriticalIntermediate, Kappa::Half)
                } else {
                    (BpreClass::SubcriticalWeak, Kappa::ThreeHalves)
                }
            }
        }
    };

    let la_trivial = match d.bpre {
        Some(b) => r.cmp("E log g'(1) <= 0", b.e_log_gprime, "<=", 0.0) || nu_le_1,
        None => true,
    };
    let l_trivial = r.cmp("mu_0B mu_1B <= 1", d.mu_b_product, "<=", 1.0);
    let a_line_supercritical = r.cmp("supc_product > 1", d.supc_product, ">", 1.0);
    let mu_b_gt_gamma = r.cmp("mu_B > gamma", d.mu_b, ">", d.gamma);
    let sslog_neg = r.cmp("B_sslog < 0", d.b_sslog, "<", 0.0);

    let comparisons = r.comparisons;
    RegimeReport {
        a_parasites_as_extinction: a_ext,
        all_parasites_as_extinction: a_ext && mu_b_le_1,
        bpre_class,
        kappa,
        la_trivial,
        l_trivial,
        b_line_supercritical: !l_trivial,
        a_line_supercritical,
        b_yaglom_regime: a_line_supercritical && mu_b_gt_gamma && sslog_neg,
        marginal: comparisons.iter().any(|c| c.marginal),
        comparisons,
        derived: d,
    }
}
