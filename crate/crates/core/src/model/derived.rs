//! Closed-form quantities of a validated model and the moment function of
//! the environment of the random A-cell line.

use serde::Serialize;

use super::params::{DaughterTypePair as Pair, ValidatedModel};
use crate::error::{Error, Result};

/// Default tolerance for the golden-section minimization of `phi`.
pub const PHI_TOL: f64 = 1e-10;

/// Quantities that only exist when A-cells can have A-daughters (`nu > 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BpreQuantities {
    /// `E log g'(1)`; may be `-inf` when an environment has mean zero.
    pub e_log_gprime: f64,
    /// `E g'(1) log g'(1)`, with `0 log 0 = 0`.
    pub e_gprime_log_gprime: f64,
    pub theta_star: f64,
    pub phi_min: f64,
    /// `phi(1) = gamma / nu`.
    pub mean_gprime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub nu: f64,
    pub gamma: f64,
    pub gamma_hat: f64,
    pub mu_0b: f64,
    pub mu_1b: f64,
    pub mu_b: f64,
    pub mu_b_product: f64,
    pub supc_product: f64,
    pub beta: f64,
    pub eta: f64,
    pub ab_flux: f64,
    pub b_sslog: f64,
    /// `None` when `nu = 0`.
    pub bpre: Option<BpreQuantities>,
}

/// `w log x` with `0 log 0 = 0` and `w log 0 = -inf` for `w > 0`.
fn weighted_log(w: f64, x: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * x.ln()
    }
}

/// `x log x` with `0 log 0 = 0`.
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Weights and means of the three environments of the A-line BPRE:
/// marginal 0 and 1 of the AA-law (weight `p_AA / nu` each) and marginal 0 of
/// the AB-law (weight `p_AB / nu`).
pub(crate) fn environment_means(model: &ValidatedModel) -> Option<[(f64, f64); 3]> {
    let nu = model.nu();
    if nu <= 0.0 {
        return None;
    }
    let w_aa = model.p(Pair::AA) / nu;
    let w_ab = model.p(Pair::AB) / nu;
    Some([
        (w_aa, model.mu_a(0, Pair::AA)),
        (w_aa, model.mu_a(1, Pair::AA)),
        (w_ab, model.mu_a(0, Pair::AB)),
    ])
}

/// `theta -> E g'(1)^theta` on `[0, 1]`.
pub fn phi(model: &ValidatedModel, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta = {theta} outside [0, 1]"
        )));
    }
    let env = environment_means(model)
        .ok_or_else(|| Error::DegenerateModel("nu = 0: A-cells have no A-daughters".into()))?;
    Ok(phi_from_env(&env, theta))
}

fn phi_from_env(env: &[(f64, f64); 3], theta: f64) -> f64 {
    env.iter().map(|&(w, m)| w * m.powf(theta)).sum()
}

/// Minimizes the convex function `phi` over `[0, 1]` by golden-section
/// search. Returns `(theta_star, phi_min)`.
pub fn minimize_phi(model: &ValidatedModel, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be > 0")));
    }
    let env = environment_means(model)
        .ok_or_else(|| Error::DegenerateModel("nu = 0: A-cells have no A-daughters".into()))?;
    Ok(golden_section(|t| phi_from_env(&env, t), 0.0, 1.0, tol))
}

/// Golden-section search for the minimum of a convex `f` on `[lo, hi]`.
/// The endpoints are compared with the interior estimate, so boundary
/// minimizers are returned exactly.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for x in [lo, hi] {
        let fx = f(x);
        if fx <= best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Every closed-form quantity of the model.
pub fn derive(model: &ValidatedModel) -> DerivedQuantities {
    derive_with_tol(model, PHI_TOL)
}

pub fn derive_with_tol(model: &ValidatedModel, phi_tol: f64) -> DerivedQuantities {
    let [p_aa, p_ab, p_bb] = model.probs();
    let nu = model.nu();
    let m0aa = model.mu_a(0, Pair::AA);
    let m1aa = model.mu_a(1, Pair::AA);
    let m0ab = model.mu_a(0, Pair::AB);
    let m1ab = model.mu_a(1, Pair::AB);
    let m0bb = model.mu_a(0, Pair::BB);
    let m1bb = model.mu_a(1, Pair::BB);
    let mu_0b = model.mu_b(0);
    let mu_1b = model.mu_b(1);

    let gamma = p_aa * (m0aa + m1aa) + p_ab * m0ab;
    let gamma_hat = p_aa * (m0aa * m0aa + m1aa * m1aa) + p_ab * m0ab * m0ab;
    let supc_product = m0aa.powf(p_aa) * m1aa.powf(p_aa) * m0ab.powf(p_ab);

    let ind = |q0: f64| if q0 < 1.0 { 1.0 } else { 0.0 };
    let ab = model.law_a(Pair::AB);
    let bb = model.law_a(Pair::BB);
    let beta = p_ab * ind(ab.prob_zero(1)) + p_bb * (ind(bb.prob_zero(0)) + ind(bb.prob_zero(1)));

    let eta = 0.5 * (p_bb * m0bb + p_ab * m1ab + p_bb * m1bb);

    let bpre = environment_means(model).map(|env| {
        let e_log_gprime = env.iter().map(|&(w, m)| weighted_log(w, m)).sum();
        let e_gprime_log_gprime = env.iter().map(|&(w, m)| w * xlogx(m)).sum();
        let (theta_star, phi_min) = golden_section(|t| phi_from_env(&env, t), 0.0, 1.0, phi_tol);
        BpreQuantities {
            e_log_gprime,
            e_gprime_log_gprime,
            theta_star,
            phi_min,
            mean_gprime: phi_from_env(&env, 1.0),
        }
    });

    DerivedQuantities {
        nu,
        gamma,
        gamma_hat,
        mu_0b,
        mu_1b,
        mu_b: mu_0b + mu_1b,
        mu_b_product: mu_0b * mu_1b,
        supc_product,
        beta,
        eta,
        ab_flux: 2.0 * eta,
        b_sslog: xlogx(mu_0b) + xlogx(mu_1b),
        bpre,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use approx::assert_abs_diff_eq;

    /// Dense grid minimum of `phi`, used as an independent check of the
    /// golden-section search.
    fn grid_min(model: &ValidatedModel) -> (f64, f64) {
        (0..=1000)
            .map(|i| {
                let t = i as f64 / 1000.0;
                (t, phi(model, t).unwrap())
            })
            .fold((0.0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
    }

    #[test]
    fn m1_closed_forms() {
        let d = derive(&bundled::m1());
        assert_eq!(d.nu, 1.25);
        assert_eq!(d.gamma, 1.375);
        assert_eq!(d.mu_b, 2.0);
        assert_eq!(d.mu_b_product, 0.75);
        assert_eq!(d.gamma_hat, 1.5625);
        assert_eq!(d.beta, 0.75);
        // eta = (p_BB * 1 + p_AB * 1 + p_BB * 1) / 2
        assert_eq!(d.eta, 0.375);
        assert_eq!(d.ab_flux, 0.75);
        let b = d.bpre.unwrap();
        assert_abs_diff_eq!(b.e_log_gprime, 0.2 * 1.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.mean_gprime, 1.1, epsilon = 1e-15);
    }

    #[test]
    fn phi_values_on_m1() {
        let m = bundled::m1();
        assert_eq!(phi(&m, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(phi(&m, 1.0).unwrap(), 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(
            phi(&m, 0.5).unwrap(),
            0.8 + 0.2 * 1.5f64.sqrt(),
            epsilon = 1e-15
        );
        // Grid cross-check of the mid value: phi is monotone on M1, so the
        // grid neighbours bracket it.
        let lo = phi(&m, 0.499).unwrap();
        let hi = phi(&m, 0.501).unwrap();
        assert!(lo < 1.04495 && 1.04495 < hi);
        assert!(phi(&m, 1.5).is_err());
    }

    #[test]
    fn minimize_phi_m1_boundary_at_zero() {
        let m = bundled::m1();
        let (t, v) = minimize_phi(&m, PHI_TOL).unwrap();
        let (gt, gv) = grid_min(&m);
        assert_eq!((t, v), (0.0, 1.0));
        assert_eq!((gt, gv), (0.0, 1.0));
    }

    #[test]
    fn minimize_phi_m2_boundary_at_one() {
        let m = bundled::m2();
        let (t, v) = minimize_phi(&m, PHI_TOL).unwrap();
        let (gt, gv) = grid_min(&m);
        assert_abs_diff_eq!(t, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-8);
        assert_eq!(gt, 1.0);
        assert_abs_diff_eq!(gv, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn interior_minimum_against_grid() {
        // Environment means 0.25, 3 and 1.5 put the minimizer inside (0, 1).
        let mut p = bundled::m1_params();
        p.law_a_aa = vec![(0, 0, 0.75), (1, 12, 0.25)];
        let m = crate::model::validate(&p).unwrap();
        let (t, v) = minimize_phi(&m, 1e-10).unwrap();
        let (gt, gv) = grid_min(&m);
        assert!(t > 0.0 && t < 1.0);
        assert!((t - gt).abs() <= 1e-3);
        assert!(v <= gv + 1e-12);
    }

    #[test]
    fn equal_means_give_min_of_one_and_m() {
        for m in [0.5, 1.0, 2.5] {
            let q = m / 4.0;
            let mut p = bundled::m1_params();
            p.law_a_aa = vec![
                (0, 0, (1.0 - q) * (1.0 - q)),
                (0, 4, (1.0 - q) * q),
                (4, 0, q * (1.0 - q)),
                (4, 4, q * q),
            ];
            p.law_a_ab = vec![(0, 1, 1.0 - q), (4, 1, q)];
            let model = crate::model::validate(&p).unwrap();
            let (_, v) = minimize_phi(&model, PHI_TOL).unwrap();
            assert_abs_diff_eq!(v, m.min(1.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_nu_zero() {
        let mut p = bundled::m1_params();
        p.p_aa = 0.0;
        p.p_ab = 0.0;
        p.p_bb = 1.0;
        let m = crate::model::validate(&p).unwrap();
        assert!(matches!(phi(&m, 0.5), Err(Error::DegenerateModel(_))));
        assert!(matches!(
            minimize_phi(&m, 1e-6),
            Err(Error::DegenerateModel(_))
        ));
        assert!(derive(&m).bpre.is_none());
    }

    #[test]
    fn log_of_zero_mean_is_minus_infinity() {
        let mut p = bundled::m1_params();
        p.law_a_ab = vec![(0, 1, 1.0)];
        let m = crate::model::validate(&p).unwrap();
        let b = derive(&m).bpre.unwrap();
        assert_eq!(b.e_log_gprime, f64::NEG_INFINITY);
        assert!(b.e_gprime_log_gprime.is_finite());
    }

    #[test]
    fn beta_is_the_limit_of_contaminated_b_daughters() {
        let m = bundled::m1();
        let d = derive(&m);
        let mut prev = 0.0;
        for z in 1..=50 {
            let e = m.expected_contaminated_b_daughters(z);
            assert!(e >= prev);
            assert!(e <= d.beta + 1e-15);
            prev = e;
        }
        assert_abs_diff_eq!(prev, d.beta, epsilon = 1e-12);
    }
}
