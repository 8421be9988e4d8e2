//! Persistence and timing premia, their local expansions, and the
//! present-certainty-equivalent measure of correlation aversion.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lottery::{build_parametric, Distribution, Parametric, TemporalLottery};
use crate::quadrature::{integrate, DEFAULT_TOL};
use crate::risk::{classify, continuation_value, kp_evaluate, Felicity, Grid, KpModel, RiskAdjustment};
use crate::roots::bisect;

/// Upper end of the premium bracket; π = 1 would zero out consumption.
pub const PI_MAX: f64 = 1.0 - 1e-12;
/// Width at which the premium bisection stops.
pub const PI_TOL: f64 = 1e-13;
const PI_ITER: usize = 400;

/// Contributions of a local expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxTerms {
    pub level: f64,
    pub slope: f64,
    pub curvature: f64,
    /// Named constants entering the expansion.
    pub constants: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumReport {
    pub epsilon: f64,
    pub exact_pi: f64,
    pub approx_pi: Option<f64>,
    pub terms: Option<ApproxTerms>,
    pub gap: Option<f64>,
    pub warnings: Vec<String>,
}

impl PremiumReport {
    fn exact(epsilon: f64, exact_pi: f64, warnings: Vec<String>) -> Self {
        Self { epsilon, exact_pi, approx_pi: None, terms: None, gap: None, warnings }
    }

    fn with_approx(mut self, terms: ApproxTerms) -> Self {
        let approx = terms.level + terms.slope + terms.curvature;
        self.approx_pi = Some(approx);
        self.gap = Some(self.exact_pi - approx);
        self.terms = Some(terms);
        self
    }
}

fn warnings(model: &KpModel, need_irra: bool) -> Vec<String> {
    let c = classify(&model.phi, model.beta, &Grid::default());
    let mut w = Vec::new();
    if !c.concave {
        w.push("risk adjustment is not concave".to_string());
    }
    if !c.upi {
        w.push("no uniform preference for information on the grid".to_string());
    }
    if need_irra && !c.irra {
        w.push("relative risk aversion decreases somewhere on the grid".to_string());
    }
    w
}

fn ordered(x: f64, y: f64) -> Result<()> {
    if x > y && y > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(format!("need x > y > 0, got x = {x}, y = {y}")))
    }
}

/// Solves V(lottery(π)) = target for π in [0, PI_MAX], V decreasing in π.
fn solve_pi<F: Fn(f64) -> Result<TemporalLottery>>(model: &KpModel, target: f64, lottery: F) -> Result<f64> {
    let h = |pi: f64| -> Result<f64> { Ok(kp_evaluate(model, &lottery(pi)?)? - target) };
    let h0 = h(0.0)?;
    if h0 <= 0.0 {
        if h0.abs() <= 1e-12 * target.abs().max(1.0) {
            return Ok(0.0);
        }
        return Err(Error::NoRoot(format!("target utility {target} exceeds the undiscounted lottery by {:e}", -h0)));
    }
    bisect(h, 0.0, PI_MAX, PI_TOL, PI_ITER)
}

/// π(ε) solving V(d^corr(ε)) = V(d^iid(π)).
pub fn persistence_premium(model: &KpModel, c0: f64, x: f64, y: f64, eps: f64) -> Result<PremiumReport> {
    ordered(x, y)?;
    let target = kp_evaluate(model, &build_parametric(&Parametric::Corr { eps, c0, x, y })?)?;
    let pi = solve_pi(model, target, |pi| build_parametric(&Parametric::IidScaled { pi, c0, x, y }))?;
    Ok(PremiumReport::exact(eps, pi, warnings(model, true)))
}

/// π(ε) solving V(d^gradual(ε)) = V(d^early(π)).
pub fn timing_premium(model: &KpModel, c0: f64, k: f64, x: f64, y: f64, eps: f64) -> Result<PremiumReport> {
    ordered(x, y)?;
    let target = kp_evaluate(model, &build_parametric(&Parametric::Gradual { eps, c0, k, x, y })?)?;
    let pi = solve_pi(model, target, |pi| build_parametric(&Parametric::Early { pi, c0, k, x, y }))?;
    Ok(PremiumReport::exact(eps, pi, warnings(model, false)))
}

fn require_linear(model: &KpModel) -> Result<()> {
    if model.u == Felicity::Linear {
        Ok(())
    } else {
        Err(Error::Unsupported("premium expansions assume linear felicity".into()))
    }
}

/// Derivatives of the iid side g(π) = ½φ(xs + βC) + ½φ(ys + βC), s = 1 − π,
/// with C(s) = φ⁻¹(½φ(xs) + ½φ(ys)).
pub fn iid_side_derivatives(phi: &RiskAdjustment, beta: f64, x: f64, y: f64, pi: f64) -> Result<(f64, f64, f64)> {
    let s = 1.0 - pi;
    let (xs, ys) = (x * s, y * s);
    let c = phi.inverse(0.5 * phi.value(xs)? + 0.5 * phi.value(ys)?)?;
    let d1c = phi.eval(c, 1)?;
    let cp = (0.5 * phi.eval(xs, 1)? * x + 0.5 * phi.eval(ys, 1)? * y) / d1c;
    let cpp = (0.5 * phi.eval(xs, 2)? * x * x + 0.5 * phi.eval(ys, 2)? * y * y - phi.eval(c, 2)? * cp * cp) / d1c;
    let (ax, ay) = (xs + beta * c, ys + beta * c);
    let (vx, vy) = (x + beta * cp, y + beta * cp);
    let g = 0.5 * phi.value(ax)? + 0.5 * phi.value(ay)?;
    let dg_ds = 0.5 * phi.eval(ax, 1)? * vx + 0.5 * phi.eval(ay, 1)? * vy;
    let d2g_ds2 = 0.5 * phi.eval(ax, 2)? * vx * vx
        + 0.5 * phi.eval(ax, 1)? * beta * cpp
        + 0.5 * phi.eval(ay, 2)? * vy * vy
        + 0.5 * phi.eval(ay, 1)? * beta * cpp;
    Ok((g, -dg_ds, d2g_ds2))
}

/// ∫_y^x φ′((1+β)z)/φ′(z) · (R((1+β)z) − R(z))/z dz.
pub fn persistence_slope_integral(phi: &RiskAdjustment, beta: f64, x: f64, y: f64) -> Result<f64> {
    let r = |z: f64| -> Result<f64> { Ok(z * phi.abs_risk_aversion(z)?) };
    let integrand = |z: f64| -> Result<f64> {
        let up = (1.0 + beta) * z;
        Ok(phi.eval(up, 1)? / phi.eval(z, 1)? * (r(up)? - r(z)?) / z)
    };
    integrate(|z| integrand(z).unwrap_or(f64::NAN), y, x, DEFAULT_TOL).map(|q| q.value)
}

/// φ′((1+β)x)/φ′(x) ER(x,x) + φ′((1+β)y)/φ′(y) ER(y,y).
fn er_bracket(phi: &RiskAdjustment, beta: f64, x: f64, y: f64, squared: bool) -> Result<f64> {
    let term = |z: f64| -> Result<f64> {
        let d1 = phi.eval(z, 1)?;
        let denom = if squared { d1 * d1 } else { d1 };
        Ok(phi.eval((1.0 + beta) * z, 1)? / denom * crate::risk::er_measure(phi, beta, z, z)?)
    };
    Ok(term(x)? + term(y)?)
}

/// Second-order expansion of π(ε) about ε = 1, anchored at the exact π(1).
pub fn persistence_premium_approx(model: &KpModel, c0: f64, x: f64, y: f64, eps: f64) -> Result<PremiumReport> {
    require_linear(model)?;
    let report = persistence_premium(model, c0, x, y, eps)?;
    let (phi, beta) = (&model.phi, model.beta);
    if let RiskAdjustment::Identity = phi {
        let terms = ApproxTerms { level: 0.0, slope: 0.0, curvature: 0.0, constants: BTreeMap::new() };
        return Ok(report.with_approx(terms));
    }
    let pi1 = persistence_premium(model, c0, x, y, 1.0)?.exact_pi;
    let spread = phi.value(x)? - phi.value(y)?;
    let integral = persistence_slope_integral(phi, beta, x, y)?;
    let f1 = -beta * spread / 4.0 * integral;
    let f2 = beta * spread * spread / 8.0 * er_bracket(phi, beta, x, y, true)?;
    let (g_anchor, g1, g2) = iid_side_derivatives(phi, beta, x, y, pi1)?;
    let dpi = f1 / g1;
    let d2pi = (f2 - g2 * dpi * dpi) / g1;
    let de = eps - 1.0;

    let (g0, g1_zero, _) = iid_side_derivatives(phi, beta, x, y, 0.0)?;
    let f_at_one = 0.5 * phi.value((1.0 + beta) * x)? + 0.5 * phi.value((1.0 + beta) * y)?;
    let k1 = -1.0 / g1_zero;
    let k2 = -beta * spread / (4.0 * g1_zero);
    let k3 = beta * beta * spread * spread / (8.0 * g1_zero);
    let bracket = er_bracket(phi, beta, x, y, false)?;
    let printed = k1 * (g0 - f_at_one) + k2 * de * integral - k3 * de * de * bracket;

    let mut constants = BTreeMap::new();
    constants.insert("anchor_pi".into(), pi1);
    constants.insert("dpi_deps".into(), dpi);
    constants.insert("d2pi_deps2".into(), d2pi);
    constants.insert("f_prime_1".into(), f1);
    constants.insert("f_second_1".into(), f2);
    constants.insert("g_anchor".into(), g_anchor);
    constants.insert("g_prime_anchor".into(), g1);
    constants.insert("g_second_anchor".into(), g2);
    constants.insert("slope_integral".into(), integral);
    constants.insert("printed_k1".into(), k1);
    constants.insert("printed_k2".into(), k2);
    constants.insert("printed_k3".into(), k3);
    constants.insert("printed_g_prime_0".into(), g1_zero);
    constants.insert("printed_er_bracket".into(), bracket);
    constants.insert("printed_expansion".into(), printed);
    let terms = ApproxTerms { level: pi1, slope: dpi * de, curvature: 0.5 * d2pi * de * de, constants };
    Ok(report.with_approx(terms))
}

/// g′(0) for the early side g(π) = ½φ(ks + βxs) + ½φ(ks + βys).
pub fn early_side_slope(phi: &RiskAdjustment, beta: f64, k: f64, x: f64, y: f64) -> Result<f64> {
    let (a, b) = (k + beta * x, k + beta * y);
    Ok(-0.5 * (phi.eval(a, 1)? * a + phi.eval(b, 1)? * b))
}

/// ∫_y^x φ′(k+βz)/φ′(z) · ER(z, k) dz.
pub fn timing_integral(phi: &RiskAdjustment, beta: f64, k: f64, x: f64, y: f64) -> Result<f64> {
    let integrand = |z: f64| -> Result<f64> {
        Ok(phi.eval(k + beta * z, 1)? / phi.eval(z, 1)? * crate::risk::er_measure(phi, beta, z, k)?)
    };
    integrate(|z| integrand(z).unwrap_or(f64::NAN), y, x, DEFAULT_TOL).map(|q| q.value)
}

/// First-order expansion k₁ J (1 − ε) of the timing premium about ε = 1.
pub fn timing_premium_approx(model: &KpModel, k: f64, x: f64, y: f64, eps: f64) -> Result<f64> {
    Ok(timing_terms(model, k, x, y, eps)?.slope)
}

fn timing_terms(model: &KpModel, k: f64, x: f64, y: f64, eps: f64) -> Result<ApproxTerms> {
    require_linear(model)?;
    ordered(x, y)?;
    let (phi, beta) = (&model.phi, model.beta);
    let mut constants = BTreeMap::new();
    if let RiskAdjustment::Identity = phi {
        return Ok(ApproxTerms { level: 0.0, slope: 0.0, curvature: 0.0, constants });
    }
    let g1 = early_side_slope(phi, beta, k, x, y)?;
    let k1 = -beta * (phi.value(x)? - phi.value(y)?) / (4.0 * g1);
    let j = timing_integral(phi, beta, k, x, y)?;
    constants.insert("k1".into(), k1);
    constants.insert("integral".into(), j);
    constants.insert("g_prime_0".into(), g1);
    Ok(ApproxTerms { level: 0.0, slope: k1 * j * (1.0 - eps), curvature: 0.0, constants })
}

/// Exact timing premium together with its first-order expansion.
pub fn timing_premium_report(model: &KpModel, c0: f64, k: f64, x: f64, y: f64, eps: f64) -> Result<PremiumReport> {
    let report = timing_premium(model, c0, k, x, y, eps)?;
    Ok(report.with_approx(timing_terms(model, k, x, y, eps)?))
}

/// Which premium a sweep computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PremiumKind {
    Persistence,
    Timing,
}

/// Reports over a list of ε, computed in parallel and returned in input order.
pub fn premium_sweep(model: &KpModel, kind: PremiumKind, c0: f64, k: f64, x: f64, y: f64, eps: &[f64]) -> Result<Vec<PremiumReport>> {
    eps.par_iter()
        .map(|&e| match kind {
            PremiumKind::Persistence => persistence_premium_approx(model, c0, x, y, e),
            PremiumKind::Timing => timing_premium_report(model, c0, k, x, y, e),
        })
        .collect()
}

/// The two-period (hi, lo) lotteries: perfectly correlated and iid halves.
pub fn dpos_lotteries(hi: f64, lo: f64) -> Result<(TemporalLottery, TemporalLottery)> {
    if !(hi > lo && lo > 0.0) {
        return Err(Error::ParamOutOfRange(format!("need hi > lo > 0, got {hi}, {lo}")));
    }
    let ell = Distribution::uniform(&[hi, lo])?;
    let corr = build_parametric(&Parametric::CorrPerfect { c0: hi, ell: ell.clone() })?;
    let iid = build_parametric(&Parametric::Iid { c0: hi, ell })?;
    Ok((corr, iid))
}

/// Relative gap of present certainty equivalents, 1 − PE(corr)/PE(iid), with
/// no utility from period-0 consumption.
pub fn dpos_measure(model: &KpModel, hi: f64, lo: f64) -> Result<f64> {
    let (corr, iid) = dpos_lotteries(hi, lo)?;
    let vc = model.beta * continuation_value(model, &corr)?;
    let vi = model.beta * continuation_value(model, &iid)?;
    Ok(1.0 - model.u.inverse(vc)? / model.u.inverse(vi)?)
}
