//! Long-run-risk closed forms for the log case, volatility matching,
//! correlation-aversion matching and the HARA/EZ comparison integrals.
//!
//! Consumption growth follows log(c_{t+1}/c_t) = drift + x_t + σε_c and
//! x_{t+1} = a·x_t + vol_loading·σ·ε_x.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::premia::dpos_measure;
use crate::quadrature::{integrate, DEFAULT_TOL};
use crate::risk::{er_measure, Felicity, KpModel, RiskAdjustment};
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrrParams {
    pub sigma: f64,
    pub vol_loading: f64,
    pub a: f64,
    pub beta: f64,
    pub alpha: f64,
    pub rho: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub drift: f64,
}

impl LrrParams {
    /// Monthly calibration with 1 − α = 7.5.
    pub fn table1() -> Self {
        Self { sigma: 0.0078, vol_loading: 0.044, a: 0.979, beta: 0.998, alpha: -6.5, rho: 0.0, x0: 0.0, drift: 0.0 }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1.0).contains(&self.a)
            && self.beta > 0.0
            && self.beta < 1.0
            && self.sigma >= 0.0
            && self.vol_loading >= 0.0
            && [self.alpha, self.x0, self.drift].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::ParamOutOfRange(format!("invalid long-run-risk parameters {self:?}")));
        }
        if self.rho != 0.0 {
            return Err(Error::UnsupportedRho(self.rho));
        }
        Ok(())
    }

    fn risk_scale(&self) -> f64 {
        0.5 * self.alpha * self.beta * self.sigma * self.sigma / (1.0 - self.beta)
    }

    fn loading_sq(&self, persistent: bool) -> f64 {
        let vb = self.vol_loading * self.beta;
        if persistent {
            vb * vb / (1.0 - self.beta * self.a).powi(2)
        } else {
            vb * vb
        }
    }
}

/// log U₀ of the persistent (`a` as given) or iid (`a` = 0) process.
pub fn lrr_log_utility(p: &LrrParams, persistent: bool, log_c0: f64) -> Result<f64> {
    p.validate()?;
    let b = p.beta;
    let state = if persistent { b / (1.0 - b * p.a) } else { b } * p.x0;
    Ok(log_c0 + state + b / (1.0 - b) * p.drift + p.risk_scale() * (1.0 + p.loading_sq(persistent)))
}

/// Share of consumption given up to remove all persistence.
pub fn lrr_persistence_premium(p: &LrrParams) -> Result<f64> {
    let corr = lrr_log_utility(p, true, 0.0)?;
    let iid = lrr_log_utility(p, false, 0.0)?;
    Ok(-(corr - iid).exp_m1())
}

/// Timing premium with the loading entering linearly.
pub fn lrr_timing_premium(p: &LrrParams) -> Result<f64> {
    timing(p, p.vol_loading)
}

/// Timing premium with the squared loading, for comparison with the linear form.
pub fn lrr_timing_premium_squared(p: &LrrParams) -> Result<f64> {
    timing(p, p.vol_loading * p.vol_loading)
}

fn timing(p: &LrrParams, load: f64) -> Result<f64> {
    p.validate()?;
    let b2 = p.beta * p.beta;
    let e = 0.5 * p.alpha * b2 * p.sigma * p.sigma / (1.0 - b2) * (1.0 + load * b2 / (1.0 - p.beta * p.a).powi(2));
    Ok(-e.exp_m1())
}

/// iid volatility with the same long-run growth variance, and the premium
/// recomputed against that iid process.
pub fn match_longrun_volatility(p: &LrrParams) -> Result<(f64, f64)> {
    p.validate()?;
    let v2 = p.vol_loading * p.vol_loading;
    let sigma_iid = p.sigma * ((1.0 + v2 / (1.0 - p.a * p.a)) / (1.0 + v2)).sqrt();
    let corr = lrr_log_utility(p, true, 0.0)?;
    let iid = lrr_log_utility(&LrrParams { sigma: sigma_iid, ..*p }, false, 0.0)?;
    Ok((sigma_iid, -(corr - iid).exp_m1()))
}

/// The EZ model used for correlation-aversion matching: log felicity with
/// exponential φ when ρ = 0, power felicity with the EZ φ otherwise.
pub fn ez_model(alpha: f64, rho: f64, beta: f64) -> Result<KpModel> {
    if rho == 0.0 {
        if alpha >= 0.0 {
            return Err(Error::ParamOutOfRange(format!("log case needs alpha < 0, got {alpha}")));
        }
        KpModel::new(RiskAdjustment::exponential(-1.0 / alpha)?, Felicity::Log, beta)
    } else {
        KpModel::new(RiskAdjustment::ez_power(alpha, rho)?, Felicity::power(rho)?, beta)
    }
}

/// α at which the correlation-aversion measure on the (hi, lo) lotteries
/// equals `target`.
pub fn match_rohde_yu(target: f64, rho: f64, beta: f64, hi: f64, lo: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::NoBracket(format!("target {target} outside (0,1); the risk-neutral limit alpha = 0 is excluded")));
    }
    let gap = |alpha: f64| -> Result<f64> { Ok(dpos_measure(&ez_model(alpha, rho, beta)?, hi, lo)? - target) };
    // the measure vanishes at α = ρ and is not monotone far from it, so scan
    // outward and take the first crossing
    let (s_lo, s_hi, n) = (-6.0f64, (50.0 + rho).log10(), 240);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let alpha = rho - 10f64.powf(s_lo + (s_hi - s_lo) * i as f64 / n as f64);
        if alpha.abs() < 1e-9 {
            continue;
        }
        let Ok(g) = gap(alpha) else { continue };
        if g == 0.0 {
            return Ok(alpha);
        }
        if let Some((a0, g0)) = prev {
            if g0.signum() != g.signum() {
                return bisect(gap, alpha, a0, 1e-8, 200);
            }
        }
        prev = Some((alpha, g));
    }
    Err(Error::NoBracket(format!("no alpha reaches correlation-aversion measure {target} for rho = {rho}")))
}

/// Comparison integrals over [u(lo), u(hi)]: ∫ER(x,x) for the HARA and EZ
/// adjustments, and ∫1/R_HARA scaled by 1/(hi − lo).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonIntegrals {
    pub er_hara: f64,
    pub er_ez: f64,
    pub rra_hara: f64,
}

pub fn hara_comparison_integrals(
    hara: &RiskAdjustment,
    ez: &RiskAdjustment,
    u: Felicity,
    beta: f64,
    lo: f64,
    hi: f64,
) -> Result<ComparisonIntegrals> {
    let (gamma, b) = match *hara {
        RiskAdjustment::Hara { gamma, b } => (gamma, b),
        _ => return Err(Error::ParamOutOfRange(format!("expected a HARA adjustment, got {}", hara.name()))),
    };
    let (a, z) = (u.eval(lo)?, u.eval(hi)?);
    if !(a < z) {
        return Err(Error::ParamOutOfRange(format!("need u(lo) < u(hi), got {a} and {z}")));
    }
    let er = |phi: &RiskAdjustment| -> Result<f64> {
        let q = integrate(|x| er_measure(phi, beta, x, x).unwrap_or(f64::NAN), a, z, DEFAULT_TOL)?;
        if q.value.is_nan() {
            return Err(Error::DomainViolation { what: format!("ER of {} on [{a}, {z}]", phi.name()), x: a });
        }
        Ok(q.value)
    };
    let width = hi - lo;
    let rra = integrate(|x| 1.0 / ((1.0 / (1.0 - gamma) + b / x) * width), a, z, DEFAULT_TOL)?.value;
    Ok(ComparisonIntegrals { er_hara: er(hara)?, er_ez: er(ez)?, rra_hara: rra })
}
