//! Steady-state welfare of the human-capital economy with a progressive
//! labour-income tax, and the search for the welfare-maximizing progressivity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::golden_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaxParams {
    pub beta: f64,
    pub gamma: f64,
    /// 1/(η − 1).
    pub labor_elasticity: f64,
    /// Persistence of ability shocks.
    pub ability_persistence: f64,
    pub lambda_: f64,
    /// Exponent on labour effort.
    pub mu_labor: f64,
    /// Elasticity of investment.
    pub rho_inv: f64,
    /// Exponent on inherited human capital.
    pub alpha_h: f64,
    pub k_scale: f64,
    pub omega: f64,
}

impl Default for TaxParams {
    fn default() -> Self {
        Self {
            beta: 0.2939,
            gamma: -9.0,
            labor_elasticity: 0.2,
            ability_persistence: 0.6,
            lambda_: 0.625,
            mu_labor: 0.375,
            rho_inv: 0.25 / 0.625,
            alpha_h: 0.35,
            k_scale: 1.0,
            omega: 1.0,
        }
    }
}

impl TaxParams {
    pub fn eta(&self) -> f64 {
        1.0 + 1.0 / self.labor_elasticity
    }

    /// Variance of the ability shock.
    pub fn sigma_eps(&self) -> f64 {
        self.omega * self.omega
    }

    /// Mean of the ability shock.
    pub fn mu_eps(&self) -> f64 {
        self.omega / 2.0
    }
}

/// The seven summands of steady-state welfare.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareTerms {
    /// After-tax earnings, effort and dispersion, capitalized.
    pub earnings: f64,
    /// Effort terms.
    pub effort: f64,
    /// Disutility of effort.
    pub effort_cost: f64,
    /// Human-capital investment.
    pub investment: f64,
    /// Share of income consumed.
    pub consumption_share: f64,
    /// Risk adjustment of the after-tax shock.
    pub risk: f64,
    /// Insurance value of compressed dispersion.
    pub insurance: f64,
}

impl WelfareTerms {
    pub fn total(&self) -> f64 {
        self.earnings + self.effort + self.effort_cost + self.investment + self.consumption_share + self.risk + self.insurance
    }
}

fn positive(what: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::DomainViolation { what: what.into(), x })
    }
}

pub fn welfare_terms(p: &TaxParams, tau: f64) -> Result<WelfareTerms> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::DomainViolation { what: "tax progressivity".into(), x: tau });
    }
    let TaxParams { beta, gamma, ability_persistence: ph, lambda_: lam, rho_inv: rho, alpha_h: al, k_scale: k, omega: om, .. } = *p;
    let me = p.mu_labor / p.eta();
    let a = positive("1 - beta(alpha + rho lambda)", 1.0 - beta * (al + rho * lam))?;
    let b = positive("1 - beta alpha", 1.0 - beta * al)?;
    let c = positive("1 - beta(alpha + rho lambda (1 - tau))", 1.0 - beta * (al + rho * lam * (1.0 - tau)))?;
    let d = positive("1 - alpha - rho lambda", 1.0 - al - rho * lam)?;
    let persist = positive("1 - persistence^2", 1.0 - ph * ph)?;
    let share = positive("1 - (1 - tau) rho beta lambda / (1 - beta alpha)", 1.0 - (1.0 - tau) * rho * beta * lam / b)?;
    let rbl = positive("rho beta lambda", rho * beta * lam)?;
    let k = positive("k", k)?;
    let me_ln = if me > 0.0 { me * me.ln() } else { 0.0 };

    let dispersion = tau * (2.0 - tau) * lam * lam * om * om / (2.0 * persist * (d + rho * lam * tau).powi(2));
    let effort_core = me_ln + me * b.ln() - me * c.ln();
    let ln_keep = (1.0 - tau).ln();
    Ok(WelfareTerms {
        earnings: (1.0 - beta) * lam * rho / (a * d) * (ln_keep + rbl.ln() - b.ln() + effort_core + dispersion),
        effort: b / a * effort_core,
        effort_cost: -me * b / c,
        investment: lam * beta / a * (k.ln() + rho * ln_keep + rho * rbl.ln() - rho * b.ln()),
        consumption_share: share.ln(),
        risk: gamma * beta * lam * lam * (1.0 - beta) * (1.0 - tau).powi(2) * om * om
            / (2.0 * persist * (b - beta * rho * lam + beta * rho * lam * tau).powi(2)),
        insurance: b / a * dispersion,
    })
}

pub fn steady_welfare(p: &TaxParams, tau: f64) -> Result<f64> {
    welfare_terms(p, tau).map(|t| t.total())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxOptimum {
    pub tau_star: f64,
    pub welfare: f64,
    /// (τ, welfare) on the coarse grid.
    pub curve: Vec<(f64, f64)>,
}

pub const TAU_MAX: f64 = 0.999;
const GRID: usize = 1000;

/// Grid argmax (smallest τ on ties) refined by golden section to 1e-6.
pub fn optimize_tau(p: &TaxParams) -> Result<TaxOptimum> {
    let curve: Vec<(f64, f64)> = (0..GRID)
        .into_par_iter()
        .map(|i| {
            let tau = TAU_MAX * i as f64 / (GRID - 1) as f64;
            steady_welfare(p, tau).map(|w| (tau, w))
        })
        .collect::<Result<_>>()?;
    let best = curve.iter().enumerate().fold(0, |bi, (i, &(_, w))| if w > curve[bi].1 { i } else { bi });
    let lo = curve[best.saturating_sub(1)].0;
    let hi = curve[(best + 1).min(GRID - 1)].0;
    let (tau, w) = golden_max(|t| steady_welfare(p, t), lo, hi, 1e-6)?;
    let (tau_star, welfare) = if w >= curve[best].1 { (tau, w) } else { curve[best] };
    Ok(TaxOptimum { tau_star, welfare, curve })
}
