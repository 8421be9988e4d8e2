//! Infinite-horizon recursive utility for stationary lotteries, computed in
//! utility units U = V^ρ:
//!
//! U(c) = c^ρ + β φ⁻¹(E φ(U′)),
//!
//! by monotone iteration from the expected-utility fixed point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lottery::Distribution;
use crate::risk::RiskAdjustment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryKind {
    /// A fresh draw from ℓ every period.
    Iid,
    /// One draw from ℓ, repeated forever.
    PerfectlyCorrelated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryLottery {
    pub kind: StationaryKind,
    pub ell: Distribution,
    pub c0: f64,
}

impl StationaryLottery {
    pub fn new(kind: StationaryKind, ell: Distribution, c0: f64) -> Result<Self> {
        if let Some(&c) = ell.values().iter().find(|&&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::DomainViolation { what: "stationary support".into(), x: c });
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::DomainViolation { what: "initial consumption".into(), x: c0 });
        }
        Ok(Self { kind, ell, c0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonValue {
    /// Root value in consumption units, U₀^{1/ρ}.
    pub value: f64,
    /// Root value in utility units.
    pub utility: f64,
    /// Fixed-point utilities per support point of ℓ.
    pub state_utility: Vec<f64>,
    pub iterations: usize,
    /// sup |U − T(U)| at the returned iterate.
    pub residual: f64,
}

pub const ITERATION_CAP: usize = 1_000_000;
pub const DEFAULT_TOL: f64 = 1e-10;

fn check(rho: f64, beta: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::ParamOutOfRange(format!("rho = {rho} not in (0,1)")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::ParamOutOfRange(format!("beta = {beta} not in (0,1)")));
    }
    Ok(())
}

/// Continuation certainty equivalent seen from support point i.
fn continuation(phi: &RiskAdjustment, kind: StationaryKind, u: &[f64], p: &[f64], i: usize) -> Result<f64> {
    match kind {
        StationaryKind::Iid => phi.certainty_equivalent(u, p),
        StationaryKind::PerfectlyCorrelated => Ok(u[i]),
    }
}

fn apply(phi: &RiskAdjustment, kind: StationaryKind, beta: f64, flow: &[f64], u: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    match kind {
        StationaryKind::Iid => {
            let ce = phi.certainty_equivalent(u, p)?;
            Ok(flow.iter().map(|f| f + beta * ce).collect())
        }
        StationaryKind::PerfectlyCorrelated => (0..u.len()).map(|i| Ok(flow[i] + beta * continuation(phi, kind, u, p, i)?)).collect(),
    }
}

/// Expected-utility fixed point U* = flow + β·E U*, solved in closed form.
fn expected_utility_start(kind: StationaryKind, beta: f64, flow: &[f64], p: &[f64]) -> Vec<f64> {
    match kind {
        StationaryKind::Iid => {
            let m: f64 = flow.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() / (1.0 - beta);
            flow.iter().map(|f| f + beta * m).collect()
        }
        StationaryKind::PerfectlyCorrelated => flow.iter().map(|f| f / (1.0 - beta)).collect(),
    }
}

/// Monotone value iteration; errors if an iterate rises above its predecessor.
pub fn value_iterate(phi: &RiskAdjustment, rho: f64, beta: f64, sl: &StationaryLottery, tol: f64) -> Result<HorizonValue> {
    check(rho, beta)?;
    let c = sl.ell.values();
    let p = sl.ell.probs();
    let flow: Vec<f64> = c.iter().map(|x| x.powf(rho)).collect();
    let mut u = expected_utility_start(sl.kind, beta, &flow, &p);
    let mut iterations = 0;
    loop {
        let next = apply(phi, sl.kind, beta, &flow, &u, &p)?;
        let scale = u.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if next.iter().zip(&u).any(|(n, o)| *n > o + 1e-12 * scale || *n < 0.0) {
            return Err(Error::NonContraction(iterations));
        }
        let diff = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        u = next;
        iterations += 1;
        // absolute criterion, floored at rounding level
        if diff < tol.max(8.0 * f64::EPSILON * scale) {
            break;
        }
        if iterations >= ITERATION_CAP {
            return Err(Error::IterationCap(ITERATION_CAP));
        }
    }
    let residual = apply(phi, sl.kind, beta, &flow, &u, &p)?
        .iter()
        .zip(&u)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let utility = sl.c0.powf(rho) + beta * phi.certainty_equivalent(&u, &p)?;
    Ok(HorizonValue { value: utility.powf(1.0 / rho), utility, state_utility: u, iterations, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidCorrComparison {
    pub iid_weakly_preferred: bool,
    pub iid: f64,
    pub corr: f64,
}

/// Values of the iid and perfectly correlated streams drawn from ℓ after c0.
pub fn compare_iid_corr(phi: &RiskAdjustment, rho: f64, beta: f64, ell: &Distribution, c0: f64) -> Result<IidCorrComparison> {
    let iid = value_iterate(phi, rho, beta, &StationaryLottery::new(StationaryKind::Iid, ell.clone(), c0)?, DEFAULT_TOL)?;
    check(rho, beta)?;
    // a single draw followed by a constant stream: U = c^ρ/(1 − β)
    let streams: Vec<f64> = ell.values().iter().map(|c| c.powf(rho) / (1.0 - beta)).collect();
    let corr = (c0.powf(rho) + beta * phi.certainty_equivalent(&streams, &ell.probs())?).powf(1.0 / rho);
    Ok(IidCorrComparison { iid_weakly_preferred: iid.value >= corr * (1.0 - 1e-10), iid: iid.value, corr })
}
