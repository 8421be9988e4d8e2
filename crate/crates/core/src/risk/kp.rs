//! The recursive evaluator V = u(c) + β φ⁻¹(E φ(V′)).

use crate::error::{Error, Result};
use crate::lottery::{build_parametric, Distribution, Parametric, TemporalLottery};

use super::felicity::Felicity;
use super::phi::RiskAdjustment;

/// Risk adjustment, felicity and discount factor.
#[derive(Debug, Clone)]
pub struct KpModel {
    pub phi: RiskAdjustment,
    pub u: Felicity,
    pub beta: f64,
}

impl KpModel {
    pub fn new(phi: RiskAdjustment, u: Felicity, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::ParamOutOfRange(format!("beta = {beta} not in (0,1]")));
        }
        Ok(Self { phi, u, beta })
    }

    /// Linear felicity, the default for the premium calculations.
    pub fn linear(phi: RiskAdjustment, beta: f64) -> Result<Self> {
        Self::new(phi, Felicity::Linear, beta)
    }

    /// Certainty equivalent of continuation values under φ.
    pub fn certainty_equivalent(&self, values: &[f64], probs: &[f64]) -> Result<f64> {
        self.phi.certainty_equivalent(values, probs)
    }

    pub fn er(&self, x: f64, y: f64) -> Result<f64> {
        super::phi::er_measure(&self.phi, self.beta, x, y)
    }
}

/// Utility of the lottery at its root.
pub fn kp_evaluate(model: &KpModel, d: &TemporalLottery) -> Result<f64> {
    let now = model.u.eval(d.consumption)?;
    if d.is_leaf() {
        return Ok(now);
    }
    Ok(now + model.beta * continuation_value(model, d)?)
}

/// φ⁻¹(E φ(V_{t+1})) at the root, without the current felicity.
pub fn continuation_value(model: &KpModel, d: &TemporalLottery) -> Result<f64> {
    let mut values = Vec::with_capacity(d.branches.len());
    let mut probs = Vec::with_capacity(d.branches.len());
    for b in &d.branches {
        values.push(kp_evaluate(model, &b.child)?);
        probs.push(b.prob);
    }
    model.certainty_equivalent(&values, &probs)
}

/// Utility at every node in depth-first order (root first).
pub fn kp_node_values(model: &KpModel, d: &TemporalLottery) -> Result<Vec<f64>> {
    fn walk(model: &KpModel, d: &TemporalLottery, out: &mut Vec<f64>) -> Result<f64> {
        let slot = out.len();
        out.push(0.0);
        let now = model.u.eval(d.consumption)?;
        let v = if d.is_leaf() {
            now
        } else {
            let mut values = Vec::with_capacity(d.branches.len());
            let mut probs = Vec::with_capacity(d.branches.len());
            for b in &d.branches {
                values.push(walk(model, &b.child, out)?);
                probs.push(b.prob);
            }
            now + model.beta * model.certainty_equivalent(&values, &probs)?
        };
        out[slot] = v;
        Ok(v)
    }
    let mut out = Vec::new();
    walk(model, d, &mut out)?;
    Ok(out)
}

/// Consumption whose felicity equals the root utility.
pub fn present_equivalent(model: &KpModel, d: &TemporalLottery) -> Result<f64> {
    model.u.inverse(kp_evaluate(model, d)?)
}

/// Preference between perfectly positively and negatively correlated streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hedging {
    PrefersNegative,
    PrefersPositive,
    Indifferent,
}

/// Compares (x, x)/(y, y) against (x, y)/(y, x), each branch with weight ½.
pub fn hedging_compare(model: &KpModel, x: f64, y: f64) -> Result<Hedging> {
    if x == y {
        return Ok(Hedging::Indifferent);
    }
    let ell = Distribution::uniform(&[x, y])?;
    let c0 = x.max(y);
    let pos = kp_evaluate(model, &build_parametric(&Parametric::CorrPerfect { c0, ell })?)?;
    let neg = kp_evaluate(model, &build_parametric(&Parametric::NegCorr { c0, x, y })?)?;
    let tol = 1e-12 * pos.abs().max(neg.abs()).max(1.0);
    Ok(if neg > pos + tol {
        Hedging::PrefersNegative
    } else if pos > neg + tol {
        Hedging::PrefersPositive
    } else {
        Hedging::Indifferent
    })
}
