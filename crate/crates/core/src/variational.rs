//! Statistical-distance costs and the variational form of the recursion:
//! V = u(c) + β min_ℓ {E_ℓ V′ + I(ℓ‖m)}.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lottery::{TemporalLottery, PROB_TOL};
use crate::risk::{kp_evaluate, KpModel, RiskAdjustment};

/// An alternative distribution over the same nodes as a base distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistortion {
    pub base: Vec<f64>,
    pub alt: Vec<f64>,
}

fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(0.0..=1.0 + PROB_TOL).contains(&x)) || (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::NonStochastic(format!("{what} {p:?} sums to {sum}")));
    }
    Ok(())
}

impl DiscreteDistortion {
    pub fn new(base: Vec<f64>, alt: Vec<f64>) -> Result<Self> {
        if base.len() != alt.len() {
            return Err(Error::DimensionMismatch(format!("base has {} nodes, alt has {}", base.len(), alt.len())));
        }
        check_simplex(&base, "base")?;
        check_simplex(&alt, "alt")?;
        Ok(Self { base, alt })
    }

    pub fn absolutely_continuous(&self) -> bool {
        self.base.iter().zip(&self.alt).all(|(&m, &l)| m > 0.0 || l == 0.0)
    }

    /// dℓ/dm on the support of the base; +∞ where ℓ charges a null node.
    pub fn likelihood_ratio(&self) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.alt)
            .map(|(&m, &l)| if m > 0.0 { l / m } else if l > 0.0 { f64::INFINITY } else { 0.0 })
            .collect()
    }
}

/// θ·KL(alt‖base), +∞ without absolute continuity.
pub fn cost_relative_entropy(dd: &DiscreteDistortion, theta: f64) -> f64 {
    if !dd.absolutely_continuous() {
        return f64::INFINITY;
    }
    theta
        * dd.base
            .iter()
            .zip(&dd.alt)
            .filter(|(_, &l)| l > 0.0)
            .map(|(&m, &l)| l * (l / m).ln())
            .sum::<f64>()
}

/// Order of the Rényi divergence in the EZ cost.
pub fn renyi_order(alpha: f64, rho: f64) -> Result<f64> {
    let q = alpha / (alpha - rho);
    if !q.is_finite() || q == 0.0 || q == 1.0 {
        return Err(Error::DegenerateQ(q));
    }
    Ok(q)
}

/// R_q(ℓ‖m) = log E_m[(dℓ/dm)^q] / (q − 1).
pub fn renyi_divergence(dd: &DiscreteDistortion, q: f64) -> f64 {
    if !dd.absolutely_continuous() {
        return f64::INFINITY;
    }
    let s: f64 = dd.base.iter().zip(&dd.alt).filter(|(&m, _)| m > 0.0).map(|(&m, &l)| m * (l / m).powf(q)).sum();
    s.ln() / (q - 1.0)
}

/// E_ℓV·(exp{(1 − q)/q · R_q(ℓ‖m)} − 1) with q = α/(α − ρ).
pub fn cost_ez_renyi(dd: &DiscreteDistortion, values: &[f64], alpha: f64, rho: f64) -> Result<f64> {
    let q = renyi_order(alpha, rho)?;
    if values.len() != dd.alt.len() {
        return Err(Error::DimensionMismatch(format!("{} values for {} nodes", values.len(), dd.alt.len())));
    }
    if !dd.absolutely_continuous() {
        return Ok(f64::INFINITY);
    }
    let ev: f64 = dd.alt.iter().zip(values).map(|(l, v)| l * v).sum();
    Ok(ev * (((1.0 - q) / q) * renyi_divergence(dd, q)).exp_m1())
}

#[derive(Debug, Clone, Copy)]
enum Cost {
    Entropy { theta: f64 },
    Renyi { q: f64 },
    /// ℓ = m is forced.
    Rigid,
}

fn cost_of(model: &KpModel) -> Result<Cost> {
    match model.phi {
        RiskAdjustment::Exponential { theta } => Ok(Cost::Entropy { theta }),
        RiskAdjustment::EzPower { alpha, rho } if alpha < 0.0 && rho > 0.0 && rho < 1.0 => {
            Ok(Cost::Renyi { q: renyi_order(alpha, rho)? })
        }
        RiskAdjustment::Identity => Ok(Cost::Rigid),
        _ => Err(Error::Unsupported(format!("no closed-form cost for {}", model.phi.name()))),
    }
}

/// Objective E_ℓV + I(ℓ‖m) and its gradient in ℓ, on the base support.
fn objective(cost: Cost, m: &[f64], v: &[f64], l: &[f64]) -> (f64, Vec<f64>) {
    let ev: f64 = l.iter().zip(v).map(|(a, b)| a * b).sum();
    match cost {
        Cost::Entropy { theta } => {
            let kl: f64 = l.iter().zip(m).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| a * (a / b).ln()).sum();
            let g = l.iter().zip(m).zip(v).map(|((&a, &b), &x)| x + theta * ((a / b).ln() + 1.0)).collect();
            (ev + theta * kl, g)
        }
        Cost::Renyi { q } => {
            let s: f64 = l.iter().zip(m).map(|(&a, &b)| b * (a / b).powf(q)).sum();
            let k = s.powf(-1.0 / q);
            let g = l.iter().zip(m).zip(v).map(|((&a, &b), &x)| k * (x - ev * (a / b).powf(q - 1.0) / s)).collect();
            (ev * k, g)
        }
        Cost::Rigid => (ev, v.to_vec()),
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - top).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

const RESTARTS: usize = 20;
const MAX_STEPS: usize = 20_000;
const GRAD_TOL: f64 = 1e-9;

/// Gradient descent in softmax coordinates with backtracking. Returns the
/// objective, the minimizer and whether the gradient criterion was met.
fn descend(cost: Cost, m: &[f64], v: &[f64], mut z: Vec<f64>) -> (f64, Vec<f64>, bool) {
    let scale = v.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let mut l = softmax(&z);
    let (mut f, mut g) = objective(cost, m, v, &l);
    let mut step = 1.0 / scale;
    for _ in 0..MAX_STEPS {
        let mean: f64 = l.iter().zip(&g).map(|(a, b)| a * b).sum();
        let dz: Vec<f64> = l.iter().zip(&g).map(|(a, b)| a * (b - mean)).collect();
        let norm2: f64 = dz.iter().map(|x| x * x).sum();
        if norm2.sqrt() <= GRAD_TOL * scale {
            return (f, l, true);
        }
        loop {
            let zn: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a - step * b).collect();
            let ln = softmax(&zn);
            let (fn_, gn) = objective(cost, m, v, &ln);
            if fn_.is_finite() && fn_ < f && fn_ <= f - 1e-4 * step * norm2 {
                z = zn;
                l = ln;
                f = fn_;
                g = gn;
                step *= 2.0;
                break;
            }
            step *= 0.5;
            if step < 1e-20 / scale {
                // no representable decrease left
                return (f, l, true);
            }
        }
    }
    (f, l, false)
}

/// Logits of the stationary tilt: m·e^{-v/θ} for entropy, m·v^{-1/(1-q)} for Rényi.
fn tilt_start(cost: Cost, m: &[f64], v: &[f64]) -> Vec<f64> {
    m.iter()
        .zip(v)
        .map(|(p, x)| match cost {
            Cost::Entropy { theta } => p.ln() - x / theta,
            Cost::Renyi { q } => p.ln() - x.ln() / (1.0 - q),
            Cost::Rigid => p.ln(),
        })
        .collect()
}

/// min over distributions ℓ ≪ base of E_ℓV + I(ℓ‖base), with the minimizer.
pub fn variational_value(model: &KpModel, values: &[f64], base: &[f64]) -> Result<(f64, Vec<f64>)> {
    if values.len() != base.len() {
        return Err(Error::DimensionMismatch(format!("{} values for {} nodes", values.len(), base.len())));
    }
    check_simplex(base, "base")?;
    let cost = cost_of(model)?;
    if let Cost::Renyi { .. } = cost {
        if let Some(&v) = values.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::DomainViolation { what: "EZ continuation value".into(), x: v });
        }
    }
    let support: Vec<usize> = (0..base.len()).filter(|&i| base[i] > 0.0).collect();
    let m: Vec<f64> = support.iter().map(|&i| base[i]).collect();
    let v: Vec<f64> = support.iter().map(|&i| values[i]).collect();
    let expand = |l: &[f64]| {
        let mut out = vec![0.0; base.len()];
        for (k, &i) in support.iter().enumerate() {
            out[i] = l[k];
        }
        out
    };
    if support.len() == 1 || matches!(cost, Cost::Rigid) {
        let ev = m.iter().zip(&v).map(|(a, b)| a * b).sum();
        return Ok((ev, base.to_vec()));
    }
    let runs: Vec<(f64, usize, Vec<f64>, bool)> = (0..RESTARTS)
        .into_par_iter()
        .map(|r| {
            let z0: Vec<f64> = if r == 0 {
                tilt_start(cost, &m, &v)
            } else if r == 1 {
                m.iter().map(|p| p.ln()).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(r as u64);
                m.iter().map(|p| p.ln() + rng.gen_range(-3.0..3.0)).collect()
            };
            let (f, l, ok) = descend(cost, &m, &v, z0);
            (f, r, l, ok)
        })
        .collect();
    let best = runs
        .iter()
        .filter(|r| r.0.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or_else(|| Error::NonConvergence("no restart produced a finite objective".into()))?;
    if !runs.iter().any(|r| r.3) {
        return Err(Error::NonConvergence(format!("simplex minimization did not settle after {RESTARTS} restarts")));
    }
    Ok((best.0, expand(&best.2)))
}

/// Recursive and variational values at one interior node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDuality {
    /// Depth-first index, root first.
    pub node: usize,
    pub recursive: f64,
    pub variational: f64,
    pub base: Vec<f64>,
    pub minimizer: Vec<f64>,
}

/// Both evaluations at every interior node.
pub fn duality_report(model: &KpModel, d: &TemporalLottery) -> Result<Vec<NodeDuality>> {
    fn walk(model: &KpModel, d: &TemporalLottery, counter: &mut usize, out: &mut Vec<NodeDuality>) -> Result<()> {
        let node = *counter;
        *counter += 1;
        if d.is_leaf() {
            return Ok(());
        }
        let values: Vec<f64> = d.branches.iter().map(|b| kp_evaluate(model, &b.child)).collect::<Result<_>>()?;
        let base: Vec<f64> = d.branches.iter().map(|b| b.prob).collect();
        let now = model.u.eval(d.consumption)?;
        let recursive = now + model.beta * model.certainty_equivalent(&values, &base)?;
        let (min, minimizer) = variational_value(model, &values, &base)?;
        out.push(NodeDuality { node, recursive, variational: now + model.beta * min, base, minimizer });
        for b in &d.branches {
            walk(model, &b.child, counter, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(model, d, &mut 0, &mut out)?;
    Ok(out)
}

/// max over interior nodes of |recursive − variational|.
pub fn duality_gap(model: &KpModel, d: &TemporalLottery) -> Result<f64> {
    Ok(duality_report(model, d)?.iter().map(|n| (n.recursive - n.variational).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::{build_parametric, Distribution, Parametric};
    use crate::risk::Felicity;

    fn dd(base: &[f64], alt: &[f64]) -> DiscreteDistortion {
        DiscreteDistortion::new(base.to_vec(), alt.to_vec()).unwrap()
    }

    #[test]
    fn entropy_cost_examples() {
        assert_eq!(cost_relative_entropy(&dd(&[0.3, 0.7], &[0.3, 0.7]), 2.0), 0.0);
        assert!((cost_relative_entropy(&dd(&[0.5, 0.5], &[1.0, 0.0]), 1.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(cost_relative_entropy(&dd(&[1.0, 0.0], &[0.5, 0.5]), 1.0), f64::INFINITY);
    }

    #[test]
    fn renyi_cost_two_forms() {
        let q = renyi_order(-1.0, 0.5).unwrap();
        assert!((q - 2.0 / 3.0).abs() < 1e-15);
        let d = dd(&[0.5, 0.5], &[0.75, 0.25]);
        let c = cost_ez_renyi(&d, &[1.0, 1.0], -1.0, 0.5).unwrap();
        let s: f64 = 0.5 * 1.5f64.powf(q) + 0.5 * 0.5f64.powf(q);
        assert!((c - (s.powf(-1.0 / q) - 1.0)).abs() < 1e-12);
        assert_eq!(cost_ez_renyi(&dd(&[0.4, 0.6], &[0.4, 0.6]), &[2.0, 3.0], -1.0, 0.5).unwrap(), 0.0);
        assert!(matches!(renyi_order(0.0, 0.5), Err(Error::DegenerateQ(_))));
        assert!(matches!(renyi_order(-1.0, 0.0), Err(Error::DegenerateQ(_))));
    }

    #[test]
    fn hs_value_is_log_sum_exp() {
        let theta = 0.7;
        let m = KpModel::linear(RiskAdjustment::exponential(theta).unwrap(), 0.9).unwrap();
        let v = [1.0, 2.5, 0.3];
        let p = [0.2, 0.5, 0.3];
        let (val, l) = variational_value(&m, &v, &p).unwrap();
        let z: f64 = p.iter().zip(&v).map(|(p, v)| p * (-v / theta).exp()).sum();
        assert!((val + theta * z.ln()).abs() < 1e-9);
        for i in 0..3 {
            let tilt = p[i] * (-v[i] / theta).exp() / z;
            assert!((l[i] - tilt).abs() < 1e-6);
        }
    }

    #[test]
    fn ez_value_is_certainty_equivalent() {
        let m = KpModel::new(RiskAdjustment::ez_power(-1.0, 0.5).unwrap(), Felicity::power(0.5).unwrap(), 0.9).unwrap();
        let v = [1.0, 4.0, 2.2];
        let p = [0.3, 0.3, 0.4];
        let (val, l) = variational_value(&m, &v, &p).unwrap();
        assert!((val - m.certainty_equivalent(&v, &p).unwrap()).abs() < 1e-9);
        let ev_min: f64 = l.iter().zip(&v).map(|(a, b)| a * b).sum();
        let ev_base: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!(ev_min <= ev_base);
    }

    #[test]
    fn degenerate_base() {
        let m = KpModel::linear(RiskAdjustment::exponential(1.0).unwrap(), 0.9).unwrap();
        let (val, l) = variational_value(&m, &[3.0, 5.0], &[0.0, 1.0]).unwrap();
        assert_eq!(val, 5.0);
        assert_eq!(l, vec![0.0, 1.0]);
    }

    #[test]
    fn example3_gap() {
        let m = KpModel::linear(RiskAdjustment::exponential(1.0).unwrap(), 1.0).unwrap();
        let ell = Distribution::uniform(&[0.0, 1.0]).unwrap();
        for d in [
            build_parametric(&Parametric::CorrPerfect { c0: 1.0, ell: ell.clone() }).unwrap(),
            build_parametric(&Parametric::Iid { c0: 1.0, ell }).unwrap(),
        ] {
            assert!(duality_gap(&m, &d).unwrap() < 1e-7);
        }
    }

    #[test]
    fn identity_is_rigid() {
        let m = KpModel::linear(RiskAdjustment::Identity, 0.8).unwrap();
        let d = build_parametric(&Parametric::Corr { eps: 0.1, c0: 1.0, x: 3.0, y: 1.0 }).unwrap();
        assert!(duality_gap(&m, &d).unwrap() <= 1e-12);
        for n in duality_report(&m, &d).unwrap() {
            assert_eq!(n.minimizer, n.base);
        }
    }

    #[test]
    fn unsupported_phi() {
        let m = KpModel::linear(RiskAdjustment::hara(-2.0, 0.5).unwrap(), 0.8).unwrap();
        assert!(matches!(variational_value(&m, &[1.0, 2.0], &[0.5, 0.5]), Err(Error::Unsupported(_))));
    }
}
