//! Randomized property suites: correlation aversion along IECIT chains,
//! the constructive converse for DRRA adjustments, preference for
//! information, and Blackwell monotonicity of chains.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_order::{apply_iecit, check_prop3, iecit_capacity, IecitStep};
use crate::lottery::{build_parametric, ConditionalForm, Distribution, Parametric, TemporalLottery};
use crate::risk::{classify, er_measure, kp_evaluate, Felicity, Grid, KpModel, RiskAdjustment};
use crate::variational::duality_gap;

/// Gap above which a comparison counts as a strict violation.
pub const STRICT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub instance: usize,
    pub observed: f64,
    pub expected: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub cases_run: usize,
    pub violations: Vec<Violation>,
    /// Named tallies that do not count as violations.
    #[serde(default)]
    pub counts: BTreeMap<String, usize>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// How the pairs of an IECIT chain are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMode {
    /// Every step moves mass on one pair drawn once per chain.
    SinglePair,
    /// Each step draws a fresh pair.
    MixedPairs,
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Flat Dirichlet draw.
fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Support of 2–4 points, log-uniform on [lo, hi], with Dirichlet weights.
pub fn random_distribution(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Result<Distribution> {
    let k = rng.gen_range(2..=4);
    let p = dirichlet(rng, k);
    Distribution::new((0..k).map(|i| (log_uniform(rng, lo, hi), p[i])).collect())
}

/// A random distribution ℓ and an IECIT chain of length 1–5 starting from iid(ℓ).
pub fn random_chain(rng: &mut ChaCha8Rng, mode: ChainMode) -> Result<(Distribution, Vec<IecitStep>)> {
    let ell = random_distribution(rng, 0.1, 20.0)?;
    let sup = ell.values();
    let pick = |rng: &mut ChaCha8Rng| {
        let i = rng.gen_range(0..sup.len());
        let mut j = rng.gen_range(0..sup.len() - 1);
        if j >= i {
            j += 1;
        }
        (sup[i], sup[j])
    };
    let pair = pick(rng);
    let mut cf = ConditionalForm::iid(1.0, &ell);
    let mut chain = Vec::new();
    for _ in 0..rng.gen_range(1..=5) {
        let (c, c_prime) = match mode {
            ChainMode::SinglePair => pair,
            ChainMode::MixedPairs => pick(rng),
        };
        let epsilon = rng.gen::<f64>() * iecit_capacity(&cf, c, c_prime);
        let step = IecitStep { c, c_prime, epsilon };
        cf = apply_iecit(&cf, step)?;
        chain.push(step);
    }
    Ok((ell, chain))
}

/// Random tree of the given width and depth with consumption log-uniform on [lo, hi].
pub fn random_tree(rng: &mut ChaCha8Rng, width: usize, depth: usize, lo: f64, hi: f64) -> TemporalLottery {
    let c = log_uniform(rng, lo, hi);
    if depth == 0 {
        return TemporalLottery::leaf(c);
    }
    let p = dirichlet(rng, width);
    TemporalLottery::node(c, p.into_iter().map(|q| (q, random_tree(rng, width, depth - 1, lo, hi))).collect())
}

/// Felicities whose values stay inside the domain of φ.
fn random_felicity(rng: &mut ChaCha8Rng, phi: &RiskAdjustment) -> Felicity {
    let power = Felicity::Power { rho: rng.gen_range(0.1..0.9) };
    if phi.domain().lo.is_finite() {
        if rng.gen_bool(0.5) {
            Felicity::Linear
        } else {
            power
        }
    } else {
        match rng.gen_range(0..3) {
            0 => Felicity::Linear,
            1 => power,
            _ => Felicity::Log,
        }
    }
}

fn chain_values(model: &KpModel, ell: &Distribution, chain: &[IecitStep]) -> Result<Vec<f64>> {
    let mut cf = ConditionalForm::iid(1.0, ell);
    let mut out = vec![kp_evaluate(model, &cf.to_lottery()?)?];
    for &s in chain {
        cf = apply_iecit(&cf, s)?;
        out.push(kp_evaluate(model, &cf.to_lottery()?)?);
    }
    Ok(out)
}

/// Runs `n` seeded cases in parallel. Each case yields an optional violation
/// and whether it counts toward the `tally` entry.
fn run_cases<F>(suite: &str, n: usize, seed: u64, tally: Option<&str>, case: F) -> SuiteReport
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<(Option<Violation>, bool)> + Sync,
{
    let results: Vec<Result<(Option<Violation>, bool)>> = (0..n).into_par_iter().map(|i| case(i, &mut case_rng(seed, i))).collect();
    let mut counts = BTreeMap::new();
    counts.insert("evaluation_errors".to_string(), results.iter().filter(|r| r.is_err()).count());
    if let Some(name) = tally {
        counts.insert(name.to_string(), results.iter().filter(|r| matches!(r, Ok((_, true)))).count());
    }
    SuiteReport {
        suite: suite.into(),
        seed,
        cases_run: n,
        violations: results.into_iter().filter_map(|r| r.ok().and_then(|r| r.0)).collect(),
        counts,
    }
}

/// V must not rise along an IECIT chain when φ is IRRA.
pub fn theorem1_forward(phi: &RiskAdjustment, n: usize, seed: u64) -> SuiteReport {
    theorem1_forward_with(phi, n, seed, ChainMode::SinglePair)
}

pub fn theorem1_forward_with(phi: &RiskAdjustment, n: usize, seed: u64, mode: ChainMode) -> SuiteReport {
    let mut report = run_cases("theorem1_forward", n, seed, None, |i, rng| {
        let (ell, chain) = random_chain(rng, mode)?;
        let beta = rng.gen_range(0.05..=1.0);
        let model = KpModel::new(phi.clone(), random_felicity(rng, phi), beta)?;
        let v = chain_values(&model, &ell, &chain)?;
        let violation = v.windows(2).enumerate().find_map(|(k, w)| {
            (w[1] > w[0] + STRICT_TOL * w[0].abs().max(1.0)).then(|| Violation {
                instance: i,
                observed: w[1] - w[0],
                expected: 0.0,
                detail: format!("step {k} raised V; beta {beta}, u {}, chain {chain:?}", model.u.name()),
            })
        });
        Ok((violation, false))
    });
    if mode == ChainMode::MixedPairs {
        report.suite.push_str("_mixed_pairs");
    }
    report
}

/// Builds the two-point instance from a decreasing-R interval and searches
/// the ε-family for V(d¹) > V(d^ε). The violations found are the outcome.
pub fn theorem1_converse(phi: &RiskAdjustment) -> Result<SuiteReport> {
    let c = classify(phi, 1.0, &Grid::default());
    let (z, zbar) = match (c.irra, c.drra_witness) {
        (false, Some(w)) => w,
        _ => return Err(Error::NoWitness(format!("{} shows no decreasing relative risk aversion on the grid", phi.name()))),
    };
    let beta = ((zbar / z - 1.0) / 2.0).min(1.0);
    let (x, y) = (zbar / (1.0 + beta), z);
    let model = KpModel::linear(phi.clone(), beta)?;
    let value = |eps: f64| kp_evaluate(&model, &build_parametric(&Parametric::Corr { eps, c0: y, x, y })?);
    let top = value(1.0)?;
    let grid: Vec<f64> = (0..200).map(|k| k as f64 / 200.0).collect();
    let mut violations = Vec::new();
    for (i, &eps) in grid.iter().enumerate() {
        let v = value(eps)?;
        if top - v > STRICT_TOL * v.abs().max(1.0) {
            violations.push(Violation {
                instance: i,
                observed: top - v,
                expected: 0.0,
                detail: format!("eps {eps}: V(1) > V(eps) with beta {beta}, x {x}, y {y}"),
            });
        }
    }
    let mut counts = BTreeMap::new();
    counts.insert("eps_points".to_string(), grid.len());
    Ok(SuiteReport { suite: "theorem1_converse".into(), seed: 0, cases_run: grid.len(), violations, counts })
}

/// Consumption range whose utilities stay inside the domain of φ for
/// three-period sums.
fn consumption_range(phi: &RiskAdjustment, beta: f64) -> Result<(f64, f64)> {
    let dom = phi.domain();
    let reach = 1.0 + beta + beta * beta;
    let hi = if dom.hi.is_finite() { (0.99 * dom.hi / reach).min(20.0) } else { 20.0 };
    let lo = if dom.lo.is_finite() && dom.lo > 0.0 { (dom.lo * 1.01).max(0.1) } else { 0.1f64.min(hi / 4.0) };
    if !(lo > 0.0 && hi > 2.0 * lo) {
        return Err(Error::ParamOutOfRange(format!("no usable consumption range inside {}", phi.name())));
    }
    Ok((lo, hi))
}

/// Sign verdict of ER(·, a) on [lo, hi]: Some(1) nonnegative, Some(−1)
/// nonpositive, Some(0) zero throughout, None mixed.
fn er_verdict(phi: &RiskAdjustment, beta: f64, a: f64, lo: f64, hi: f64) -> Option<i8> {
    let vals: Vec<f64> = (0..50)
        .map(|k| lo + (hi - lo) * k as f64 / 49.0)
        .filter_map(|w| er_measure(phi, beta, w, a).ok())
        .collect();
    let tol = 1e-12;
    let scale = vals.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    match (vals.iter().all(|&v| v >= -tol * scale.max(1.0)), vals.iter().all(|&v| v <= tol * scale.max(1.0))) {
        (true, true) => Some(0),
        (true, false) => Some(1),
        (false, true) => Some(-1),
        (false, false) => None,
    }
}

/// Early versus late resolution of the same t=2 lotteries, checked against
/// the sign of ER at the realized arguments.
pub fn prop1_suite(phi: &RiskAdjustment, beta: f64, n: usize, seed: u64) -> Result<SuiteReport> {
    let (lo, hi) = consumption_range(phi, beta)?;
    let model = KpModel::linear(phi.clone(), beta)?;
    Ok(run_cases("prop1", n, seed, Some("late_preferred"), |i, rng| {
        let k = rng.gen_range(2..=3);
        let pi = dirichlet(rng, k);
        let (c0, c1) = (log_uniform(rng, lo, hi), log_uniform(rng, lo, hi));
        let subs: Vec<TemporalLottery> = (0..k)
            .map(|_| {
                let m = random_distribution(rng, lo, hi)?;
                let c2 = log_uniform(rng, lo, hi);
                Ok(TemporalLottery::node(c2, m.points().iter().map(|&(v, p)| (p, TemporalLottery::leaf(v))).collect()))
            })
            .collect::<Result<_>>()?;
        let early = TemporalLottery::node(
            c0,
            subs.iter().zip(&pi).map(|(s, &p)| (p, TemporalLottery::node(c1, vec![(1.0, s.clone())]))).collect(),
        );
        let late = TemporalLottery::node(c0, vec![(1.0, TemporalLottery::node(c1, subs.iter().cloned().zip(pi).map(|(s, p)| (p, s)).collect()))]);
        let w: Vec<f64> = subs.iter().map(|s| kp_evaluate(&model, s)).collect::<Result<_>>()?;
        let (wlo, whi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let diff = kp_evaluate(&model, &early)? - kp_evaluate(&model, &late)?;
        let tol = STRICT_TOL * whi.abs().max(1.0);
        let bad = match er_verdict(phi, beta, c1, wlo, whi) {
            Some(1) => diff < -tol,
            Some(-1) => diff > tol,
            Some(_) => diff.abs() > tol,
            None => false,
        };
        let violation = bad.then(|| Violation { instance: i, observed: diff, expected: 0.0, detail: format!("c1 {c1}, continuation values {w:?}") });
        Ok((violation, diff < -tol))
    }))
}

/// Every later member of a random IECIT chain is Blackwell-above every earlier one.
pub fn prop3_suite(n: usize, seed: u64, mode: ChainMode) -> SuiteReport {
    run_cases("prop3", n, seed, None, |i, rng| {
        let (ell, chain) = random_chain(rng, mode)?;
        let violation = (!check_prop3(&ell, &chain)?).then(|| Violation {
            instance: i,
            observed: 0.0,
            expected: 1.0,
            detail: format!("no garbling along chain {chain:?} on {:?}", ell.points()),
        });
        Ok((violation, false))
    })
}

/// Recursive vs variational value at every interior node of `n` random
/// width-3, depth-2 trees. Returns the report (gap > `tol` is a violation)
/// and the largest gap seen.
pub fn duality_suite(model: &KpModel, n: usize, seed: u64, tol: f64) -> (SuiteReport, f64) {
    let gaps: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| duality_gap(model, &random_tree(&mut case_rng(seed, i), 3, 2, 0.1, 20.0)))
        .collect();
    let max_gap = gaps.iter().filter_map(|g| g.as_ref().ok()).fold(0.0, |a: f64, &g| a.max(g));
    let violations = gaps
        .iter()
        .enumerate()
        .filter_map(|(i, g)| match g {
            Ok(g) if *g > tol => Some(Violation { instance: i, observed: *g, expected: 0.0, detail: format!("gap above {tol:e}") }),
            _ => None,
        })
        .collect();
    let mut counts = BTreeMap::new();
    counts.insert("evaluation_errors".to_string(), gaps.iter().filter(|g| g.is_err()).count());
    (SuiteReport { suite: "duality".into(), seed, cases_run: n, violations, counts }, max_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::samples;

    #[test]
    fn chains_respect_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (ell, chain) = random_chain(&mut rng, ChainMode::SinglePair).unwrap();
            assert!((1..=5).contains(&chain.len()));
            assert!(chain.iter().all(|s| s.c == chain[0].c && s.c_prime == chain[0].c_prime));
            assert!(ell.len() >= 2 && ell.len() <= 4);
        }
    }

    #[test]
    fn deterministic_by_seed() {
        let phi = RiskAdjustment::exponential(1.0).unwrap();
        let a = theorem1_forward(&phi, 20, 11);
        let b = theorem1_forward(&phi, 20, 11);
        assert_eq!(a, b);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<SuiteReport>(&json).unwrap(), a);
    }

    #[test]
    fn forward_small_runs() {
        for phi in [RiskAdjustment::exponential(1.0).unwrap(), RiskAdjustment::ez_power(-1.0, 0.5).unwrap(), RiskAdjustment::Identity] {
            let r = theorem1_forward(&phi, 60, 3);
            assert!(r.passed(), "{}: {:?}", phi.name(), r.violations.first());
            assert_eq!(r.counts["evaluation_errors"], 0);
        }
    }

    #[test]
    fn converse_cases() {
        assert!(!theorem1_converse(&RiskAdjustment::hara(-0.5, -0.4).unwrap()).unwrap().passed());
        assert!(!theorem1_converse(&samples::drra()).unwrap().passed());
        assert!(matches!(theorem1_converse(&RiskAdjustment::exponential(1.0).unwrap()), Err(Error::NoWitness(_))));
    }

    #[test]
    fn information_preferences() {
        let r = prop1_suite(&RiskAdjustment::exponential(1.0).unwrap(), 1.0, 50, 5).unwrap();
        assert!(r.passed());
        let r = prop1_suite(&RiskAdjustment::ez_power(-1.0, 0.5).unwrap(), 0.95, 50, 5).unwrap();
        assert!(r.passed() && r.counts["late_preferred"] == 0);
        let r = prop1_suite(&samples::quadratic(), 0.95, 200, 5).unwrap();
        assert!(r.passed() && r.counts["late_preferred"] > 0, "{:?}", r.counts);
    }

    #[test]
    fn prop3_small_run() {
        assert!(prop3_suite(40, 1, ChainMode::SinglePair).passed());
    }
}
