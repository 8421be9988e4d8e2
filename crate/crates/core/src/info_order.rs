//! Informativeness order via garbling feasibility, and correlation-increasing
//! transformations of two-period lotteries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lottery::{
    to_matrix_pair, validate_and_canonicalize, CanonicalKey, ConditionalForm, Distribution, MatrixPair,
    TemporalLottery, CROSS_TOL,
};
use crate::simplex::phase1;

/// Feasibility threshold on the phase-1 objective.
pub const LP_FEASIBILITY: f64 = 1e-9;

/// Stochastic matrix `g` with `M' = g·M` and `μ'·g = μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarblingWitness {
    pub g: Vec<Vec<f64>>,
    pub residual: f64,
}

impl GarblingWitness {
    fn identity(n: usize) -> Self {
        let g = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self { g, residual: 0.0 }
    }

    /// Witness for the chain `a ≥ b ≥ c` given `self: a ≥ b` and `next: b ≥ c`.
    pub fn compose(&self, next: &GarblingWitness) -> Vec<Vec<f64>> {
        matmul(&next.g, &self.g)
    }
}

/// Outcome of a one-directional informativeness test.
#[derive(Debug, Clone, PartialEq)]
pub enum Informativeness {
    Yes(GarblingWitness),
    No,
    IncomparableMarginals,
}

impl Informativeness {
    pub fn is_yes(&self) -> bool {
        matches!(self, Informativeness::Yes(_))
    }
}

/// Two-directional comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Comparison {
    MoreInformative(GarblingWitness),
    LessInformative(GarblingWitness),
    Equal { forward: GarblingWitness, backward: GarblingWitness },
    Incomparable { marginals_differ: bool },
}

impl Comparison {
    pub fn label(&self) -> &'static str {
        match self {
            Comparison::MoreInformative(_) => "more_informative",
            Comparison::LessInformative(_) => "less",
            Comparison::Equal { .. } => "equal",
            Comparison::Incomparable { .. } => "incomparable",
        }
    }
}

pub(crate) fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..k).map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum()).collect())
        .collect()
}

fn first_branching(d: &TemporalLottery) -> usize {
    let mut node = d;
    let mut depth = 0;
    while node.branches.len() == 1 {
        node = &node.branches[0].child;
        depth += 1;
    }
    depth
}

/// Reindexes the columns of `p` onto the sorted key list `keys`.
fn align(p: &MatrixPair, keys: &[CanonicalKey]) -> Option<Vec<Vec<f64>>> {
    let own = p.outcome_keys();
    let idx: Option<Vec<usize>> = own.iter().map(|k| keys.binary_search(k).ok()).collect();
    let idx = idx?;
    Some(
        p.m.iter()
            .map(|row| {
                let mut out = vec![0.0; keys.len()];
                for (j, &v) in row.iter().enumerate() {
                    out[idx[j]] += v;
                }
                out
            })
            .collect(),
    )
}

fn column_marginal(mu: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let k = m.first().map_or(0, Vec::len);
    (0..k).map(|j| mu.iter().zip(m).map(|(p, row)| p * row[j]).sum()).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max violation of `M' = G·M`, `μ'·G = μ` and unit row sums.
pub fn garbling_residual(g: &[Vec<f64>], m: &[Vec<f64>], mu: &[f64], m2: &[Vec<f64>], mu2: &[f64]) -> f64 {
    let gm = matmul(g, m);
    let mut r: f64 = 0.0;
    for (row, target) in gm.iter().zip(m2) {
        r = r.max(max_diff(row, target));
    }
    for (j, &target) in mu.iter().enumerate() {
        let v: f64 = mu2.iter().zip(g).map(|(p, row)| p * row[j]).sum();
        r = r.max((v - target).abs());
    }
    for row in g {
        r = r.max((row.iter().sum::<f64>() - 1.0).abs());
        for &v in row {
            r = r.max(-v.min(0.0));
        }
    }
    r
}

/// Searches for `G` (n'×n, stochastic) with `m2 = G·m` and `mu2·G = mu`.
pub fn find_garbling(m: &[Vec<f64>], mu: &[f64], m2: &[Vec<f64>], mu2: &[f64]) -> Result<Option<GarblingWitness>> {
    let n = m.len();
    let n2 = m2.len();
    let k = m.first().map_or(0, Vec::len);
    if mu.len() != n || mu2.len() != n2 || m2.iter().chain(m).any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "M is {n}x{k}, M' is {n2}x?, |mu| = {}, |mu'| = {}",
            mu.len(),
            mu2.len()
        )));
    }
    if n == n2 && m == m2 && mu == mu2 {
        return Ok(Some(GarblingWitness::identity(n)));
    }
    // variable (a, b) -> a * n + b
    let nv = n2 * n;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for a in 0..n2 {
        let mut r = vec![0.0; nv];
        for b in 0..n {
            r[a * n + b] = 1.0;
        }
        rows.push(r);
        rhs.push(1.0);
    }
    for a in 0..n2 {
        for j in 0..k {
            let mut r = vec![0.0; nv];
            for b in 0..n {
                r[a * n + b] = m[b][j];
            }
            rows.push(r);
            rhs.push(m2[a][j]);
        }
    }
    for b in 0..n {
        let mut r = vec![0.0; nv];
        for a in 0..n2 {
            r[a * n + b] = mu2[a];
        }
        rows.push(r);
        rhs.push(mu[b]);
    }
    let sol = phase1(&rows, &rhs);
    if sol.infeasibility > LP_FEASIBILITY {
        return Ok(None);
    }
    let g: Vec<Vec<f64>> = (0..n2).map(|a| (0..n).map(|b| sol.x[a * n + b].max(0.0)).collect()).collect();
    let residual = garbling_residual(&g, m, mu, m2, mu2);
    Ok(if residual <= LP_FEASIBILITY { Some(GarblingWitness { g, residual }) } else { None })
}

/// Tests whether `d2`'s information structure is a garbling of `d`'s at `stage`.
pub fn is_more_informative_at(d: &TemporalLottery, d2: &TemporalLottery, stage: usize) -> Result<Informativeness> {
    let p = to_matrix_pair(d, stage)?;
    let q = to_matrix_pair(d2, stage)?;
    if p.prefix != q.prefix {
        return Ok(Informativeness::IncomparableMarginals);
    }
    let mut keys = p.outcome_keys();
    keys.extend(q.outcome_keys());
    keys.sort();
    keys.dedup();
    let (Some(m), Some(m2)) = (align(&p, &keys), align(&q, &keys)) else {
        return Ok(Informativeness::IncomparableMarginals);
    };
    if max_diff(&column_marginal(&p.mu, &m), &column_marginal(&q.mu, &m2)) > CROSS_TOL {
        return Ok(Informativeness::IncomparableMarginals);
    }
    match (p.row_marginal(), q.row_marginal()) {
        (Ok(a), Ok(b)) if a.distance(&b) <= CROSS_TOL => {}
        _ => return Ok(Informativeness::IncomparableMarginals),
    }
    Ok(match find_garbling(&m, &p.mu, &m2, &q.mu)? {
        Some(w) => Informativeness::Yes(w),
        None => Informativeness::No,
    })
}

/// Stage used when none is given: the earliest depth at which either lottery branches.
pub fn auto_stage(d: &TemporalLottery, d2: &TemporalLottery) -> Result<usize> {
    let h = d.horizon();
    if h != d2.horizon() {
        return Err(Error::DimensionMismatch(format!("horizons {h} and {}", d2.horizon())));
    }
    if h < 2 {
        return Err(Error::StageOutOfRange { stage: 0, horizon: h });
    }
    Ok(first_branching(d).min(first_branching(d2)).min(h - 2))
}

/// `d ≥_B d2`: `d2` is a garbling of `d`.
pub fn is_more_informative(d: &TemporalLottery, d2: &TemporalLottery) -> Result<Informativeness> {
    let d = validate_and_canonicalize(d.clone())?;
    let d2 = validate_and_canonicalize(d2.clone())?;
    let stage = auto_stage(&d, &d2)?;
    is_more_informative_at(&d, &d2, stage)
}

/// Tests both directions.
pub fn compare(d: &TemporalLottery, d2: &TemporalLottery) -> Result<Comparison> {
    let fwd = is_more_informative(d, d2)?;
    let bwd = is_more_informative(d2, d)?;
    Ok(match (fwd, bwd) {
        (Informativeness::Yes(forward), Informativeness::Yes(backward)) => Comparison::Equal { forward, backward },
        (Informativeness::Yes(w), _) => Comparison::MoreInformative(w),
        (_, Informativeness::Yes(w)) => Comparison::LessInformative(w),
        (Informativeness::IncomparableMarginals, _) | (_, Informativeness::IncomparableMarginals) => {
            Comparison::Incomparable { marginals_differ: true }
        }
        _ => Comparison::Incomparable { marginals_differ: false },
    })
}

/// Shift of mass `epsilon` toward repeating `c` and `c_prime`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IecitStep {
    pub c: f64,
    pub c_prime: f64,
    pub epsilon: f64,
}

/// Largest admissible shift for the pair `(c, c_prime)` in `cf`.
pub fn iecit_capacity(cf: &ConditionalForm, c: f64, c_prime: f64) -> f64 {
    match (cf.row_index(c), cf.row_index(c_prime)) {
        (Some(i), Some(k)) => (cf.m2_of(c, c_prime) * cf.m1[i]).min(cf.m2_of(c_prime, c) * cf.m1[k]),
        _ => 0.0,
    }
}

/// Applies one transformation: both repeat probabilities rise and both switch
/// probabilities fall, keeping the t=1 marginal fixed.
pub fn apply_iecit(cf: &ConditionalForm, step: IecitStep) -> Result<ConditionalForm> {
    let IecitStep { c, c_prime, epsilon } = step;
    if c == c_prime {
        return Err(Error::ParamOutOfRange(format!("IECIT pair must be distinct, got {c} twice")));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::ParamOutOfRange(format!("IECIT epsilon {epsilon}")));
    }
    let i = cf.row_index(c).filter(|&i| cf.m1[i] > 0.0).ok_or(Error::ZeroMarginal(c))?;
    let k = cf.row_index(c_prime).filter(|&k| cf.m1[k] > 0.0).ok_or(Error::ZeroMarginal(c_prime))?;
    let mut out = cf.clone();
    if epsilon == 0.0 {
        return Ok(out);
    }
    let jc = out.ensure_outcome(c);
    let jp = out.ensure_outcome(c_prime);
    let (a, b) = (epsilon / cf.m1[i], epsilon / cf.m1[k]);
    out.m2[i][jc] += a;
    out.m2[i][jp] -= a;
    out.m2[k][jp] += b;
    out.m2[k][jc] -= b;
    for &(r, col) in &[(i, jc), (i, jp), (k, jp), (k, jc)] {
        let v = out.m2[r][col];
        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(Error::MassOverflow(format!(
                "m2({} | {}) would be {v}",
                out.outcomes[col], out.support[r]
            )));
        }
        out.m2[r][col] = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Applies a chain of steps in order.
pub fn apply_chain(base: &ConditionalForm, chain: &[IecitStep]) -> Result<ConditionalForm> {
    chain.iter().try_fold(base.clone(), |cf, &s| apply_iecit(&cf, s))
}

/// True iff replaying `chain` on `base` reproduces `target` within 1e-9.
pub fn verify_corr_chain(target: &ConditionalForm, base: &ConditionalForm, chain: &[IecitStep]) -> bool {
    apply_chain(base, chain).is_ok_and(|cf| cf.approx_eq(target, CROSS_TOL))
}

/// Every longer prefix of `chain`, applied to the iid lottery on `ell`, must be
/// more informative than every shorter one.
pub fn check_prop3(ell: &Distribution, chain: &[IecitStep]) -> Result<bool> {
    let mut forms = vec![ConditionalForm::iid(1.0, ell)];
    for &s in chain {
        let next = apply_iecit(forms.last().expect("nonempty"), s)?;
        forms.push(next);
    }
    let lots: Vec<TemporalLottery> = forms.iter().map(ConditionalForm::to_lottery).collect::<Result<_>>()?;
    for j in 1..lots.len() {
        for i in 0..j {
            if !is_more_informative(&lots[j], &lots[i])?.is_yes() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lottery::{build_parametric, Parametric};
    use TemporalLottery as L;

    fn half() -> Distribution {
        Distribution::uniform(&[0.0, 1.0]).unwrap()
    }

    #[test]
    fn example1_witness() {
        let d = L::node(
            1.0,
            vec![(0.5, L::node(5.0, vec![(1.0, L::leaf(10.0))])), (0.5, L::node(5.0, vec![(1.0, L::leaf(0.0))]))],
        );
        let d2 = L::node(1.0, vec![(1.0, L::node(5.0, vec![(0.5, L::leaf(10.0)), (0.5, L::leaf(0.0))]))]);
        match is_more_informative(&d, &d2).unwrap() {
            Informativeness::Yes(w) => {
                assert_eq!(w.g.len(), 1);
                assert!((w.g[0][0] - 0.5).abs() < 1e-12 && (w.g[0][1] - 0.5).abs() < 1e-12);
                assert!(w.residual <= 1e-9);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(is_more_informative(&d2, &d).unwrap(), Informativeness::No);
        assert_eq!(compare(&d, &d2).unwrap().label(), "more_informative");
    }

    #[test]
    fn example3_witness() {
        let corr = build_parametric(&Parametric::CorrPerfect { c0: 1.0, ell: half() }).unwrap();
        let iid = build_parametric(&Parametric::Iid { c0: 1.0, ell: half() }).unwrap();
        let Informativeness::Yes(w) = is_more_informative(&corr, &iid).unwrap() else { panic!() };
        for row in &w.g {
            for &v in row {
                assert!((v - 0.5).abs() < 1e-12);
            }
        }
        assert!(!is_more_informative(&iid, &corr).unwrap().is_yes());
    }

    #[test]
    fn reflexive_identity() {
        let d = build_parametric(&Parametric::Corr { eps: 0.4, c0: 1.0, x: 3.0, y: 1.0 }).unwrap();
        let Informativeness::Yes(w) = is_more_informative(&d, &d).unwrap() else { panic!() };
        assert_eq!(w.g, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(compare(&d, &d).unwrap().label(), "equal");
    }

    #[test]
    fn different_marginals_are_incomparable() {
        let a = build_parametric(&Parametric::Iid { c0: 1.0, ell: half() }).unwrap();
        let b = build_parametric(&Parametric::Iid { c0: 1.0, ell: Distribution::uniform(&[0.0, 2.0]).unwrap() }).unwrap();
        assert_eq!(is_more_informative(&a, &b).unwrap(), Informativeness::IncomparableMarginals);
    }

    #[test]
    fn example4_iecit() {
        let iid = ConditionalForm::iid(1.0, &half());
        let step = IecitStep { c: 1.0, c_prime: 0.0, epsilon: 0.25 };
        let out = apply_iecit(&iid, step).unwrap();
        assert!(out.approx_eq(&ConditionalForm::perfectly_correlated(1.0, &half()), 1e-15));
        assert_eq!(out.m1, iid.m1);
        assert!(verify_corr_chain(&out, &iid, &[step]));
        assert!(verify_corr_chain(&iid, &iid, &[]));
        let zero = apply_iecit(&iid, IecitStep { epsilon: 0.0, ..step }).unwrap();
        assert_eq!(zero, iid);
        assert!(matches!(apply_iecit(&iid, IecitStep { epsilon: 0.3, ..step }), Err(Error::MassOverflow(_))));
        assert!(matches!(
            apply_iecit(&iid, IecitStep { c: 7.0, c_prime: 0.0, epsilon: 0.1 }),
            Err(Error::ZeroMarginal(_))
        ));
        assert!((iecit_capacity(&iid, 1.0, 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn prop3_small() {
        assert!(check_prop3(&half(), &[IecitStep { c: 1.0, c_prime: 0.0, epsilon: 0.25 }]).unwrap());
        assert!(check_prop3(&half(), &[]).unwrap());
    }

    #[test]
    fn overflowing_permutation_fails_verification() {
        let ell = Distribution::uniform(&[1.0, 2.0, 3.0]).unwrap();
        let base = ConditionalForm::iid(0.5, &ell);
        let chain = [
            IecitStep { c: 1.0, c_prime: 2.0, epsilon: 1.0 / 9.0 },
            IecitStep { c: 1.0, c_prime: 3.0, epsilon: 1.0 / 9.0 },
        ];
        let target = apply_chain(&base, &chain).unwrap();
        assert!(verify_corr_chain(&target, &base, &chain));
        let greedy = [IecitStep { c: 1.0, c_prime: 2.0, epsilon: 2.0 / 9.0 }];
        assert!(!verify_corr_chain(&target, &base, &greedy));
    }

    #[test]
    fn row_permutation_invariance() {
        let m = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
        let mu = vec![0.25, 0.25, 0.5];
        let m2 = vec![vec![0.5, 0.5]];
        let mu2 = vec![1.0];
        assert!(find_garbling(&m, &mu, &m2, &mu2).unwrap().is_some());
        let pm = vec![m[2].clone(), m[0].clone(), m[1].clone()];
        let pmu = vec![mu[2], mu[0], mu[1]];
        assert!(find_garbling(&pm, &pmu, &m2, &mu2).unwrap().is_some());
    }
}
