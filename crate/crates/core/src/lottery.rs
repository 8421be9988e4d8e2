//! Finite-support temporal lotteries.
//!
//! A [`TemporalLottery`] is a tree: each node pays consumption and branches
//! into child lotteries with given probabilities. Leaves are the final period.
//! Trees are brought to a canonical form (sorted, merged branches) so that
//! structural equality coincides with equality of the underlying object.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for probability sums during validation.
pub const PROB_TOL: f64 = 1e-12;
/// Tolerance for equality across independently built structures.
pub const CROSS_TOL: f64 = 1e-9;

/// Finite distribution over real values, sorted by value with positive masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    points: Vec<(f64, f64)>,
}

impl Distribution {
    /// Builds a distribution from `(value, probability)` pairs. Zero masses are
    /// dropped and repeated values merged.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let mut total = 0.0;
        for &(v, p) in &points {
            if !v.is_finite() {
                return Err(Error::ParamOutOfRange(format!("support value {v}")));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::NonStochastic(format!("probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::NonStochastic(format!("probabilities sum to {total}")));
        }
        let mut pts: Vec<(f64, f64)> = points.into_iter().filter(|&(_, p)| p > 0.0).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (v, p) in pts {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        Ok(Self { points: merged })
    }

    /// Point mass at `v`.
    pub fn degenerate(v: f64) -> Self {
        Self { points: vec![(v, 1.0)] }
    }

    /// Equal weights on the given values.
    pub fn uniform(values: &[f64]) -> Result<Self> {
        let w = 1.0 / values.len() as f64;
        Self::new(values.iter().map(|&v| (v, w)).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mass at `v` (zero if absent).
    pub fn prob_of(&self, v: f64) -> f64 {
        self.points.iter().find(|p| p.0 == v).map_or(0.0, |p| p.1)
    }

    /// Expectation of `f` under the distribution.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().map(|&(v, p)| p * f(v)).sum()
    }

    /// Maximum absolute difference in mass over the union of supports.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for &(v, p) in &self.points {
            d = d.max((p - other.prob_of(v)).abs());
        }
        for &(v, p) in &other.points {
            d = d.max((p - self.prob_of(v)).abs());
        }
        d
    }
}

/// One branch of a temporal lottery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    #[serde(rename = "p")]
    pub prob: f64,
    #[serde(rename = "node")]
    pub child: TemporalLottery,
}

/// Consumption now plus a finite lottery over continuation lotteries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalLottery {
    #[serde(rename = "c")]
    pub consumption: f64,
    #[serde(rename = "next", default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<Branch>,
}

/// Token of a canonical key. Keys compare lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyToken {
    Consumption(u64),
    Open(usize),
    Prob(i64),
    Close,
}

/// Depth-first (consumption, probability) sequence identifying a canonical subtree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(pub Vec<KeyToken>);

fn consumption_bits(c: f64) -> u64 {
    // consumption is finite and nonnegative, where bit order matches numeric order
    if c == 0.0 {
        0
    } else {
        c.to_bits()
    }
}

fn rounded_prob(p: f64) -> i64 {
    (p * 1e12).round() as i64
}

impl TemporalLottery {
    pub fn leaf(c: f64) -> Self {
        Self { consumption: c, branches: Vec::new() }
    }

    /// Raw node; call [`validate_and_canonicalize`] before relying on invariants.
    pub fn node(c: f64, branches: Vec<(f64, TemporalLottery)>) -> Self {
        Self {
            consumption: c,
            branches: branches.into_iter().map(|(prob, child)| Branch { prob, child }).collect(),
        }
    }

    /// Deterministic stream `c_0, c_1, ...`.
    pub fn deterministic(stream: &[f64]) -> Self {
        let mut it = stream.iter().rev();
        let mut d = Self::leaf(*it.next().expect("nonempty stream"));
        for &c in it {
            d = Self::node(c, vec![(1.0, d)]);
        }
        d
    }

    pub fn is_leaf(&self) -> bool {
        self.branches.is_empty()
    }

    /// Number of periods after the root (leaf = 0). Assumes a uniform horizon.
    pub fn horizon(&self) -> usize {
        match self.branches.first() {
            None => 0,
            Some(b) => 1 + b.child.horizon(),
        }
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        let mut out = Vec::new();
        self.push_key(&mut out);
        CanonicalKey(out)
    }

    fn push_key(&self, out: &mut Vec<KeyToken>) {
        out.push(KeyToken::Consumption(consumption_bits(self.consumption)));
        out.push(KeyToken::Open(self.branches.len()));
        for b in &self.branches {
            out.push(KeyToken::Prob(rounded_prob(b.prob)));
            b.child.push_key(out);
        }
        out.push(KeyToken::Close);
    }

    /// Distribution of consumption at period `t`.
    pub fn marginal(&self, t: usize) -> Result<Distribution> {
        let mut acc: Vec<(f64, f64)> = Vec::new();
        self.collect_marginal(t, 1.0, &mut acc)?;
        let total: f64 = acc.iter().map(|p| p.1).sum();
        // renormalize accumulated rounding so validation at 1e-12 succeeds
        Distribution::new(acc.into_iter().map(|(v, p)| (v, p / total)).collect())
    }

    fn collect_marginal(&self, t: usize, w: f64, acc: &mut Vec<(f64, f64)>) -> Result<()> {
        if t == 0 {
            acc.push((self.consumption, w));
            return Ok(());
        }
        if self.is_leaf() {
            return Err(Error::StageOutOfRange { stage: t, horizon: 0 });
        }
        for b in &self.branches {
            b.child.collect_marginal(t - 1, w * b.prob, acc)?;
        }
        Ok(())
    }

    /// Parses the JSON format and canonicalizes.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: TemporalLottery = serde_json::from_str(s).map_err(|e| Error::Json(e.to_string()))?;
        validate_and_canonicalize(raw)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("lottery serializes")
    }

    /// Canonical structural equality with probabilities compared within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.consumption.to_bits() == other.consumption.to_bits()
            && self.branches.len() == other.branches.len()
            && self
                .branches
                .iter()
                .zip(&other.branches)
                .all(|(a, b)| (a.prob - b.prob).abs() <= tol && a.child.approx_eq(&b.child, tol))
    }
}

/// Validates a raw tree and returns its canonical form.
pub fn validate_and_canonicalize(raw: TemporalLottery) -> Result<TemporalLottery> {
    canonicalize_node(raw).map(|(d, _)| d)
}

fn canonicalize_node(raw: TemporalLottery) -> Result<(TemporalLottery, usize)> {
    let c = raw.consumption;
    if !c.is_finite() || c < 0.0 {
        return Err(Error::NegativeConsumption(c));
    }
    let c = if c == 0.0 { 0.0 } else { c };
    if raw.branches.is_empty() {
        return Ok((TemporalLottery::leaf(c), 0));
    }
    let mut total = 0.0;
    let mut kids: Vec<(f64, TemporalLottery, usize)> = Vec::with_capacity(raw.branches.len());
    for b in raw.branches {
        if !b.prob.is_finite() || b.prob < 0.0 || b.prob > 1.0 + PROB_TOL {
            return Err(Error::NonStochastic(format!("branch probability {}", b.prob)));
        }
        total += b.prob;
        let (child, depth) = canonicalize_node(b.child)?;
        kids.push((b.prob, child, depth));
    }
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::NonStochastic(format!("branch probabilities sum to {total}")));
    }
    let depth = kids[0].2;
    if let Some(k) = kids.iter().find(|k| k.2 != depth) {
        return Err(Error::RaggedHorizon(depth + 1, k.2 + 1));
    }
    let mut keyed: Vec<(CanonicalKey, f64, TemporalLottery)> = kids
        .into_iter()
        .filter(|k| k.0 > 0.0)
        .map(|(p, child, _)| (child.canonical_key(), p, child))
        .collect();
    if keyed.is_empty() {
        return Err(Error::NonStochastic("all branch probabilities are zero".into()));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut branches: Vec<Branch> = Vec::with_capacity(keyed.len());
    let mut last_key: Option<CanonicalKey> = None;
    for (key, p, child) in keyed {
        if last_key.as_ref() == Some(&key) {
            branches.last_mut().expect("merged branch exists").prob += p;
        } else {
            branches.push(Branch { prob: p, child });
            last_key = Some(key);
        }
    }
    Ok((TemporalLottery { consumption: c, branches }, depth + 1))
}

/// Matrix-vector description of the lottery faced after a deterministic prefix.
///
/// Rows are the branches at `stage` (consumption at `stage + 1` together with
/// its continuation). Columns are the distinct continuation subtrees one
/// period later. `m[i][j]` is the probability of column `j` given row `i`,
/// and `mu[i]` the probability of row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPair {
    pub stage: usize,
    pub prefix: Vec<f64>,
    pub row_consumption: Vec<f64>,
    pub outcomes: Vec<TemporalLottery>,
    pub m: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
}

impl MatrixPair {
    pub fn outcome_keys(&self) -> Vec<CanonicalKey> {
        self.outcomes.iter().map(TemporalLottery::canonical_key).collect()
    }

    /// Distribution of consumption at `stage + 1`.
    pub fn row_marginal(&self) -> Result<Distribution> {
        Distribution::new(self.row_consumption.iter().copied().zip(self.mu.iter().copied()).collect())
    }

    /// Rebuilds the lottery described by the pair.
    pub fn reconstruct(&self) -> Result<TemporalLottery> {
        let rows: Vec<(f64, TemporalLottery)> = self
            .row_consumption
            .iter()
            .zip(&self.m)
            .zip(&self.mu)
            .map(|((&c, row), &p)| {
                let kids = row
                    .iter()
                    .zip(&self.outcomes)
                    .filter(|(q, _)| **q > 0.0)
                    .map(|(&q, o)| (q, o.clone()))
                    .collect();
                (p, TemporalLottery::node(c, kids))
            })
            .collect();
        let (last, init) = self.prefix.split_last().expect("prefix holds the stage node");
        let mut d = TemporalLottery::node(*last, rows);
        for &c in init.iter().rev() {
            d = TemporalLottery::node(c, vec![(1.0, d)]);
        }
        validate_and_canonicalize(d)
    }
}

/// Extracts the matrix pair at `stage`. The lottery must have a single branch
/// at every depth before `stage` and a horizon of at least `stage + 2`.
pub fn to_matrix_pair(d: &TemporalLottery, stage: usize) -> Result<MatrixPair> {
    let horizon = d.horizon();
    if stage + 2 > horizon {
        return Err(Error::StageOutOfRange { stage, horizon });
    }
    let mut prefix = vec![d.consumption];
    let mut node = d;
    for depth in 0..stage {
        if node.branches.len() != 1 {
            return Err(Error::ParamOutOfRange(format!(
                "lottery branches at depth {depth}, before stage {stage}"
            )));
        }
        node = &node.branches[0].child;
        prefix.push(node.consumption);
    }
    let mut keyed: Vec<(CanonicalKey, TemporalLottery)> = Vec::new();
    for b in &node.branches {
        for g in &b.child.branches {
            keyed.push((g.child.canonical_key(), g.child.clone()));
        }
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let keys: Vec<CanonicalKey> = keyed.iter().map(|k| k.0.clone()).collect();
    let mut m = Vec::with_capacity(node.branches.len());
    for b in &node.branches {
        let mut row = vec![0.0; keys.len()];
        for g in &b.child.branches {
            let j = keys.binary_search(&g.child.canonical_key()).expect("column present");
            row[j] += g.prob;
        }
        m.push(row);
    }
    Ok(MatrixPair {
        stage,
        prefix,
        row_consumption: node.branches.iter().map(|b| b.child.consumption).collect(),
        outcomes: keyed.into_iter().map(|k| k.1).collect(),
        m,
        mu: node.branches.iter().map(|b| b.prob).collect(),
    })
}

/// Two-period lottery written as a t=1 marginal and t=2 conditionals.
///
/// `m2[i][j]` is the probability of `outcomes[j]` at t=2 given `support[i]` at t=1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalForm {
    pub c0: f64,
    pub support: Vec<f64>,
    pub m1: Vec<f64>,
    pub outcomes: Vec<f64>,
    pub m2: Vec<Vec<f64>>,
}

impl ConditionalForm {
    /// The iid lottery: consumption at t=1 and t=2 independent, each drawn from `ell`.
    pub fn iid(c0: f64, ell: &Distribution) -> Self {
        let support = ell.values();
        let probs = ell.probs();
        Self {
            c0,
            support: support.clone(),
            m1: probs.clone(),
            outcomes: support,
            m2: vec![probs; ell.len()],
        }
    }

    /// The perfectly correlated lottery: t=2 repeats t=1.
    pub fn perfectly_correlated(c0: f64, ell: &Distribution) -> Self {
        let n = ell.len();
        let m2 = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self { c0, support: ell.values(), m1: ell.probs(), outcomes: ell.values(), m2 }
    }

    pub fn row_index(&self, c: f64) -> Option<usize> {
        self.support.iter().position(|&s| s == c)
    }

    pub fn col_index(&self, c: f64) -> Option<usize> {
        self.outcomes.iter().position(|&s| s == c)
    }

    /// Conditional probability of `next` at t=2 given `now` at t=1.
    pub fn m2_of(&self, now: f64, next: f64) -> f64 {
        match (self.row_index(now), self.col_index(next)) {
            (Some(i), Some(j)) => self.m2[i][j],
            _ => 0.0,
        }
    }

    /// Inserts `c` as an outcome column (zero mass) if absent; returns its index.
    pub fn ensure_outcome(&mut self, c: f64) -> usize {
        if let Some(j) = self.col_index(c) {
            return j;
        }
        let j = self.outcomes.partition_point(|&o| o < c);
        self.outcomes.insert(j, c);
        for row in &mut self.m2 {
            row.insert(j, 0.0);
        }
        j
    }

    /// Entrywise comparison over the union of supports and outcomes.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.c0 != other.c0 {
            return false;
        }
        let mut rows: Vec<f64> = self.support.iter().chain(&other.support).copied().collect();
        rows.sort_by(f64::total_cmp);
        rows.dedup();
        let mut cols: Vec<f64> = self.outcomes.iter().chain(&other.outcomes).copied().collect();
        cols.sort_by(f64::total_cmp);
        cols.dedup();
        let m1 = |cf: &Self, c: f64| cf.row_index(c).map_or(0.0, |i| cf.m1[i]);
        rows.iter().all(|&r| {
            (m1(self, r) - m1(other, r)).abs() <= tol
                && cols.iter().all(|&c| (self.m2_of(r, c) - other.m2_of(r, c)).abs() <= tol)
        })
    }

    /// The lottery (c0, ⊕ m1(c) (c, ⊕ m2(c'|c) c')).
    pub fn to_lottery(&self) -> Result<TemporalLottery> {
        let rows = self
            .support
            .iter()
            .zip(&self.m1)
            .zip(&self.m2)
            .map(|((&c, &p), row)| {
                let kids = self
                    .outcomes
                    .iter()
                    .zip(row)
                    .filter(|(_, q)| **q > 0.0)
                    .map(|(&o, &q)| (q, TemporalLottery::leaf(o)))
                    .collect();
                (p, TemporalLottery::node(c, kids))
            })
            .collect();
        validate_and_canonicalize(TemporalLottery::node(self.c0, rows))
    }
}

/// Reads a two-period lottery as (m1, m2). Fails if two branches share t=1
/// consumption but differ in continuation.
pub fn to_conditional_form(d: &TemporalLottery) -> Result<ConditionalForm> {
    let d = validate_and_canonicalize(d.clone())?;
    let horizon = d.horizon();
    if horizon != 2 {
        return Err(Error::StageOutOfRange { stage: 2, horizon });
    }
    let mut support: Vec<f64> = Vec::new();
    let mut m1: Vec<f64> = Vec::new();
    for b in &d.branches {
        let c = b.child.consumption;
        if support.contains(&c) {
            return Err(Error::NotInMStar(format!("consumption {c} at t=1 has two continuations")));
        }
        support.push(c);
        m1.push(b.prob);
    }
    let mut outcomes: Vec<f64> = d
        .branches
        .iter()
        .flat_map(|b| b.child.branches.iter().map(|g| g.child.consumption))
        .collect();
    outcomes.sort_by(f64::total_cmp);
    outcomes.dedup();
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by(|&a, &b| support[a].total_cmp(&support[b]));
    let mut m2 = Vec::with_capacity(support.len());
    for &i in &order {
        let mut row = vec![0.0; outcomes.len()];
        for g in &d.branches[i].child.branches {
            let j = outcomes.iter().position(|&o| o == g.child.consumption).expect("outcome present");
            row[j] += g.prob;
        }
        m2.push(row);
    }
    Ok(ConditionalForm {
        c0: d.consumption,
        support: order.iter().map(|&i| support[i]).collect(),
        m1: order.iter().map(|&i| m1[i]).collect(),
        outcomes,
        m2,
    })
}

/// Named parametric lotteries.
#[derive(Debug, Clone, PartialEq)]
pub enum Parametric {
    /// (c0, ⊕ ℓ(c)(c, ℓ)).
    Iid { c0: f64, ell: Distribution },
    /// (c0, ½(x, (½+ε/2)x ⊕ (½−ε/2)y) ⊕ ½(y, (½−ε/2)x ⊕ (½+ε/2)y)).
    Corr { eps: f64, c0: f64, x: f64, y: f64 },
    /// The iid half-half lottery on x(1−π), y(1−π) after c0.
    IidScaled { pi: f64, c0: f64, x: f64, y: f64 },
    /// (c0, ½(k, (½+ε/2)x ⊕ (½−ε/2)y) ⊕ ½(k, (½−ε/2)x ⊕ (½+ε/2)y)).
    Gradual { eps: f64, c0: f64, k: f64, x: f64, y: f64 },
    /// (c0, ½(k(1−π), x(1−π)) ⊕ ½(k(1−π), y(1−π))): all risk resolved at t=1.
    Early { pi: f64, c0: f64, k: f64, x: f64, y: f64 },
    /// (c0, ⊕ ℓ(c)(c, c)).
    CorrPerfect { c0: f64, ell: Distribution },
    /// (c0, ½(x, y) ⊕ ½(y, x)).
    NegCorr { c0: f64, x: f64, y: f64 },
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(format!("{name} = {v} not in [0,1]")))
    }
}

fn ordered(x: f64, y: f64) -> Result<()> {
    if x > y && y > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(format!("need x > y > 0, got x = {x}, y = {y}")))
    }
}

fn two_point(px: f64, x: f64, y: f64) -> TemporalLottery {
    TemporalLottery::node(0.0, vec![(px, TemporalLottery::leaf(x)), (1.0 - px, TemporalLottery::leaf(y))])
}

fn with_c(mut d: TemporalLottery, c: f64) -> TemporalLottery {
    d.consumption = c;
    d
}

/// Builds a named parametric lottery in canonical form.
pub fn build_parametric(kind: &Parametric) -> Result<TemporalLottery> {
    use TemporalLottery as L;
    let raw = match *kind {
        Parametric::Iid { c0, ref ell } => {
            let cont = |c: f64| L::node(c, ell.points().iter().map(|&(v, p)| (p, L::leaf(v))).collect());
            L::node(c0, ell.points().iter().map(|&(c, p)| (p, cont(c))).collect())
        }
        Parametric::Corr { eps, c0, x, y } => {
            unit("eps", eps)?;
            ordered(x, y)?;
            let hi = 0.5 + eps / 2.0;
            L::node(c0, vec![(0.5, with_c(two_point(hi, x, y), x)), (0.5, with_c(two_point(1.0 - hi, x, y), y))])
        }
        Parametric::IidScaled { pi, c0, x, y } => {
            unit("pi", pi)?;
            ordered(x, y)?;
            let (xs, ys) = (x * (1.0 - pi), y * (1.0 - pi));
            L::node(c0, vec![(0.5, with_c(two_point(0.5, xs, ys), xs)), (0.5, with_c(two_point(0.5, xs, ys), ys))])
        }
        Parametric::Gradual { eps, c0, k, x, y } => {
            unit("eps", eps)?;
            ordered(x, y)?;
            let hi = 0.5 + eps / 2.0;
            L::node(c0, vec![(0.5, with_c(two_point(hi, x, y), k)), (0.5, with_c(two_point(1.0 - hi, x, y), k))])
        }
        Parametric::Early { pi, c0, k, x, y } => {
            unit("pi", pi)?;
            ordered(x, y)?;
            let s = 1.0 - pi;
            L::node(
                c0,
                vec![
                    (0.5, L::node(k * s, vec![(1.0, L::leaf(x * s))])),
                    (0.5, L::node(k * s, vec![(1.0, L::leaf(y * s))])),
                ],
            )
        }
        Parametric::CorrPerfect { c0, ref ell } => L::node(
            c0,
            ell.points().iter().map(|&(c, p)| (p, L::node(c, vec![(1.0, L::leaf(c))]))).collect(),
        ),
        Parametric::NegCorr { c0, x, y } => {
            if !(x > 0.0 && y > 0.0 && x != y) {
                return Err(Error::ParamOutOfRange(format!("need distinct positive x, y, got {x}, {y}")));
            }
            L::node(
                c0,
                vec![
                    (0.5, L::node(x, vec![(1.0, L::leaf(y))])),
                    (0.5, L::node(y, vec![(1.0, L::leaf(x))])),
                ],
            )
        }
    };
    validate_and_canonicalize(raw)
}

/// Orders lotteries by canonical key.
pub fn canonical_cmp(a: &TemporalLottery, b: &TemporalLottery) -> Ordering {
    a.canonical_key().cmp(&b.canonical_key())
}
