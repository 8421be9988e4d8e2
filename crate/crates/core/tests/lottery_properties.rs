use proptest::prelude::*;

use corrpref::lottery::{build_parametric, to_matrix_pair, validate_and_canonicalize, Parametric, TemporalLottery as L};
use corrpref::risk::{kp_evaluate, Felicity, KpModel, RiskAdjustment};

/// Uniform-depth trees on a small consumption grid, so that identical
/// subtrees occur and canonicalization has something to merge.
fn tree(depth: u32) -> BoxedStrategy<L> {
    if depth == 0 {
        return (1..=4u8).prop_map(|c| L::leaf(c as f64)).boxed();
    }
    (1..=4u8, prop::collection::vec((1..=4u8, tree(depth - 1)), 1..=3))
        .prop_map(|(c, kids)| {
            let total: f64 = kids.iter().map(|(w, _)| *w as f64).sum();
            L::node(c as f64, kids.into_iter().map(|(w, t)| (w as f64 / total, t)).collect())
        })
        .boxed()
}

fn models() -> Vec<KpModel> {
    vec![
        KpModel::linear(RiskAdjustment::exponential(1.0).unwrap(), 0.9).unwrap(),
        KpModel::new(RiskAdjustment::ez_power(-1.0, 0.5).unwrap(), Felicity::power(0.5).unwrap(), 0.95).unwrap(),
        KpModel::new(RiskAdjustment::hara(-2.0, 0.5).unwrap(), Felicity::Log, 0.8).unwrap(),
        KpModel::linear(RiskAdjustment::Identity, 1.0).unwrap(),
    ]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)
}

fn leaves(d: &L) -> usize {
    if d.is_leaf() {
        1
    } else {
        d.branches.iter().map(|b| leaves(&b.child)).sum()
    }
}

/// Adds `delta` to the consumption of the `k`-th leaf in depth-first order.
fn bump_leaf(d: &mut L, k: &mut usize, delta: f64) -> bool {
    if d.is_leaf() {
        if *k == 0 {
            d.consumption += delta;
            return true;
        }
        *k -= 1;
        return false;
    }
    d.branches.iter_mut().any(|b| bump_leaf(&mut b.child, k, delta))
}

proptest! {
    #[test]
    fn canonicalization_is_idempotent(t in (1..=3u32).prop_flat_map(tree)) {
        let once = validate_and_canonicalize(t).unwrap();
        let twice = validate_and_canonicalize(once.clone()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn value_ignores_canonicalization(t in (1..=3u32).prop_flat_map(tree)) {
        let canon = validate_and_canonicalize(t.clone()).unwrap();
        for m in models() {
            prop_assert!(close(kp_evaluate(&m, &t).unwrap(), kp_evaluate(&m, &canon).unwrap()));
        }
    }

    #[test]
    fn value_ignores_branch_splitting(t in tree(2), which in 0..3usize) {
        let mut split = t.clone();
        let i = which % split.branches.len();
        let half = split.branches[i].clone();
        split.branches[i].prob /= 2.0;
        split.branches.push(corrpref::lottery::Branch { prob: half.prob / 2.0, child: half.child });
        for m in models() {
            prop_assert!(close(kp_evaluate(&m, &t).unwrap(), kp_evaluate(&m, &split).unwrap()));
        }
    }

    #[test]
    fn value_is_monotone_in_consumption(t in tree(2), pick in 0..9usize, delta in 0.01..3.0f64) {
        let mut raised = t.clone();
        let mut k = pick % leaves(&t);
        prop_assert!(bump_leaf(&mut raised, &mut k, delta));
        for m in models() {
            let (a, b) = (kp_evaluate(&m, &t).unwrap(), kp_evaluate(&m, &raised).unwrap());
            // every branch probability is positive, so the rise is strict
            prop_assert!(b > a, "{} -> {}", a, b);
        }
    }

    #[test]
    fn matrix_pair_reconstruction_keeps_value(t in tree(2)) {
        let d = validate_and_canonicalize(t).unwrap();
        let back = to_matrix_pair(&d, 0).unwrap().reconstruct().unwrap();
        for m in models() {
            prop_assert!(close(kp_evaluate(&m, &d).unwrap(), kp_evaluate(&m, &back).unwrap()));
        }
    }

    #[test]
    fn zero_correlation_is_iid(c0 in 0.5..5.0f64, y in 0.5..5.0f64, dx in 0.1..5.0f64) {
        let x = y + dx;
        let corr = build_parametric(&Parametric::Corr { eps: 0.0, c0, x, y }).unwrap();
        let iid = build_parametric(&Parametric::IidScaled { pi: 0.0, c0, x, y }).unwrap();
        prop_assert!(corr.approx_eq(&iid, 1e-12));
    }

    #[test]
    fn correlation_keeps_first_marginal(eps in 0.0..=1.0f64, y in 0.5..5.0f64, dx in 0.1..5.0f64) {
        let x = y + dx;
        let at = |e: f64| build_parametric(&Parametric::Corr { eps: e, c0: 1.0, x, y }).unwrap().marginal(1).unwrap();
        prop_assert!(at(eps).distance(&at(0.0)) <= 1e-12);
    }
}
