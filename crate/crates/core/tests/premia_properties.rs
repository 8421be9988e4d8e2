use proptest::prelude::*;

use corrpref::lottery::{build_parametric, Parametric};
use corrpref::premia::{persistence_premium, timing_premium};
use corrpref::risk::{classify, kp_evaluate, samples, Grid, KpModel, RiskAdjustment};

/// IRRA and UPI families with linear felicity.
fn irra_upi() -> impl Strategy<Value = KpModel> {
    let phi = prop_oneof![
        (0.3..5.0f64).prop_map(|t| RiskAdjustment::exponential(t).unwrap()),
        (-4.0..-0.2f64).prop_map(|a| RiskAdjustment::ez_power(a, 1.0).unwrap()),
    ];
    (phi, 0.5..=1.0f64).prop_map(|(phi, beta)| KpModel::linear(phi, beta).unwrap())
}

fn pair() -> impl Strategy<Value = (f64, f64)> {
    (0.5..5.0f64, 0.2..4.0f64).prop_map(|(y, dx)| (y + dx, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn premium_is_a_fraction(m in irra_upi(), (x, y) in pair(), eps in 0.0..=1.0f64) {
        let p = persistence_premium(&m, 1.0, x, y, eps).unwrap().exact_pi;
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(persistence_premium(&m, 1.0, x, y, 0.0).unwrap().exact_pi, 0.0);
        let t = timing_premium(&m, 1.0, 1.0, x, y, eps).unwrap().exact_pi;
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn premium_rises_with_correlation(m in irra_upi(), (x, y) in pair()) {
        let sweep: Vec<f64> = (0..=10).map(|k| persistence_premium(&m, 1.0, x, y, k as f64 / 10.0).unwrap().exact_pi).collect();
        for w in sweep.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "{:?}", sweep);
        }
    }
}

/// The converse instance: x = z̄/(1+β), y = z on an interval where relative
/// risk aversion falls. Value along the correlation family is not monotone.
#[test]
fn decreasing_relative_risk_aversion_breaks_monotonicity() {
    let phi = samples::drra();
    let (z, zbar) = classify(&phi, 1.0, &Grid::default()).drra_witness.expect("witness");
    let beta = ((zbar / z - 1.0) / 2.0).min(1.0);
    let (x, y) = (zbar / (1.0 + beta), z);
    let m = KpModel::linear(phi, beta).unwrap();
    let v: Vec<f64> = (0..=50)
        .map(|k| kp_evaluate(&m, &build_parametric(&Parametric::Corr { eps: k as f64 / 50.0, c0: y, x, y }).unwrap()).unwrap())
        .collect();
    assert!(v.windows(2).any(|w| w[1] > w[0] + 1e-12), "value never rises with correlation");
}
