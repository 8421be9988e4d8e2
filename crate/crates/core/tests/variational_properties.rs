use proptest::prelude::*;

use corrpref::risk::{Felicity, KpModel, RiskAdjustment};
use corrpref::variational::{cost_ez_renyi, cost_relative_entropy, variational_value, DiscreteDistortion};

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..1.0f64, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

/// A base, two alternatives, positive values and a mixing weight on the same support.
fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (2..=5usize).prop_flat_map(|n| (simplex(n), simplex(n), simplex(n), prop::collection::vec(0.1..20.0f64, n), 0.0..=1.0f64))
}

fn mix(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #[test]
    fn entropy_cost_is_nonnegative_and_convex((m, a, b, _, t) in instance(), theta in 0.1..5.0f64) {
        let c = |l: &[f64]| cost_relative_entropy(&DiscreteDistortion::new(m.clone(), l.to_vec()).unwrap(), theta);
        prop_assert!(c(&a) >= 0.0);
        prop_assert!(c(&m).abs() <= 1e-14);
        prop_assert!(c(&mix(&a, &b, t)) <= t * c(&a) + (1.0 - t) * c(&b) + 1e-12);
    }

    /// The closed form carries the factor E_ℓV and is not convex in ℓ; the factor
    /// it multiplies is.
    #[test]
    fn renyi_cost_is_nonnegative_with_convex_factor((m, a, b, v, t) in instance(), alpha in -5.0..-0.1f64, rho in 0.1..0.9f64) {
        let c = |l: &[f64]| cost_ez_renyi(&DiscreteDistortion::new(m.clone(), l.to_vec()).unwrap(), &v, alpha, rho).unwrap();
        let f = |l: &[f64]| c(l) / dot(l, &v);
        prop_assert!(c(&a) >= -1e-12);
        prop_assert!(c(&m).abs() <= 1e-12 * dot(&m, &v));
        let (fa, fb, fm) = (f(&a), f(&b), f(&mix(&a, &b, t)));
        prop_assert!(fm <= t * fa + (1.0 - t) * fb + 1e-12 * (1.0 + fa + fb), "{} > mix of {} and {}", fm, fa, fb);
    }

    #[test]
    fn minimizer_is_pessimistic((m, _, _, v, _) in instance(), theta in 0.2..5.0f64, alpha in -3.0..-0.2f64) {
        let models = [
            KpModel::new(RiskAdjustment::exponential(theta).unwrap(), Felicity::Log, 0.9).unwrap(),
            KpModel::new(RiskAdjustment::ez_power(alpha, 0.5).unwrap(), Felicity::power(0.5).unwrap(), 0.9).unwrap(),
        ];
        for model in &models {
            let (_, l) = variational_value(model, &v, &m).unwrap();
            prop_assert!(dot(&l, &v) <= dot(&m, &v) + 1e-9);
        }
    }

    #[test]
    fn entropy_minimizer_is_exponential_tilt((m, _, _, v, _) in instance(), theta in 0.2..5.0f64) {
        let model = KpModel::new(RiskAdjustment::exponential(theta).unwrap(), Felicity::Log, 0.9).unwrap();
        let (_, l) = variational_value(&model, &v, &m).unwrap();
        let w: Vec<f64> = m.iter().zip(&v).map(|(p, x)| p * (-x / theta).exp()).collect();
        let s: f64 = w.iter().sum();
        for (li, wi) in l.iter().zip(&w) {
            prop_assert!((li - wi / s).abs() <= 1e-6);
        }
    }
}

#[test]
fn renyi_cost_can_fail_convexity() {
    let m = vec![0.0503, 0.9497];
    let v = [0.1, 12.506];
    let c = |l: &[f64]| cost_ez_renyi(&DiscreteDistortion::new(m.clone(), l.to_vec()).unwrap(), &v, -0.1, 0.1).unwrap();
    let (a, b, t) = ([0.9508, 0.0492], [0.5, 0.5], 0.2039);
    assert!(c(&mix(&a, &b, t)) > t * c(&a) + (1.0 - t) * c(&b));
}
