//! Risk adjustments φ with analytic derivatives and inverses.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::roots::newton_bracketed;

/// Interval of admissible utility arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Domain {
    pub const REALS: Domain = Domain { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_closed: false, hi_closed: false };

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        x.is_finite() && above && below
    }

    pub fn interior(&self, x: f64) -> bool {
        x.is_finite() && x > self.lo && x < self.hi
    }
}

/// Derivative oracle for a user-supplied φ: `f(x, order)` for orders 0..=4.
/// Returning NaN marks an order as unavailable.
pub type DerivFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

/// Direct Arrow–Pratt oracle, used instead of differencing the derivative
/// oracle when the aversion is known in closed form.
pub type AversionFn = Arc<dyn Fn(f64) -> Result<ArrowPratt> + Send + Sync>;

/// A φ given by closures, classified on grids only.
#[derive(Clone)]
pub struct CustomPhi {
    pub name: String,
    pub domain: Domain,
    derivs: DerivFn,
    aversion: Option<AversionFn>,
}

impl CustomPhi {
    pub fn new(name: impl Into<String>, domain: Domain, derivs: DerivFn) -> Self {
        Self { name: name.into(), domain, derivs, aversion: None }
    }

    pub fn with_aversion(mut self, aversion: AversionFn) -> Self {
        self.aversion = Some(aversion);
        self
    }
}

impl fmt::Debug for CustomPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPhi").field("name", &self.name).field("domain", &self.domain).finish()
    }
}

/// Risk adjustment applied to continuation utilities.
#[derive(Debug, Clone)]
pub enum RiskAdjustment {
    Identity,
    /// φ(x) = (1/α)(ρx)^{α/ρ}.
    EzPower { alpha: f64, rho: f64 },
    /// φ(x) = −exp(−x/θ).
    Exponential { theta: f64 },
    /// φ(x) = ((1−γ)/γ)(x/(1−γ) + b)^γ.
    Hara { gamma: f64, b: f64 },
    Custom(CustomPhi),
}

impl RiskAdjustment {
    pub fn ez_power(alpha: f64, rho: f64) -> Result<Self> {
        if !(alpha != 0.0 && alpha < 1.0 && rho > 0.0 && rho <= 1.0 && alpha <= rho) {
            return Err(Error::ParamOutOfRange(format!(
                "EZ power needs 0 != alpha < 1, 0 < rho <= 1, alpha <= rho (alpha = {alpha}, rho = {rho})"
            )));
        }
        Ok(Self::EzPower { alpha, rho })
    }

    pub fn exponential(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::ParamOutOfRange(format!("exponential needs theta > 0 (theta = {theta})")));
        }
        Ok(Self::Exponential { theta })
    }

    pub fn hara(gamma: f64, b: f64) -> Result<Self> {
        if !(gamma != 0.0 && gamma < 1.0 && b >= 1.0 / (gamma - 1.0) && b.is_finite()) {
            return Err(Error::ParamOutOfRange(format!(
                "HARA needs 0 != gamma < 1 and b >= 1/(gamma - 1) (gamma = {gamma}, b = {b})"
            )));
        }
        Ok(Self::Hara { gamma, b })
    }

    pub fn custom(name: impl Into<String>, domain: Domain, derivs: DerivFn) -> Self {
        Self::Custom(CustomPhi::new(name, domain, derivs))
    }

    pub fn name(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::EzPower { alpha, rho } => format!("ez_power(alpha={alpha}, rho={rho})"),
            Self::Exponential { theta } => format!("exponential(theta={theta})"),
            Self::Hara { gamma, b } => format!("hara(gamma={gamma}, b={b})"),
            Self::Custom(c) => c.name.clone(),
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self, Self::Custom(_))
    }

    /// Arguments on which φ itself is defined (derivatives may need the interior).
    pub fn domain(&self) -> Domain {
        match *self {
            Self::Identity | Self::Exponential { .. } => Domain::REALS,
            Self::EzPower { alpha, rho } => {
                if alpha / rho > 0.0 {
                    Domain::closed_open(0.0, f64::INFINITY)
                } else {
                    Domain::open(0.0, f64::INFINITY)
                }
            }
            Self::Hara { gamma, b } => {
                let lo = -b * (1.0 - gamma);
                if gamma > 0.0 {
                    Domain::closed_open(lo, f64::INFINITY)
                } else {
                    Domain::open(lo, f64::INFINITY)
                }
            }
            Self::Custom(ref c) => c.domain,
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.domain().contains(x) {
            Ok(())
        } else {
            Err(Error::DomainViolation { what: self.name(), x })
        }
    }

    /// The `order`-th derivative of φ at `x` (order 0 is φ itself).
    pub fn eval(&self, x: f64, order: usize) -> Result<f64> {
        if order > 4 {
            return Err(Error::ParamOutOfRange(format!("derivative order {order} > 4")));
        }
        self.check(x)?;
        let v = match *self {
            Self::Identity => match order {
                0 => x,
                1 => 1.0,
                _ => 0.0,
            },
            Self::EzPower { alpha, rho } => {
                let lam = alpha / rho;
                if order == 0 {
                    (rho * x).powf(lam) / alpha
                } else {
                    let mut coef = rho.powi(order as i32 - 1);
                    for k in 1..order {
                        coef *= lam - k as f64;
                    }
                    coef * (rho * x).powf(lam - order as f64)
                }
            }
            Self::Exponential { theta } => {
                let e = (-x / theta).exp();
                match order {
                    0 => -e,
                    n => {
                        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                        sign * e / theta.powi(n as i32)
                    }
                }
            }
            Self::Hara { gamma, b } => {
                let w = x / (1.0 - gamma) + b;
                if order == 0 {
                    (1.0 - gamma) / gamma * w.powf(gamma)
                } else {
                    let mut coef = 1.0;
                    for k in 1..order {
                        coef *= (gamma - k as f64) / (1.0 - gamma);
                    }
                    coef * w.powf(gamma - order as f64)
                }
            }
            Self::Custom(ref c) => {
                let v = (c.derivs)(x, order);
                if v.is_nan() {
                    return Err(Error::Unsupported(format!("{} has no derivative of order {order}", c.name)));
                }
                v
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DomainViolation { what: format!("{} (order {order})", self.name()), x })
        }
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        self.eval(x, 0)
    }

    /// φ⁻¹(y): closed form for the parametric families, bracketed Newton otherwise.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let bad = || Error::RangeViolation { what: self.name(), y };
        if !y.is_finite() {
            return Err(bad());
        }
        match *self {
            Self::Identity => Ok(y),
            Self::EzPower { alpha, rho } => {
                let lam = alpha / rho;
                let ay = alpha * y;
                if ay > 0.0 || (ay == 0.0 && lam > 0.0) {
                    Ok(ay.powf(1.0 / lam) / rho)
                } else {
                    Err(bad())
                }
            }
            Self::Exponential { theta } => {
                if y < 0.0 {
                    Ok(-theta * (-y).ln())
                } else {
                    Err(bad())
                }
            }
            Self::Hara { gamma, b } => {
                let z = gamma * y / (1.0 - gamma);
                if z > 0.0 || (z == 0.0 && gamma > 0.0) {
                    Ok((1.0 - gamma) * (z.powf(1.0 / gamma) - b))
                } else {
                    Err(bad())
                }
            }
            Self::Custom(ref c) => self.custom_inverse(c, y),
        }
    }

    fn custom_inverse(&self, c: &CustomPhi, y: f64) -> Result<f64> {
        let bad = || Error::RangeViolation { what: c.name.clone(), y };
        let dom = c.domain;
        let f = |x: f64| (c.derivs)(x, 0);
        let start = match (dom.lo.is_finite(), dom.hi.is_finite()) {
            (true, true) => 0.5 * (dom.lo + dom.hi),
            (true, false) => dom.lo + 1.0,
            (false, true) => dom.hi - 1.0,
            (false, false) => 0.0,
        };
        let mut lo = start;
        let mut hi = start;
        let mut step = 1.0;
        for _ in 0..200 {
            if f(lo) <= y {
                break;
            }
            lo = if dom.lo.is_finite() { dom.lo + 0.5 * (lo - dom.lo) } else { lo - step };
            step *= 2.0;
        }
        step = 1.0;
        for _ in 0..200 {
            if f(hi) >= y {
                break;
            }
            hi = if dom.hi.is_finite() { dom.hi - 0.5 * (dom.hi - hi) } else { hi + step };
            step *= 2.0;
        }
        if dom.lo_closed && f(lo) > y && f(dom.lo) <= y {
            lo = dom.lo;
        }
        if dom.hi_closed && f(hi) < y && f(dom.hi) >= y {
            hi = dom.hi;
        }
        if !(f(lo) <= y && f(hi) >= y) {
            return Err(bad());
        }
        if f(lo) == y {
            return Ok(lo);
        }
        if f(hi) == y {
            return Ok(hi);
        }
        let dg = |x: f64| (c.derivs)(x, 1);
        newton_bracketed(f, dg, y, lo, hi, 1e-12, 200).map_err(|_| bad())
    }

    /// Absolute risk aversion −φ″/φ′.
    pub fn abs_risk_aversion(&self, x: f64) -> Result<f64> {
        Ok(-self.eval(x, 2)? / self.eval(x, 1)?)
    }

    /// Certainty equivalent φ⁻¹(Σ pᵢ φ(vᵢ)).
    pub fn certainty_equivalent(&self, values: &[f64], probs: &[f64]) -> Result<f64> {
        let ce = match *self {
            Self::Identity => return Ok(values.iter().zip(probs).map(|(v, p)| v * p).sum()),
            Self::Exponential { theta } => {
                // log-sum-exp keeps large utilities finite
                for &v in values {
                    self.check(v)?;
                }
                let m = values
                    .iter()
                    .zip(probs)
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(v, _)| -v / theta)
                    .fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = values.iter().zip(probs).map(|(v, p)| p * (-v / theta - m).exp()).sum();
                -theta * (m + s.ln())
            }
            _ => {
                let mut acc = 0.0;
                for (&v, &p) in values.iter().zip(probs) {
                    if p > 0.0 {
                        acc += p * self.value(v)?;
                    }
                }
                self.inverse(acc)?
            }
        };
        // a mean of equal values must return that value despite rounding
        let (lo, hi) = values
            .iter()
            .zip(probs)
            .filter(|(_, &p)| p > 0.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (&v, _)| (a.min(v), b.max(v)));
        Ok(ce.clamp(lo, hi))
    }
}

/// Arrow–Pratt quantities at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrowPratt {
    pub a: f64,
    pub r: f64,
    pub a_prime: f64,
    pub r_prime: f64,
    /// Needs the fourth derivative; `None` when φ does not supply it.
    pub r_second: Option<f64>,
}

/// A = −φ″/φ′, R = xA and their derivatives, from analytic derivatives of φ.
pub fn arrow_pratt(phi: &RiskAdjustment, x: f64) -> Result<ArrowPratt> {
    if let RiskAdjustment::Custom(CustomPhi { aversion: Some(f), domain, .. }) = phi {
        if !domain.contains(x) {
            return Err(Error::DomainViolation { what: "arrow_pratt".into(), x });
        }
        return f(x);
    }
    let d1 = phi.eval(x, 1)?;
    let d2 = phi.eval(x, 2)?;
    let d3 = phi.eval(x, 3)?;
    let a = -d2 / d1;
    let a_prime = -d3 / d1 + a * a;
    let r_second = match phi.eval(x, 4) {
        Ok(d4) => {
            let a_second = -d4 / d1 + d3 * d2 / (d1 * d1) + 2.0 * a * a_prime;
            Some(2.0 * a_prime + x * a_second)
        }
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ArrowPratt { a, r: x * a, a_prime, r_prime: a + x * a_prime, r_second })
}

/// Local strength of preference for early resolution:
/// ER(x, y) = −φ″(x)/φ′(x) + β φ″(βx+y)/φ′(βx+y).
pub fn er_measure(phi: &RiskAdjustment, beta: f64, x: f64, y: f64) -> Result<f64> {
    Ok(phi.abs_risk_aversion(x)? - beta * phi.abs_risk_aversion(beta * x + y)?)
}

/// Risk adjustments used as test subjects.
pub mod samples {
    use super::*;

    /// φ(x) = x − x²/2 on [0, 1): increasing absolute risk aversion.
    pub fn quadratic() -> RiskAdjustment {
        RiskAdjustment::custom(
            "quadratic",
            Domain::closed_open(0.0, 1.0),
            Arc::new(|x, n| match n {
                0 => x - 0.5 * x * x,
                1 => 1.0 - x,
                2 => -1.0,
                _ => 0.0,
            }),
        )
    }

    /// φ(x) = x + ln x on (0, ∞): relative risk aversion 1/(1+x), decreasing.
    pub fn drra() -> RiskAdjustment {
        RiskAdjustment::custom(
            "drra_log_linear",
            Domain::open(0.0, f64::INFINITY),
            Arc::new(|x: f64, n| match n {
                0 => x + x.ln(),
                1 => 1.0 + 1.0 / x,
                2 => -1.0 / (x * x),
                3 => 2.0 / (x * x * x),
                _ => -6.0 / (x * x * x * x),
            }),
        )
    }

    /// φ(x) = x² on (0, ∞): strictly convex.
    pub fn convex_square() -> RiskAdjustment {
        RiskAdjustment::custom(
            "convex_square",
            Domain::open(0.0, f64::INFINITY),
            Arc::new(|x, n| match n {
                0 => x * x,
                1 => 2.0 * x,
                2 => 2.0,
                _ => 0.0,
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<(RiskAdjustment, Vec<f64>)> {
        let grid: Vec<f64> = (0..40).map(|i| 0.1 * 1.15f64.powi(i)).collect();
        vec![
            (RiskAdjustment::ez_power(-1.0, 0.5).unwrap(), grid.clone()),
            (RiskAdjustment::ez_power(0.3, 0.5).unwrap(), grid.clone()),
            (RiskAdjustment::exponential(2.0).unwrap(), grid.iter().map(|x| x.min(30.0)).collect()),
            (RiskAdjustment::hara(-2.0, 0.72).unwrap(), grid.clone()),
            (RiskAdjustment::hara(0.5, -0.4).unwrap(), grid.iter().map(|x| x + 0.3).collect()),
            (samples::drra(), grid.clone()),
        ]
    }

    #[test]
    fn closed_form_examples() {
        let e = RiskAdjustment::exponential(1.0).unwrap();
        assert_eq!(e.value(0.0).unwrap(), -1.0);
        let ez = RiskAdjustment::ez_power(0.5, 0.5).unwrap();
        assert!((ez.value(2.0).unwrap() - 2.0).abs() < 1e-15);
        let theta = 3.0;
        let e = RiskAdjustment::exponential(theta).unwrap();
        assert!((e.inverse(-(-2.0 / theta).exp()).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(RiskAdjustment::Identity.inverse(4.5).unwrap(), 4.5);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-5;
        for (phi, grid) in families() {
            for &x in &grid {
                for n in 1..=4 {
                    let fd = (phi.eval(x + h, n - 1).unwrap() - phi.eval(x - h, n - 1).unwrap()) / (2.0 * h);
                    let an = phi.eval(x, n).unwrap();
                    let scale = an.abs().max(phi.eval(x, n - 1).unwrap().abs() * 1e-3).max(1e-8);
                    assert!((fd - an).abs() <= 1e-6 * scale.max(an.abs()) + 1e-6 * scale, "{} n={n} x={x}: {fd} vs {an}", phi.name());
                }
            }
        }
    }

    #[test]
    fn hara_fd_at_u5() {
        let phi = RiskAdjustment::hara(-2.0, 0.72).unwrap();
        let x = 3.0 * 5f64.powf(1.0 / 3.0);
        let h = 1e-5;
        for n in 1..=2 {
            let fd = (phi.eval(x + h, n - 1).unwrap() - phi.eval(x - h, n - 1).unwrap()) / (2.0 * h);
            let an = phi.eval(x, n).unwrap();
            assert!(((fd - an) / an).abs() < 1e-6);
        }
    }

    #[test]
    fn inverse_round_trips() {
        for (phi, grid) in families() {
            for &x in &grid {
                let back = phi.inverse(phi.value(x).unwrap()).unwrap();
                assert!((back - x).abs() <= 1e-10 * x.max(1.0), "{} x={x} back={back}", phi.name());
            }
        }
        let hara = RiskAdjustment::hara(-2.0, 0.72).unwrap();
        for i in 0..=100 {
            let x = 0.1 + i as f64 * (50.0 - 0.1) / 100.0;
            assert!((hara.inverse(hara.value(x).unwrap()).unwrap() - x).abs() < 1e-10);
        }
        let q = samples::quadratic();
        for &x in &[0.0, 0.2, 0.7, 0.95] {
            assert!((q.inverse(q.value(x).unwrap()).unwrap() - x).abs() < 1e-10);
        }
        assert!(matches!(RiskAdjustment::exponential(1.0).unwrap().inverse(0.5), Err(Error::RangeViolation { .. })));
    }

    #[test]
    fn arrow_pratt_closed_forms() {
        let theta = 2.5;
        let e = RiskAdjustment::exponential(theta).unwrap();
        let ap = arrow_pratt(&e, 3.0).unwrap();
        assert!((ap.a - 1.0 / theta).abs() < 1e-15);
        assert!((ap.r - 3.0 / theta).abs() < 1e-14);
        assert!((ap.r_prime - 1.0 / theta).abs() < 1e-14);
        assert!(ap.r_second.unwrap().abs() < 1e-14);

        let (g, b) = (-2.0, 0.72);
        let h = RiskAdjustment::hara(g, b).unwrap();
        for &x in &[0.5, 2.0, 7.0] {
            let ap = arrow_pratt(&h, x).unwrap();
            let expect = (g - 1.0) * (g - 1.0) * b / (b * (1.0 - g) + x).powi(2);
            assert!((ap.r_prime - expect).abs() < 1e-13, "{} {}", ap.r_prime, expect);
            let w = x / (1.0 - g) + b;
            assert!((ap.r_second.unwrap() + 2.0 * b / ((1.0 - g) * w.powi(3))).abs() < 1e-12);
        }

        let ez = RiskAdjustment::ez_power(-1.0, 0.5).unwrap();
        for &x in &[0.3, 1.0, 9.0] {
            let ap = arrow_pratt(&ez, x).unwrap();
            assert!((ap.r - 3.0).abs() < 1e-13);
            assert!(ap.r_prime.abs() < 1e-12);
        }
    }

    #[test]
    fn er_examples() {
        let e = RiskAdjustment::exponential(1.3).unwrap();
        assert!(er_measure(&e, 1.0, 2.0, 0.7).unwrap().abs() < 1e-15);
        assert_eq!(er_measure(&RiskAdjustment::Identity, 0.9, 2.0, 1.0).unwrap(), 0.0);
        let (alpha, rho, beta) = (-1.0, 0.5, 0.9);
        let ez = RiskAdjustment::ez_power(alpha, rho).unwrap();
        for &(x, y) in &[(1.0, 2.0), (3.0, 0.5)] {
            let expect = y * (1.0 - alpha / rho) / (x * (beta * x + y));
            assert!((er_measure(&ez, beta, x, y).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn domain_violations() {
        let ez = RiskAdjustment::ez_power(-1.0, 0.5).unwrap();
        assert!(matches!(ez.value(0.0), Err(Error::DomainViolation { .. })));
        assert!(RiskAdjustment::ez_power(0.5, 0.25).is_err());
        assert!(RiskAdjustment::hara(-2.0, -1.0).is_err());
        assert!(RiskAdjustment::exponential(0.0).is_err());
        assert!(matches!(RiskAdjustment::Identity.eval(1.0, 5), Err(Error::ParamOutOfRange(_))));
    }

    #[test]
    fn certainty_equivalents() {
        let e = RiskAdjustment::exponential(0.01).unwrap();
        let ce = e.certainty_equivalent(&[100.0, 200.0], &[0.5, 0.5]).unwrap();
        assert!((ce - (100.0 + 0.01 * 2f64.ln())).abs() < 1e-9);
        let ez = RiskAdjustment::ez_power(-1.0, 0.5).unwrap();
        let v = 1.2345;
        assert_eq!(ez.certainty_equivalent(&[v, v], &[0.3, 0.7]).unwrap(), v);
    }
}
