//! The constant-absolute-aversion (CAA) transform, which turns the slope of
//! relative risk aversion into a new relative risk aversion.
//!
//! CAA(φ)(x) = ∫₀ˣ exp(−∫₁ᵗ R′_φ(s)/s ds) dt, so that R_{CAA(φ)} = R′_φ.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, DEFAULT_TOL};

use super::phi::{arrow_pratt, ArrowPratt, CustomPhi, Domain, RiskAdjustment};

fn r_prime(phi: &RiskAdjustment, s: f64) -> f64 {
    arrow_pratt(phi, s).map_or(f64::NAN, |ap| ap.r_prime)
}

/// ∫₁ᵗ R′(s)/s ds, written as ∫₀^{ln t} R′(eᵛ) dv.
fn inner(phi: &RiskAdjustment, t: f64) -> Result<f64> {
    if let RiskAdjustment::Identity = phi {
        return Ok(0.0);
    }
    integrate(|v: f64| r_prime(phi, v.exp()), 0.0, t.ln(), DEFAULT_TOL).map(|q| q.value)
}

fn check(phi: &RiskAdjustment, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::DomainViolation { what: "CAA transform".into(), x });
    }
    let dom = phi.domain();
    if dom.lo > 0.0 || !dom.contains(x) {
        return Err(Error::SingularIntegrand(format!("{} is not defined on (0, {x}]", phi.name())));
    }
    if let RiskAdjustment::Exponential { theta } = *phi {
        if theta <= 1.0 {
            return Err(Error::SingularIntegrand(format!("t^(-1/theta) is not integrable at 0 for theta = {theta}")));
        }
    }
    Ok(())
}

/// CAA(φ)(x) by nested adaptive quadrature.
pub fn caa_transform(phi: &RiskAdjustment, x: f64) -> Result<f64> {
    check(phi, x)?;
    if let RiskAdjustment::Identity = phi {
        return Ok(x);
    }
    // t = x s⁴ removes the algebraic endpoint behaviour at t = 0
    let q = integrate(
        |s: f64| {
            let t = x * s.powi(4);
            match inner(phi, t) {
                Ok(v) => (-v).exp() * 4.0 * x * s.powi(3),
                Err(_) => f64::NAN,
            }
        },
        0.0,
        1.0,
        DEFAULT_TOL,
    )?;
    if q.depth_capped {
        return Err(Error::SingularIntegrand(format!("outer integral of CAA({}) did not settle", phi.name())));
    }
    Ok(q.value)
}

/// CAA(φ) as a risk adjustment, so the transform can be iterated.
pub fn caa_phi(phi: &RiskAdjustment) -> Result<RiskAdjustment> {
    check(phi, 1.0)?;
    let base = phi.clone();
    let name = format!("caa({})", phi.name());
    let derivs = {
        let base = base.clone();
        Arc::new(move |x: f64, n: usize| {
            let slope = |x: f64| -> Result<(f64, f64, f64)> {
                let ap = arrow_pratt(&base, x)?;
                let d1 = (-inner(&base, x)?).exp();
                Ok((d1, ap.r_prime, ap.r_second.unwrap_or(f64::NAN)))
            };
            match n {
                0 => caa_transform(&base, x).unwrap_or(f64::NAN),
                1 => slope(x).map_or(f64::NAN, |s| s.0),
                2 => slope(x).map_or(f64::NAN, |(d1, rp, _)| -rp / x * d1),
                3 => slope(x).map_or(f64::NAN, |(d1, rp, r2)| d1 * (-r2 / x + rp / (x * x) + (rp / x).powi(2))),
                _ => f64::NAN,
            }
        })
    };
    let custom = CustomPhi::new(name, Domain::open(0.0, f64::INFINITY), derivs);
    // differencing the derivatives loses R' to cancellation at small x
    let custom = match arrow_pratt(&base, 1.0)?.r_second {
        Some(_) => custom.with_aversion(Arc::new(move |x: f64| {
            let ap = arrow_pratt(&base, x)?;
            let r_prime = ap.r_second.unwrap_or(f64::NAN);
            let a = ap.r_prime / x;
            let a_prime = (r_prime - a) / x;
            Ok(ArrowPratt { a, r: ap.r_prime, a_prime, r_prime, r_second: None })
        })),
        None => custom,
    };
    Ok(RiskAdjustment::Custom(custom))
}
