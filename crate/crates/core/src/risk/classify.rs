//! Risk-attitude classification of a risk adjustment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::phi::{arrow_pratt, RiskAdjustment};

/// Log-spaced grid of utility arguments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { lo: 0.05, hi: 50.0, n: 200 }
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..self.n).map(|i| (a + (b - a) * i as f64 / (self.n - 1) as f64).exp()).collect()
    }
}

/// First grid pair at which A(x) ≥ βA(βx + y) fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpiViolation {
    pub x: f64,
    pub y: f64,
    /// A(x) − βA(βx + y), negative.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub dara: bool,
    pub irra: bool,
    pub sca: bool,
    pub upi: bool,
    pub concave: bool,
    /// True when dara/irra/sca/concave come from the grid rather than closed forms.
    pub grid_verified: bool,
    pub upi_violation: Option<UpiViolation>,
    /// An interval [z, z̄] on which relative risk aversion decreases.
    pub drra_witness: Option<(f64, f64)>,
}

const TOL: f64 = 1e-12;

fn upi_scan(phi: &RiskAdjustment, beta: f64, pts: &[f64]) -> Option<UpiViolation> {
    pts.par_iter()
        .map(|&x| {
            let ax = phi.abs_risk_aversion(x).ok()?;
            pts.iter().find_map(|&y| {
                let ay = phi.abs_risk_aversion(beta * x + y).ok()?;
                let gap = ax - beta * ay;
                (gap < -TOL * ax.abs().max((beta * ay).abs())).then_some(UpiViolation { x, y, gap })
            })
        })
        .find_first(Option::is_some)
        .flatten()
}

fn drra_scan(phi: &RiskAdjustment, pts: &[f64]) -> Option<(f64, f64)> {
    let rp: Vec<Option<f64>> = pts.iter().map(|&x| arrow_pratt(phi, x).ok().map(|ap| ap.r_prime)).collect();
    let neg = |v: Option<f64>, x: f64| v.is_some_and(|r| r < -TOL * x.max(1.0));
    let start = (0..pts.len()).find(|&i| neg(rp[i], pts[i]))?;
    let mut end = start;
    while end + 1 < pts.len() && neg(rp[end + 1], pts[end + 1]) {
        end += 1;
    }
    if end == start {
        // a single point: widen to its neighbours inside the domain
        let lo = pts[start] * 0.999;
        let hi = pts[start] * 1.001;
        return Some((lo, hi));
    }
    Some((pts[start], pts[end]))
}

/// Classifies φ: closed families analytically, custom φ on the grid. UPI is
/// always checked on the grid with the supplied β.
pub fn classify(phi: &RiskAdjustment, beta: f64, grid: &Grid) -> Classification {
    let dom = phi.domain();
    let pts: Vec<f64> = grid.points().into_iter().filter(|&x| dom.interior(x)).collect();
    let upi_violation = upi_scan(phi, beta, &pts);
    let (dara, irra, sca, concave, grid_verified) = match *phi {
        RiskAdjustment::Identity | RiskAdjustment::Exponential { .. } | RiskAdjustment::EzPower { .. } => {
            (true, true, true, true, false)
        }
        RiskAdjustment::Hara { b, .. } => (true, b >= 0.0, b == 0.0, true, false),
        RiskAdjustment::Custom(_) => {
            let aps: Vec<_> = pts.iter().filter_map(|&x| arrow_pratt(phi, x).ok().map(|ap| (x, ap))).collect();
            let dara = aps.iter().all(|(_, ap)| ap.a_prime <= TOL * ap.a.abs().max(1.0));
            let irra = aps.iter().all(|(x, ap)| ap.r_prime >= -TOL * x.max(1.0));
            let sca = irra
                && aps.iter().all(|(x, ap)| match ap.r_second {
                    Some(r2) => r2 >= -TOL * x.max(1.0),
                    None => true,
                });
            let concave = pts.iter().all(|&x| phi.eval(x, 2).map_or(true, |d2| d2 <= TOL));
            (dara, irra, sca, concave, true)
        }
    };
    let drra_witness = if irra { None } else { drra_scan(phi, &pts) };
    Classification { dara, irra, sca, upi: upi_violation.is_none(), concave, grid_verified, upi_violation, drra_witness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::phi::samples;

    #[test]
    fn hara_nonnegative_b_is_upi_and_irra() {
        for b in [0.0, 0.72, 3.0] {
            let c = classify(&RiskAdjustment::hara(-2.0, b).unwrap(), 0.95, &Grid::default());
            assert!(c.upi && c.irra && c.dara && c.concave, "b={b}: {c:?}");
            assert_eq!(c.sca, b == 0.0);
        }
    }

    #[test]
    fn exponential_is_cara() {
        let c = classify(&RiskAdjustment::exponential(1.0).unwrap(), 1.0, &Grid::default());
        assert!(c.dara && c.irra && c.sca && c.upi && !c.grid_verified);
    }

    #[test]
    fn quadratic_fails_dara_and_upi() {
        let c = classify(&samples::quadratic(), 1.0, &Grid::default());
        assert!(!c.dara && !c.upi && c.grid_verified);
        let v = c.upi_violation.unwrap();
        assert!(v.gap < 0.0 && v.x + v.y < 1.0);
    }

    #[test]
    fn drra_has_witness() {
        let c = classify(&samples::drra(), 1.0, &Grid::default());
        assert!(!c.irra);
        let (z, zbar) = c.drra_witness.unwrap();
        assert!(z < zbar);
        let c = classify(&RiskAdjustment::hara(-0.5, -0.4).unwrap(), 1.0, &Grid::default());
        assert!(!c.irra);
        let (z, _) = c.drra_witness.unwrap();
        assert!(z > 0.6);
    }

    #[test]
    fn ez_and_identity() {
        let c = classify(&RiskAdjustment::ez_power(-1.0, 0.5).unwrap(), 0.9, &Grid::default());
        assert!(c.upi && c.irra && c.sca);
        let c = classify(&RiskAdjustment::Identity, 0.9, &Grid::default());
        assert!(c.upi && c.irra && c.sca && c.concave);
    }
}
