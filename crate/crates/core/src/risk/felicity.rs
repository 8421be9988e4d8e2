//! Felicity functions u(c).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-period utility of consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Felicity {
    Linear,
    /// u(c) = c^ρ/ρ.
    Power { rho: f64 },
    Log,
    /// u(c) = s·c^ρ.
    ScaledPower { scale: f64, rho: f64 },
}

impl Felicity {
    pub fn power(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::ParamOutOfRange(format!("power felicity needs rho in (0,1), got {rho}")));
        }
        Ok(Self::Power { rho })
    }

    pub fn scaled_power(scale: f64, rho: f64) -> Result<Self> {
        if !(scale > 0.0 && rho > 0.0 && rho < 1.0) {
            return Err(Error::ParamOutOfRange(format!(
                "scaled power felicity needs scale > 0 and rho in (0,1), got {scale}, {rho}"
            )));
        }
        Ok(Self::ScaledPower { scale, rho })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Linear => "linear".into(),
            Self::Power { rho } => format!("power:{rho}"),
            Self::Log => "log".into(),
            Self::ScaledPower { scale, rho } => format!("scaled_power:{scale}:{rho}"),
        }
    }

    /// Whether `c` lies in the consumption domain.
    pub fn accepts(&self, c: f64) -> bool {
        match self {
            Self::Log => c > 0.0 && c.is_finite(),
            _ => c >= 0.0 && c.is_finite(),
        }
    }

    pub fn eval(&self, c: f64) -> Result<f64> {
        if !self.accepts(c) {
            return Err(Error::DomainViolation { what: format!("felicity {}", self.name()), x: c });
        }
        Ok(match *self {
            Self::Linear => c,
            Self::Power { rho } => c.powf(rho) / rho,
            Self::Log => c.ln(),
            Self::ScaledPower { scale, rho } => scale * c.powf(rho),
        })
    }

    pub fn derivative(&self, c: f64) -> Result<f64> {
        if !self.accepts(c) || c == 0.0 && !matches!(self, Self::Linear) {
            return Err(Error::DomainViolation { what: format!("felicity {}", self.name()), x: c });
        }
        Ok(match *self {
            Self::Linear => 1.0,
            Self::Power { rho } => c.powf(rho - 1.0),
            Self::Log => 1.0 / c,
            Self::ScaledPower { scale, rho } => scale * rho * c.powf(rho - 1.0),
        })
    }

    pub fn inverse(&self, v: f64) -> Result<f64> {
        let bad = || Error::RangeViolation { what: format!("felicity {}", self.name()), y: v };
        if !v.is_finite() {
            return Err(bad());
        }
        match *self {
            Self::Linear => Ok(v),
            Self::Log => Ok(v.exp()),
            Self::Power { rho } if v >= 0.0 => Ok((rho * v).powf(1.0 / rho)),
            Self::ScaledPower { scale, rho } if v >= 0.0 => Ok((v / scale).powf(1.0 / rho)),
            _ => Err(bad()),
        }
    }
}
