//! Flat `key = value` config files (TOML syntax) for models and calibration
//! parameters. Unknown keys, and keys the chosen family does not use, are
//! rejected.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use corrpref::risk::{Felicity, KpModel, RiskAdjustment};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Identity,
    EzPower,
    Exponential,
    Hara,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FelicityKind {
    Linear,
    Log,
    Power,
    ScaledPower,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub b: Option<f64>,
    pub beta: f64,
    #[serde(default = "linear")]
    pub felicity: FelicityKind,
    /// Multiplier of the scaled power felicity.
    pub scale: Option<f64>,
}

fn linear() -> FelicityKind {
    FelicityKind::Linear
}

fn invalid(e: corrpref::Error) -> Failure {
    Failure::Usage(format!("model config: {e}"))
}

impl ModelConfig {
    fn need(&self, key: &str, v: Option<f64>) -> Result<f64, Failure> {
        v.ok_or_else(|| Failure::Usage(format!("model config: family/felicity needs `{key}`")))
    }

    fn unused(&self) -> Vec<&'static str> {
        let fam: &[&str] = match self.family {
            Family::Identity => &[],
            Family::EzPower => &["alpha", "rho"],
            Family::Exponential => &["theta"],
            Family::Hara => &["gamma", "b"],
        };
        let fel: &[&str] = match self.felicity {
            FelicityKind::Linear | FelicityKind::Log => &[],
            FelicityKind::Power => &["rho"],
            FelicityKind::ScaledPower => &["scale", "rho"],
        };
        [
            ("alpha", self.alpha),
            ("rho", self.rho),
            ("theta", self.theta),
            ("gamma", self.gamma),
            ("b", self.b),
            ("scale", self.scale),
        ]
        .into_iter()
        .filter(|(k, v)| v.is_some() && !fam.contains(k) && !fel.contains(k))
        .map(|(k, _)| k)
        .collect()
    }

    pub fn phi(&self) -> Result<RiskAdjustment, Failure> {
        Ok(match self.family {
            Family::Identity => RiskAdjustment::Identity,
            Family::EzPower => RiskAdjustment::ez_power(self.need("alpha", self.alpha)?, self.need("rho", self.rho)?).map_err(invalid)?,
            Family::Exponential => RiskAdjustment::exponential(self.need("theta", self.theta)?).map_err(invalid)?,
            Family::Hara => RiskAdjustment::hara(self.need("gamma", self.gamma)?, self.need("b", self.b)?).map_err(invalid)?,
        })
    }

    pub fn felicity(&self) -> Result<Felicity, Failure> {
        Ok(match self.felicity {
            FelicityKind::Linear => Felicity::Linear,
            FelicityKind::Log => Felicity::Log,
            FelicityKind::Power => Felicity::power(self.need("rho", self.rho)?).map_err(invalid)?,
            FelicityKind::ScaledPower => {
                Felicity::scaled_power(self.need("scale", self.scale)?, self.need("rho", self.rho)?).map_err(invalid)?
            }
        })
    }

    pub fn model(&self) -> Result<KpModel, Failure> {
        KpModel::new(self.phi()?, self.felicity()?, self.beta).map_err(invalid)
    }
}

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn parse<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    toml::from_str(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<ModelConfig, Failure> {
    let cfg: ModelConfig = parse(path)?;
    let unused = cfg.unused();
    if !unused.is_empty() {
        return Err(Failure::Usage(format!("{}: keys {unused:?} are not used by this family and felicity", path.display())));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from(s: &str) -> Result<ModelConfig, String> {
        let cfg: ModelConfig = toml::from_str(s).map_err(|e| e.to_string())?;
        match cfg.unused() {
            u if u.is_empty() => Ok(cfg),
            u => Err(format!("{u:?}")),
        }
    }

    #[test]
    fn families() {
        let m = from("family = \"ez_power\"\nalpha = -1.0\nrho = 0.5\nbeta = 0.9\nfelicity = \"power\"").unwrap().model().unwrap();
        assert_eq!(m.u, Felicity::Power { rho: 0.5 });
        let m = from("family = \"exponential\"\ntheta = 2.0\nbeta = 1.0").unwrap().model().unwrap();
        assert_eq!(m.u, Felicity::Linear);
        assert!(from("family = \"hara\"\ngamma = -2.0\nb = 0.72\nbeta = 0.998\nfelicity = \"scaled_power\"\nscale = 3.0\nrho = 0.3333")
            .unwrap()
            .model()
            .is_ok());
    }

    #[test]
    fn rejects_unknown_and_unused_keys() {
        assert!(from("family = \"identity\"\nbeta = 0.9\ncolour = 1.0").is_err());
        assert!(from("family = \"exponential\"\ntheta = 1.0\nalpha = 2.0\nbeta = 0.9").is_err());
        assert!(from("family = \"wiggly\"\nbeta = 0.9").is_err());
    }

    #[test]
    fn missing_parameter_is_usage() {
        let cfg = from("family = \"exponential\"\nbeta = 0.9").unwrap();
        assert!(matches!(cfg.phi(), Err(Failure::Usage(_))));
    }
}
