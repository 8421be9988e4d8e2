//! Headline numbers recomputed from scratch, each with its reference value
//! and tolerance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::longrun::{
    ez_model, hara_comparison_integrals, lrr_persistence_premium, match_longrun_volatility, match_rohde_yu, LrrParams,
};
use crate::premia::dpos_measure;
use crate::risk::{Felicity, KpModel, RiskAdjustment};
use crate::suites::duality_suite;
use crate::taxation::{optimize_tau, TaxParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Table1,
    VolMatch,
    RohdeYu,
    Hara,
    Tax,
    Duality,
}

impl Target {
    pub const ALL: [Target; 6] = [Self::Table1, Self::VolMatch, Self::RohdeYu, Self::Hara, Self::Tax, Self::Duality];

    pub fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::VolMatch => "vol_match",
            Self::RohdeYu => "rohde_yu",
            Self::Hara => "hara",
            Self::Tax => "tax",
            Self::Duality => "duality",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::ParamOutOfRange(format!("unknown reproduce target {s:?}")))
    }
}

/// How an observed value is judged against the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// |observed − expected| ≤ tol.
    Within,
    /// observed ≤ expected.
    AtMost,
    /// observed > expected.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub target: Target,
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tol: f64,
    pub rule: Rule,
    pub passed: bool,
}

impl Check {
    fn new(target: Target, name: &str, observed: f64, expected: f64, tol: f64, rule: Rule) -> Self {
        let passed = match rule {
            Rule::Within => (observed - expected).abs() <= tol,
            Rule::AtMost => observed <= expected,
            Rule::Above => observed > expected,
        };
        Self { target, name: name.into(), observed, expected, tol, rule, passed }
    }

    fn within(target: Target, name: &str, observed: f64, expected: f64, tol: f64) -> Self {
        Self::new(target, name, observed, expected, tol, Rule::Within)
    }

    /// `target/name`, the key used by callers that pin expected outcomes.
    pub fn id(&self) -> String {
        format!("{}/{}", self.target, self.name)
    }
}

/// One row of the long-run-risk parameter table with its premium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrrRow {
    pub sigma: f64,
    pub vol_loading: f64,
    pub a: f64,
    pub beta: f64,
    pub risk_aversion: f64,
    pub rho: f64,
    pub x0: f64,
    pub premium: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub target: Target,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<LrrRow>>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Trees per duality model.
pub const DUALITY_TREES: usize = 100;
pub const DUALITY_SEED: u64 = 2024;

fn lrr_rows() -> Result<Vec<LrrRow>> {
    let base = LrrParams::table1();
    [(0.0, -6.5), (base.a, -6.5), (base.a, -9.0)]
        .into_iter()
        .map(|(a, alpha)| {
            let p = LrrParams { a, ..base.with_alpha(alpha) };
            Ok(LrrRow {
                sigma: p.sigma,
                vol_loading: p.vol_loading,
                a: p.a,
                beta: p.beta,
                risk_aversion: 1.0 - p.alpha,
                rho: p.rho,
                x0: p.x0,
                premium: lrr_persistence_premium(&p)?,
            })
        })
        .collect()
}

pub fn reproduce(target: Target) -> Result<Reproduction> {
    use Target::*;
    let mut rows = None;
    let checks = match target {
        Table1 => {
            let r = lrr_rows()?;
            let c = vec![
                Check::within(target, "premium without persistence", r[0].premium, 0.0, 1e-3),
                Check::within(target, "premium at risk aversion 7.5", r[1].premium, 0.302, 1e-3),
                Check::within(target, "premium at risk aversion 10", r[2].premium, 0.393, 1e-3),
            ];
            rows = Some(r);
            c
        }
        VolMatch => {
            let (sigma, premium) = match_longrun_volatility(&LrrParams::table1())?;
            vec![
                Check::within(target, "matched iid volatility", sigma, 0.0079719, 1e-6),
                Check::within(target, "premium at matched volatility", premium, 0.299790, 1e-4),
            ]
        }
        RohdeYu => {
            let dpos = dpos_measure(&ez_model(-0.61 / 3.0, 1.0 / 3.0, 0.998)?, 10.0, 5.0)?;
            let alpha = match_rohde_yu(0.008, 0.0, 0.998, 10.0, 5.0)?;
            let at_match = lrr_persistence_premium(&LrrParams::table1().with_alpha(alpha))?;
            let at_stated = lrr_persistence_premium(&LrrParams::table1().with_alpha(-0.0345))?;
            vec![
                Check::within(target, "dpos at rho 1/3", dpos, 0.008, 1e-3),
                Check::within(target, "matched alpha at rho 0", alpha, -0.0345, 1e-3),
                Check::within(target, "lrr premium at matched alpha", at_match, 0.0019, 2e-4),
                Check::within(target, "lrr premium at alpha -0.0345", at_stated, 0.0019, 2e-4),
            ]
        }
        Hara => {
            let u = Felicity::scaled_power(3.0, 1.0 / 3.0)?;
            let hara = RiskAdjustment::hara(-2.0, 0.72)?;
            let ez = RiskAdjustment::ez_power(-9.0, 1.0 / 3.0)?;
            let d_hara = dpos_measure(&KpModel::new(hara.clone(), u, 0.998)?, 10.0, 5.0)?;
            let d_ez = dpos_measure(&KpModel::new(ez.clone(), u, 0.998)?, 10.0, 5.0)?;
            let ints = hara_comparison_integrals(&hara, &ez, u, 0.998, 5.0, 10.0)?;
            vec![
                Check::within(target, "dpos hara", d_hara, 0.0341, 5e-4),
                Check::within(target, "dpos ez", d_ez, 0.0341, 5e-4),
                Check::within(target, "early resolution integral hara", ints.er_hara, 0.212242, 1e-3),
                Check::within(target, "early resolution integral ez", ints.er_ez, 3.23792, 1e-2),
                Check::within(target, "relative risk aversion integral hara", ints.rra_hara, 0.581891, 1e-3),
            ]
        }
        Tax => {
            let t0 = optimize_tau(&TaxParams { ability_persistence: 0.0, ..TaxParams::default() })?.tau_star;
            let t6 = optimize_tau(&TaxParams::default())?.tau_star;
            vec![
                Check::within(target, "optimal progressivity, iid ability", t0, 0.4525, 5e-3),
                Check::within(target, "optimal progressivity, persistent ability", t6, 0.5172, 5e-3),
                Check::new(target, "persistence raises progressivity", t6 - t0, 0.0, 0.0, Rule::Above),
            ]
        }
        Duality => {
            let hs = KpModel::new(RiskAdjustment::exponential(1.0)?, Felicity::Log, 0.9)?;
            let ez = KpModel::new(RiskAdjustment::ez_power(-1.0, 0.5)?, Felicity::power(0.5)?, 0.9)?;
            let (hs_report, hs_gap) = duality_suite(&hs, DUALITY_TREES, DUALITY_SEED, 1e-7);
            let (ez_report, ez_gap) = duality_suite(&ez, DUALITY_TREES, DUALITY_SEED, 1e-6);
            let errors = hs_report.counts["evaluation_errors"] + ez_report.counts["evaluation_errors"];
            vec![
                Check::new(target, "max gap entropy cost", hs_gap, 1e-7, 0.0, Rule::AtMost),
                Check::new(target, "max gap renyi cost", ez_gap, 1e-6, 0.0, Rule::AtMost),
                Check::new(target, "evaluation errors", errors as f64, 0.0, 0.0, Rule::AtMost),
            ]
        }
    };
    Ok(Reproduction { target, checks, rows })
}

pub fn reproduce_all() -> Result<Vec<Reproduction>> {
    Target::ALL.into_iter().map(reproduce).collect()
}
