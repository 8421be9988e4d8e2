//! Risk adjustments, felicities, the recursive evaluator and risk attitudes.

pub mod caa;
pub mod classify;
pub mod felicity;
pub mod kp;
pub mod phi;

pub use caa::{caa_phi, caa_transform};
pub use classify::{classify, Classification, Grid, UpiViolation};
pub use felicity::Felicity;
pub use kp::{continuation_value, hedging_compare, kp_evaluate, kp_node_values, present_equivalent, Hedging, KpModel};
pub use phi::{arrow_pratt, er_measure, samples, ArrowPratt, CustomPhi, Domain, RiskAdjustment};
