//! Recursive (Kreps–Porteus) preferences over finite temporal lotteries.
//!
//! The crate covers lottery construction and canonical forms, the garbling
//! order on information, risk adjustments and the recursive evaluator,
//! persistence and timing premia, long-run-risk and taxation calibrations,
//! the variational dual, infinite-horizon value iteration and randomized
//! property suites.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod horizon;
pub mod info_order;
pub mod longrun;
pub mod lottery;
pub mod premia;
pub mod quadrature;
pub mod reproduce;
pub mod risk;
pub mod roots;
pub mod simplex;
pub mod suites;
pub mod taxation;
pub mod variational;

pub use error::{Error, Result};
pub use lottery::{Distribution, TemporalLottery};
