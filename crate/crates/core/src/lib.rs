//! Robust bundle pricing under mean–MAD ambiguity.
//!
//! The crate computes worst-case bundling revenue when nature picks the
//! valuation law from all non-negative distributions with a given mean and
//! mean absolute deviation, together with the supporting machinery:
//! exact sum laws, small-instance optimal mechanisms, concentration
//! certificates and the closed-form asymptotic bound chains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod ambiguity;
pub mod asymptotics;
pub mod bundling;
pub mod concentration;
pub mod error;
pub mod numeric;
pub mod opt_oracle;
pub mod robust_solvers;
pub mod sum_law;

pub use ambiguity::{make_pareto_member, make_two_point, verify_membership, MeanMadSpec, MemberDist, TwoPointDist};
pub use error::{Error, Result};
