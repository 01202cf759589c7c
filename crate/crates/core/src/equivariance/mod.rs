//! `C*`-equivariance: rational representations and group cohomology,
//! Killing cocycles, weak and homotopy actions, and strictification.

pub mod action;
pub mod family;
pub mod group;
pub mod killing;
pub mod pipeline;
pub mod strict;
pub mod weights;

pub use group::{
    bar_d, cochain_d, verify_group_cohomology, GroupCochain, GroupCohomologyReport, RationalRep,
};
