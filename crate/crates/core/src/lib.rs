//! Repair-efficient erasure codes built by piggybacking.
//!
//! Start with [`mds::CodeParams`] for the base code, then pick a layout:
//! [`mds::MdsLayout`], [`rsr2::Rsr2Code`] or [`genpb::GenPiggyback`]. All of
//! them implement [`framework::Layout`]. [`analysis`] has the closed-form
//! repair ratios and [`sim`] a small storage cluster built on the layouts.

pub mod analysis;
pub mod error;
pub mod framework;
pub mod genpb;
pub mod gf;
pub mod mds;
pub mod repair;
pub mod rsr2;
pub mod sim;
pub mod symbol;

pub use error::{Error, Result};
pub use gf::Gf256;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/field.md")]
    mod field {}
    #[doc = include_str!("../../../book/src/base-code.md")]
    mod base_code {}
    #[doc = include_str!("../../../book/src/piggybacking.md")]
    mod piggybacking {}
    #[doc = include_str!("../../../book/src/rsr2.md")]
    mod rsr2 {}
    #[doc = include_str!("../../../book/src/generalized.md")]
    mod generalized {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/cluster.md")]
    mod cluster {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
