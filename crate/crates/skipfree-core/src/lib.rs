//! Potential kernels, passage-time laws, spectral diagnostics and mixing bounds for finite
//! upward skip-free Markov chains.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command line and
//! parallel drivers live in the `skipfree` crate.

#![no_std]
// `!(x > 0.0)` also rejects NaN, which is the point of those guards.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

// Float math comes from `num_traits::Float` (libm). When another crate in the build links
// std, the inherent f64 methods win and those imports show up as unused.

pub mod chain;
pub mod cutoff;
pub mod ergodicity;
pub mod error;
pub mod fixtures;
pub mod fluctuation;
pub mod linalg;
pub mod mixture;
pub mod passage;
pub mod potential;
pub mod simulate;
pub mod spectral;

pub use chain::{Boundary, ChainSpec, HittingSpec, Measure, Region, ValidationReport, Violation};
pub use error::{Error, Result};
pub use mixture::GeometricMixture;
