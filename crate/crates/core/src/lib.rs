//! Constructive machinery for piecewise-polynomial approximation on John
//! domains: integer-exact dyadic geometry, Whitney covers of rasterized
//! domains, metrically consistent cube-trees, balanced partitions of trees
//! and cubes under superadditive product measures, weighted spline
//! approximation with mixed norms, and the width-exponent case table.
//!
//! The crate is `no_std`-compatible (`alloc` required); IO, file formats and
//! the CLI live in the companion `whitney-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cube_partition;
pub mod cube_tree;
pub mod domain_partition;
pub mod dyadic;
pub mod exponents;
pub(crate) mod math;
pub mod measure;
pub mod spline;
pub mod tree_partition;
pub mod whitney;
