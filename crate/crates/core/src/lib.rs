//! Clustering-based hybrid precoding for multi-user mmWave massive MIMO
//! downlinks.
//!
//! The crate covers the whole link-level chain:
//!
//! * [`channel`]: clustered mmWave channels with planar-array responses,
//!   per-user constant-modulus combiners and the equivalent MISO channel;
//! * [`digital`]: MF / ZF / RZF full-digital targets and their exact
//!   decomposition onto `2K` fully-connected RF chains;
//! * [`fhp`]: fully-connected design by hierarchical agglomerative
//!   clustering of RF-chain components;
//! * [`ahp`]: adaptively- and sub-connected design by size-balanced
//!   K-means over antenna rows with alternating-optimization centers;
//! * [`metrics`]: SINR, sum rate, hardware power and power efficiency;
//! * [`harness`]: seeded Monte Carlo scenarios and CSV/JSON export.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ahp;
pub mod channel;
pub mod digital;
pub mod error;
pub mod fhp;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod partition;

pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, C64};
