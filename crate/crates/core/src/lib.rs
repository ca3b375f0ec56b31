//! Loss and coherent-crosstalk simulation for coherent MZI-mesh photonic
//! neural networks, from the 2x2 device up to multi-layer networks.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dataset;
pub mod device;
pub mod error;
pub mod mesh;
pub mod numerics;
pub mod propagation;

pub use error::{Error, Result};
