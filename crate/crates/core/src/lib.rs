//! Joint task splitting, satellite precoding and subchannel allocation for
//! satellite-terrestrial vehicular edge computing.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod alpha;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod model;
pub mod orchestrator;
pub mod precoding;
pub mod rng;
pub mod split;

pub use error::{Error, Result};
