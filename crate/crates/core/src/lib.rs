//! Linear bandits under reward misspecification: OFUL, UCB and a robust
//! policy that tests for linearity before committing to either.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod environments;
pub mod error;
pub mod experiments;
pub mod ingest;
pub mod io_util;
pub mod linalg;
pub mod misspec;
pub mod policies;
pub mod rng;

pub use error::{Error, Result};
pub use rng::RngStream;
