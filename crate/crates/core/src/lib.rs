//! Analytic bounds and high-accuracy simulation of the limit cycle of the
//! nondimensional Rosenzweig–MacArthur predator–prey system.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod harness;
pub mod lvroot;
pub mod model;
pub mod region4;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{Case, Params, State};
