//! Admission pricing for an unobservable single-server queue whose customers
//! are risk averse: equilibrium joining rates, the rates a provider can induce
//! with lead-time guarantees, entrance fees and delay compensation, and the
//! resulting profit.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod loadcontrol;
pub mod model;
pub mod numeric;
pub mod sim;
pub mod utility;

pub use error::{Error, Result};
pub use model::{ExtendedValue, LeadTime, MarketParams, Policy};
pub use utility::UtilityModel;
