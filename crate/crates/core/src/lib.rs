//! Allocation of stochastic, state-contingent tasks among risk-averse agents.
//!
//! Stochastic loads are reduced to certainty equivalents, a Walrasian
//! auction finds market-clearing state-contingent prices, and the resulting
//! allocation is checked for coalitional stability before and after the
//! network state is revealed.

pub mod auction;
pub mod baselines;
pub mod ce;
pub mod cli;
pub mod core_check;
pub mod error;
pub mod matching;
pub mod report;
pub mod scenario;
pub mod seed;
pub mod utility;

pub use error::{Error, Result};
