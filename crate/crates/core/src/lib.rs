//! Minimum-error quantum state discrimination with verifiable optimality
//! certificates.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod format;
pub mod helstrom;
pub mod nosignaling;
pub mod quantum;
pub mod solver;
pub mod steering;

pub use error::{Error, Result};
