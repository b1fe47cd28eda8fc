//! Jointly optimal communication and control for two agents that can share
//! their local states at a cost.

#![allow(clippy::needless_range_loop)]

pub mod belief;
pub mod error;
pub mod exec;
pub mod pomdp;
pub mod prescriptions;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
