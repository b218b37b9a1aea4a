//! Non-stochastic online learning for energy-efficient mobility management in
//! ultra-dense small-cell networks.
//!
//! A user equipment picks one small base station (SBS) per slot, pays the
//! normalized service energy of that SBS plus a handover cost whenever it
//! switches, and learns only from the energy of the SBS it used.

pub mod acceptance;
pub mod baselines;
pub mod brew;
pub mod cli;
pub mod env;
pub mod error;
pub mod ew;
pub mod experts;
pub mod harness;
pub mod model;
pub mod policy;
pub mod rng;
pub mod udn;

pub use error::{Error, Result};
pub use model::{AvailableSet, NormalizedEnergy, SbsId};
