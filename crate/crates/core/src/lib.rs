//! Security-measure placement and distributed resilient state estimation for
//! linear multi-agent systems under sensor attacks.
//!
//! `no_std` with `alloc`. File formats and the command-line tool live in the
//! `secest` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod estimation;
pub mod linalg;
pub mod model;
pub mod security;
pub mod sim;

pub use error::{Error, Result};

#[cfg(test)]
mod tests;
