//! Agent-based simulation of a marketplace whose platform and sellers learn
//! to exploit a biased AI shopping agent.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod learners;
pub mod market;

pub use error::{Error, Result};
