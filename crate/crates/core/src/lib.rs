pub mod error;
pub mod integrate;
pub mod liealg;
pub mod polyvf;
pub mod superpose;
pub mod tdsys;
pub mod transform;

pub use error::{Error, Result};
