//! Max-min throughput optimization for cluster-based cooperative
//! wireless powered networks sharing spectrum with a primary link.

pub mod benchmarks;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod rates;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
