//! Depth-based robust monitoring of data streams.
//!
//! The crate covers weighted L^p depth and its derived tools (median,
//! central regions, DD-plots, depth-rank Wilcoxon tests), depth-based
//! robust binning feeding a constrained local polynomial estimator of the
//! predictive density, two sequential monitors built on them, and a
//! regime-switching stream simulator to validate everything against.

pub mod binning;
pub mod cde;
pub mod cli;
pub mod depth;
pub mod distance;
pub mod error;
pub mod experiment;
pub mod io;
pub mod monitor;
pub mod rank;
pub mod sim;
pub mod stats;
pub mod window;

pub use error::{Error, Result};
