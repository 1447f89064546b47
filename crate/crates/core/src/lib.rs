//! Structural analysis of evolving, machine-generated Python code.

pub mod astfeat;
pub mod ceg;
pub mod codemetrics;
pub mod embed;
pub mod error;
pub mod features;
pub mod ingest;
pub mod pyast;
pub mod report;

pub use error::{Error, Result};
