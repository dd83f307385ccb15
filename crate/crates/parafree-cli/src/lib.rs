//! Harness library behind the `parafree` binary: configuration schemas,
//! experiment execution, online-to-batch conversion, and the invariant
//! verification suite.

pub mod checks;
pub mod config;
pub mod error;
pub mod experiment;
