//! Front end for `fedarch-core`: file loading, a command line and an HTTP
//! service over the same library calls.
//!
//! The HTTP service is deliberately thin. Every endpoint deserializes its
//! body, calls the library and serializes the result, so its responses are
//! byte-for-byte what a direct call would produce.

pub mod api;
pub mod cli;
pub mod io;
pub mod runs;
pub mod validation;

pub use io::{load_catalog, AppError, CATALOG_ENV};
