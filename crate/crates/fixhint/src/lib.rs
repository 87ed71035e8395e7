//! File formats, persistence, link extraction and the command line around
//! [`fixhint_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod linker;
pub mod store;

pub use error::{Error, Result};
