//! Command-line tool and HTTP session service over an `hrrt` workspace.
//!
//! The CLI and the service share [`ops`], so a command and the matching
//! endpoint leave identical files behind.

pub mod cli;
pub mod error;
pub mod ops;
pub mod server;
pub mod session;
pub mod store;

pub use error::Error;
pub use store::Store;
