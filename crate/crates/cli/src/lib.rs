//! Command-line driver and HTTP service for variational traces.

pub mod cli;
pub mod server;
