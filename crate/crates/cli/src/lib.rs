//! Library half of the `fairlab` command line tool.

pub mod artifacts;
pub mod commands;
pub mod config;
