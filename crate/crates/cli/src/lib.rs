//! Command implementations and file formats for the `sylv` binary.

pub mod commands;
pub mod error;
pub mod format;
