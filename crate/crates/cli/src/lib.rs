//! Command-line front end: spec files, commands and JSON/CSV reports.

pub mod commands;
pub mod spec;
