//! Configuration, runners, and report formats behind the `thinshell`
//! command-line tool.

pub mod config;
pub mod report;
pub mod runner;
