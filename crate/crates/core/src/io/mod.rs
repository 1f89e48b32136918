//! Program text, DOT export, run configuration and JSON reports.

pub mod dot;
pub mod parse;
pub mod config;
pub mod print;
pub mod report;
