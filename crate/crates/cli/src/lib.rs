//! Library side of the `qwalk` experiment runner: config parsing, the four
//! experiment commands, and deterministic CSV/JSON emission.

pub mod commands;
pub mod config;
pub mod output;
